import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kerrqrc.classical import (
    BlochVector,
    HVCoords,
    bloch_from_density,
    bloch_from_hv,
    crc_features,
    crc_rhs,
    hv_from_bloch,
    hv_transform,
    hvrc_features,
    quadratures,
    simulate_crc,
    simulate_hvrc,
)
from kerrqrc.quantum import ReservoirParams, qrc_features, qrc_trajectory
from kerrqrc.task import MEAN_PARAMS, sample_times

from _oracles import linear_response, quantum_quadratures

TIMES = sample_times()
finite = st.floats(-3, 3, allow_nan=False)


def test_rhs_origin_fixed_point():
    assert crc_rhs(0j, MEAN_PARAMS, 0.0) == 0


def test_rhs_pure_decay():
    p = ReservoirParams(0, 1, 6, 10)
    for form in ("literal", "normal_ordered"):
        assert crc_rhs(1 + 0j, p, 0.0, form) == pytest.approx(-0.5)


def test_rhs_literal_substitution():
    p = ReservoirParams(1, 0, 6, 10)
    assert crc_rhs(1 + 0j, p, 0.0, "literal") == pytest.approx(1j)


def test_rhs_normal_ordered_substitution():
    p = ReservoirParams(1, 0, 6, 10)
    # -i K (1 + 2|a|^2) a at a = 1
    assert crc_rhs(1 + 0j, p, 0.0, "normal_ordered") == pytest.approx(-3j)


def test_rhs_unknown_form():
    with pytest.raises(ValueError, match="form"):
        crc_rhs(0j, MEAN_PARAMS, 0.0, "cubic")


def test_quadratures_recover_amplitude():
    x, p = quadratures(np.array([0.3 - 0.2j]))
    assert np.allclose((x + 1j * p) / np.sqrt(2), 0.3 - 0.2j)


@pytest.mark.parametrize("form", ["literal", "normal_ordered"])
def test_crc_zero_drive(form):
    fs = simulate_crc(ReservoirParams(-2, 1, 0, 10), 0.4, TIMES, form=form)
    assert np.array_equal(fs.values, np.zeros((1, 100)))


def test_crc_linear_limit_matches_quantum():
    p = ReservoirParams(0.0, 0.95, 5.5, 10.4, dim=12)
    phases = [0.0, 0.8, np.pi / 2]
    c = crc_features(p, phases, TIMES, full_quadratures=True)
    q = quantum_quadratures(p, phases, TIMES)
    for k in range(2):
        assert np.sqrt(np.mean((c[:, k] - q[k]) ** 2, axis=1)).max() <= 1e-6
    assert np.abs(q[1]).max() > 0.5


def test_crc_k0_matches_closed_form():
    p = ReservoirParams(0.0, 1.2, 6.5, 9.0)
    for form in ("literal", "normal_ordered"):
        # normal_ordered keeps a -iK(...)a term, which also vanishes at K = 0
        c = crc_features(p, [0.3], TIMES, full_quadratures=True, form=form)[0]
        a = linear_response(TIMES, 1.2, 6.5, 9.0, 0.3)
        assert np.abs(c[0] - np.sqrt(2) * a.real).max() <= 1e-7
        assert np.abs(c[1] - np.sqrt(2) * a.imag).max() <= 1e-7


def test_full_quadratures_shape_and_order():
    fs = simulate_crc(MEAN_PARAMS, 0.4, TIMES, full_quadratures=True, form="normal_ordered")
    assert fs.n_out == 2
    x_only = simulate_crc(MEAN_PARAMS, 0.4, TIMES, form="normal_ordered")
    assert np.array_equal(fs.values[0], x_only.values[0])
    assert np.array_equal(fs.stacked()[:2], fs.values[:, 0])


def test_literal_form_is_linear_in_drive():
    # The literal equation is linear, so features are affine in (sin phi, cos phi).
    p = MEAN_PARAMS
    f = crc_features(p, [0.0, np.pi / 2, 0.6], TIMES)[:, 0]
    combo = np.cos(0.6) * f[0] + np.sin(0.6) * f[1]
    assert np.allclose(f[2], combo, atol=1e-7)


def test_bloch_examples():
    ket0 = np.diag([1.0, 0.0]).astype(complex)
    plus = np.full((2, 2), 0.5, dtype=complex)
    assert np.allclose(bloch_from_density(ket0), (0, 0, 1))
    assert np.allclose(bloch_from_density(np.eye(2) / 2), (0, 0, 0))
    assert np.allclose(bloch_from_density(plus), (1, 0, 0))


def test_bloch_requires_qubit():
    with pytest.raises(ValueError):
        bloch_from_density(np.eye(3) / 3)


@pytest.mark.parametrize(
    "b,expected",
    [
        ((1, 0, 0), (1, np.pi / 2, 0)),
        ((0, 0, 1), (1, 0, 0)),
        ((0.5, 0, 0), (0.25, np.pi / 2, 0)),
        ((0, 0, 0), (0, 0, 0)),
        ((-1, 0, 0), (1, np.pi / 2, np.pi)),
        ((0, 0, -0.5), (0.25, np.pi, 0)),
    ],
)
def test_hv_examples(b, expected):
    assert np.allclose(hv_from_bloch(BlochVector(*b)), expected, atol=1e-15)


def test_hv_conventional_radius():
    assert np.allclose(hv_from_bloch(BlochVector(0.5, 0, 0), "conventional"), (0.5, np.pi / 2, 0))


def test_hv_clips_arccos_argument():
    # Literal r = 0.25 < |z| = 0.5 would give z/r = 2 without clipping.
    assert hv_from_bloch(BlochVector(0, 0, 0.5)).theta == 0.0


def test_hv_negative_zero_azimuth_folds():
    assert hv_from_bloch(BlochVector(-1.0, -0.0, 0.0)).phi == np.pi


def test_hv_unknown_radius():
    with pytest.raises(ValueError):
        hv_from_bloch(BlochVector(1, 0, 0), "cubed")


@settings(max_examples=200, deadline=None)
@given(x=finite, y=finite, z=finite)
def test_hv_ranges(x, y, z):
    hv = hv_from_bloch(BlochVector(x, y, z))
    assert hv.r >= 0
    assert 0 <= hv.theta <= np.pi
    assert -np.pi < hv.phi <= np.pi


@settings(max_examples=200, deadline=None)
@given(theta=st.floats(1e-3, np.pi - 1e-3), phi=st.floats(-np.pi, np.pi))
def test_unit_sphere_roundtrip(theta, phi):
    b = BlochVector(np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta))
    for radius in ("literal", "conventional"):
        back = bloch_from_hv(hv_from_bloch(b, radius))
        assert np.allclose(back, b, atol=1e-10, rtol=0)


@settings(max_examples=200, deadline=None)
@given(x=finite, y=finite, z=finite)
def test_conventional_roundtrip_off_sphere(x, y, z):
    if x * x + y * y == 0:
        return
    back = bloch_from_hv(hv_from_bloch(BlochVector(x, y, z), "conventional"))
    assert np.allclose(back, (x, y, z), atol=1e-10, rtol=0)


def test_hvrc_zero_drive_is_north_pole():
    fs = simulate_hvrc(ReservoirParams(-2, 1, 0, 10), 0.3, TIMES)
    assert fs.n_out == 3
    assert np.allclose(fs.values, np.array([[1.0], [0.0], [0.0]]) * np.ones(100), atol=0)


def test_hvrc_forces_qubit_and_is_pointwise_map():
    phases = [0.2, 1.1]
    hv = hvrc_features(MEAN_PARAMS, phases, TIMES)
    full = qrc_features(MEAN_PARAMS.with_dim(2), phases, TIMES, full_tomography=True)
    for b in range(2):
        for k in range(100):
            expected = hv_from_bloch(BlochVector(*full[b, :, k]))
            assert np.array_equal(hv[b, :, k], expected)
    assert np.array_equal(hv_transform(full), hv)


def test_hvrc_deterministic():
    a = simulate_hvrc(MEAN_PARAMS, 0.9, TIMES)
    b = simulate_hvrc(MEAN_PARAMS, 0.9, TIMES)
    assert np.array_equal(a.values, b.values)


def test_hvrc_conventional_roundtrip_on_trajectory():
    full = qrc_features(MEAN_PARAMS.with_dim(2), [0.5], TIMES, full_tomography=True)[0]
    hv = hv_transform(full, "conventional")
    back = np.stack(bloch_from_hv(HVCoords(*hv)))
    mask = full[0] ** 2 + full[1] ** 2 > 0
    assert np.abs(back[:, mask] - full[:, mask]).max() <= 1e-10


def test_bloch_norm_bounded_on_simulations():
    rng = np.random.default_rng(7)
    for _ in range(5):
        p = ReservoirParams(*(np.array([-2, 1, 6, 10]) * (1 + 0.1 * rng.normal(size=4))), dim=2)
        rho = qrc_trajectory(p, rng.uniform(0, np.pi / 2, 3), TIMES)
        b = bloch_from_density(rho)
        assert (b.x**2 + b.y**2 + b.z**2).max() <= 1 + 1e-8
