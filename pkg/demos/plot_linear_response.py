"""
Linear response and the Kerr term
=================================

Without the Kerr term the oscillator is linear, and the mean amplitude follows
a damped, driven first-order equation with a closed-form solution. The drive
``u(t) (a + a^+)`` only pushes the P quadrature, so <X> stays at zero until the
Kerr term rotates part of the response into X.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from kerrqrc.quantum import ReservoirParams, build_quadratures, qrc_trajectory
from kerrqrc.task import MEAN_PARAMS, sample_times

out = Path("demo_output")
out.mkdir(exist_ok=True)
t = sample_times()
phase = 0.4

###############################################################################
# Closed form for K = 0, with c = kappa/2:
#   a(t) = -(alpha/2) [e^{i phi} (e^{i w t} - e^{-ct}) / (c + i w)
#                      - e^{-i phi} (e^{-i w t} - e^{-ct}) / (c - i w)]

c, alpha, omega = 0.5, 6.0, 10.0
a_exact = -(alpha / 2) * (
    np.exp(1j * phase) * (np.exp(1j * omega * t) - np.exp(-c * t)) / (c + 1j * omega)
    - np.exp(-1j * phase) * (np.exp(-1j * omega * t) - np.exp(-c * t)) / (c - 1j * omega)
)

###############################################################################
# The full density-matrix simulation at K = 0 and at the mean Kerr value.

x_op, p_op = build_quadratures(12)
linear = qrc_trajectory(ReservoirParams(0.0, 1.0, alpha, omega, 12), [phase], t)[0]
kerr = qrc_trajectory(MEAN_PARAMS, [phase], t)[0]

def expect(rho, op):
    return np.einsum("tmn,nm->t", rho, op).real

print("K=0, max |<P> - sqrt2 Im a|:", np.abs(expect(linear, p_op) - np.sqrt(2) * a_exact.imag).max())
print("K=0, max |<X>|:", np.abs(expect(linear, x_op)).max())

fig, ax = plt.subplots(2, 1, sharex=True, figsize=(6, 5))
ax[0].plot(t, np.sqrt(2) * a_exact.imag, "k", lw=3, alpha=0.3, label="closed form")
ax[0].plot(t, expect(linear, p_op), label="K=0")
ax[0].plot(t, expect(kerr, p_op), label="K=-2")
ax[0].set_ylabel("<P>")
ax[0].legend()
ax[1].plot(t, expect(linear, x_op), label="K=0")
ax[1].plot(t, expect(kerr, x_op), label="K=-2")
ax[1].set_ylabel("<X>  (reservoir output)")
ax[1].set_xlabel("time (1/kappa)")
fig.tight_layout()
fig.savefig(out / "linear_response.png", dpi=120)
