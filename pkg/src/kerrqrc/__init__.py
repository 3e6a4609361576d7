"""Reservoir computing with a single driven Kerr oscillator.

Quantum (Lindblad), classical and hidden-variable qubit reservoirs, a ridge
readout, the sine-phase estimation task and sweep drivers.
"""

__version__ = "0.1.0"

from .quantum import (  # noqa: E402
    FeatureSeries,
    ReservoirParams,
    build_hamiltonian,
    build_lowering,
    check_truncation,
    lindblad_rhs,
    qrc_features,
    simulate_qrc,
)
from .classical import (  # noqa: E402
    bloch_from_density,
    crc_features,
    crc_rhs,
    hv_from_bloch,
    hvrc_features,
    simulate_crc,
    simulate_hvrc,
)
from .readout import (  # noqa: E402
    GAMMA_GRID,
    ReadoutWeights,
    TrainingSet,
    gamma_sweep,
    predict,
    rms_error,
    spread_factor,
    train_readout,
)
from .task import (  # noqa: E402
    MEAN_PARAMS,
    ParameterDistribution,
    TaskConfig,
    sample_times,
    test_phases,
    training_phases,
)
