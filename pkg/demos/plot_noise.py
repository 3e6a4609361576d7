"""
Output and input noise
======================

Output noise models finite measurement statistics: Gaussian noise added to
every sampled feature. Input noise perturbs the drive itself and needs the
fixed-step integrator, with the noise held constant over each step.
"""

import numpy as np

from kerrqrc.integrators import IntegratorConfig
from kerrqrc.quantum import qrc_features, qrc_trajectory
from kerrqrc.readout import TrainingSet, feature_matrix, gamma_sweep
from kerrqrc.task import (
    MEAN_PARAMS,
    add_output_noise,
    input_noise,
    measurement_uncertainty,
    repeated_uncertainty,
    rng_for,
    sample_times,
    training_phases,
)
from kerrqrc import task

t = sample_times()
train = training_phases(10)
test = task.test_phases(100, seed=3)
phases = np.concatenate([train, test])

###############################################################################
# How many repetitions would a given output noise level correspond to? The
# single-shot spread of X in the reservoir state sets the scale.

rho = qrc_trajectory(MEAN_PARAMS, [0.7], t)[0, -1]
delta = measurement_uncertainty(rho)
print(f"single-shot std of X at t=2: {delta:.3f}; after 10^6 shots: {repeated_uncertainty(delta, 10**6):.1e}")


def score(feats):
    ts = TrainingSet.from_batch(train, feats[: train.size])
    return gamma_sweep(ts, feature_matrix(feats[train.size:]), test)[1]


clean = qrc_features(MEAN_PARAMS, phases, t)
print(f"noiseless RMS {score(clean):.2e}")

###############################################################################
# Output noise, one realisation rescaled across levels.

for s in (1e-4, 1e-3, 1e-2):
    noisy = add_output_noise(clean, s * MEAN_PARAMS.drive_amp, rng_for(0, "demo-output"))
    print(f"output noise sigma/alpha={s:g}: RMS {score(noisy):.2e}")

###############################################################################
# Input noise on a fixed grid of dt = 0.001 (2000 steps).

cfg = IntegratorConfig(fixed_dt=0.001)
for s in (1e-4, 1e-3):
    xi = input_noise(2000, phases.size, s * MEAN_PARAMS.drive_amp, rng_for(0, "demo-input"))
    feats = qrc_features(MEAN_PARAMS, phases, t, cfg=cfg, input_noise=xi)
    print(f"input noise sigma/alpha={s:g}: RMS {score(feats):.2e}")
