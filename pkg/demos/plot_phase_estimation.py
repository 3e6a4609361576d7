"""
Estimating the phase of a sine wave
===================================

A reservoir is driven by ``alpha sin(omega t + phi)`` and its <X> output is
sampled 100 times. A linear readout, trained by ridge regression on a small
grid of known phases, then estimates phi for unseen signals.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from kerrqrc.classical import crc_features
from kerrqrc.quantum import qrc_features
from kerrqrc.readout import TrainingSet, feature_matrix, gamma_sweep, predict
from kerrqrc.task import MEAN_PARAMS, sample_times, training_phases
from kerrqrc import task

out = Path("demo_output")
out.mkdir(exist_ok=True)
t = sample_times()
train = training_phases(20)
test = task.test_phases(300, seed=1)

###############################################################################
# Features for the quantum reservoir (d=12) and the classical one in its
# normal-ordered Kerr form. Each model gets the same phases.

models = {
    "QRC d=12": lambda ph: qrc_features(MEAN_PARAMS, ph, t),
    "CRC": lambda ph: crc_features(MEAN_PARAMS, ph, t, form="normal_ordered"),
}

fig, ax = plt.subplots(figsize=(5, 4))
for name, feats in models.items():
    ts = TrainingSet.from_batch(train, feats(train))
    s_test = feature_matrix(feats(test))
    w, rms = gamma_sweep(ts, s_test, test)
    print(f"{name:9s} test RMS {rms:.2e} at gamma={w.gamma:g}")
    ax.plot(test, predict(w, s_test) - test, ".", ms=3, label=f"{name} (RMS {rms:.1e})")

ax.set_yscale("symlog", linthresh=1e-6)
ax.set_xlabel("true phase")
ax.set_ylabel("estimate - truth")
ax.legend()
fig.tight_layout()
fig.savefig(out / "phase_estimation.png", dpi=120)
