"""
Qubit reservoirs: tomography versus hidden variables
====================================================

With d=2 the reservoir is a qubit. Full tomography records the Bloch vector
(x, y, z). The hidden-variable reservoir re-expresses the same data in
spherical coordinates (r, theta, phi), a fixed nonlinear map, and trains the
readout on those instead.
"""

import numpy as np

from kerrqrc.classical import BlochVector, hv_from_bloch, hv_transform
from kerrqrc.quantum import qrc_features
from kerrqrc.readout import TrainingSet, feature_matrix, gamma_sweep
from kerrqrc.task import MEAN_PARAMS, sample_times, training_phases
from kerrqrc import task

qubit = MEAN_PARAMS.with_dim(2)
t = sample_times()

###############################################################################
# The map itself. The radial coordinate uses r = x^2 + y^2 + z^2 by default;
# ``radius="conventional"`` gives the Euclidean norm.

for b in [(1, 0, 0), (0, 0, 1), (0.5, 0, 0)]:
    print(b, "->", tuple(round(v, 4) for v in hv_from_bloch(BlochVector(*b))))

###############################################################################
# Same simulations, three feature sets.

train = training_phases(30)
test = task.test_phases(300, seed=2)
full_train = qrc_features(qubit, train, t, full_tomography=True)
full_test = qrc_features(qubit, test, t, full_tomography=True)

features = {
    "full QRC (x, y, z)": (full_train, full_test),
    "QRC (<X> only)": (full_train[:, :1] / np.sqrt(2), full_test[:, :1] / np.sqrt(2)),
    "HVRC (r, theta, phi)": (hv_transform(full_train), hv_transform(full_test)),
}
for name, (f_tr, f_te) in features.items():
    _, rms = gamma_sweep(TrainingSet.from_batch(train, f_tr), feature_matrix(f_te), test)
    print(f"{name:22s} test RMS {rms:.2e}")
