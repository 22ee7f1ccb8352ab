# Building long-tailed and label-shifted evaluation sets.

import numpy as np

from calshift.core import LabeledSet, PredictionSet
from calshift.simkit import (
    apply_label_shift,
    longtail_counts,
    longtail_resample,
    ratio_distribution,
    ratio_sweep,
)

rng = np.random.default_rng(0)

#%%
# An exponential long-tail profile: class c keeps n_max * IF^(-c/(k-1)) points.
print(longtail_counts(1000, 10, 10))
print(longtail_counts(1000, 10, 100))

#%%
# Applied to a balanced 10-class label vector.
labels = np.repeat(np.arange(10), 1000)
idx = longtail_resample(labels, 10, imbalance_factor=10, seed=0)
print(np.bincount(labels[idx]))

#%%
# Binary label shift at fixed size, through the usual negative:positive sweep.
x = rng.random(20000)
data = LabeledSet(PredictionSet(np.column_stack([1 - x, x])), (rng.random(20000) < 0.5).astype(int))
for neg, pos in ratio_sweep():
    shifted = apply_label_shift(data, ratio_distribution(neg, pos), 5000, seed=1)
    print(f"{neg}:{pos}", np.bincount(shifted.labels))
