# Binned calibration error, with and without a label shift.
#
# The simulated problem has one feature x in [0, 1] and the classifier simply
# reports x as P(y=1|x). Positives are Beta(2, 1) and negatives Beta(2, 5);
# the source has 25% positives and the target 50%.

import numpy as np

from calshift import SimConfig, generate_beta_binary, true_calibration_error
from calshift.estimators import estimate_ce_shifted, estimate_ce_source, estimate_classwise_ce
from calshift.weights import oracle_weights

#%%
cfg = SimConfig(n=5000, m=5000, seed=1)
source, target = generate_beta_binary(cfg)
print("source positive rate", source.labels.mean())
print("target positive rate", target.labels.mean())

#%%
# Calibration error on the source, where labels are available.
plugin = estimate_ce_source(source, class_index=1, b=15, p=2)
loo = estimate_ce_source(source, class_index=1, b=15, p=2, mode="loo")
print(f"source CE_2^2 plug-in {plugin.ce_pow_p:.5f}, leave-one-out {loo.ce_pow_p:.5f}")
print(f"true source CE_2^2    {true_calibration_error(cfg, 2, 'source'):.5f}")

#%%
# The same classifier is miscalibrated differently on the target, because the
# posterior moves with the prior. With the true importance weights the source
# labels can be reweighted to estimate the target CE without target labels.
w = oracle_weights(source.labels, target.labels, 2)
shifted = estimate_ce_shifted(source, target.preds, w, class_index=1, b=15, p=2)
print("weights", np.round(w.omega, 3))
print(f"shifted CE_2^2 {shifted.ce_pow_p:.5f} (true {true_calibration_error(cfg, 2):.5f})")

#%%
# Class-wise CE averages the binary CE of every class score.
cw = estimate_classwise_ce(source, target.preds, w, b=15, p=2)
print("per class", np.round(cw.per_class, 5), "mean", round(cw.ce_pow_p, 5))
