# Estimating the importance weights from unlabeled target predictions.

import numpy as np

from calshift import SimConfig, generate_beta_binary
from calshift.core import predicted_label_distribution
from calshift.weights import (
    bbsl_weights,
    confusion_matrix,
    estimate_weights,
    fit_bcts,
    rlls_weights,
)

cfg = SimConfig(n=10000, m=10000, seed=0)
source, target = generate_beta_binary(cfg)
print("true weights", cfg.true_weights)

#%%
# BBSL inverts the source confusion matrix against the target's predicted
# label distribution. RLLS adds a small ridge on omega - 1.
cm = confusion_matrix(source)
mu_t = predicted_label_distribution(target.preds)
print("confusion matrix\n", np.round(cm.joint, 4))
print("bbsl      ", np.round(bbsl_weights(cm, mu_t).omega, 4))
print("rlls 1e-3 ", np.round(rlls_weights(cm, mu_t, 1e-3).omega, 4))
print("rlls 1e-1 ", np.round(rlls_weights(cm, mu_t, 1e-1).omega, 4))

#%%
# EM re-estimates the target prior from posteriors, so it is only as good as
# their calibration. Here the score x is far from the true posterior.
em = estimate_weights("em", source, target.preds, max_iter=5000)
print("em on raw scores", np.round(em.omega, 3), em.diagnostics["iterations"], "iterations")

#%%
# Recalibrating with bias-corrected temperature scaling first fixes most of that.
params = fit_bcts(source)
print("temperature", round(params.temperature, 3), "bias", np.round(params.bias, 3))
bcts = estimate_weights("em-bcts", source, target.preds)
print("em-bcts", np.round(bcts.omega, 4))
