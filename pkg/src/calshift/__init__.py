"""Calibration error estimation under label shift.

Estimates the binned calibration error of a probabilistic classifier on an
unlabeled target sample by importance re-weighting labeled source
predictions, and quantifies the variance of that estimate.
"""

from .binning import BinningScheme, BinSource, assign_bin, binning_kernel, build_equal_mass_bins
from .core import (
    CeReport,
    ClassDistribution,
    ImportanceWeights,
    LabeledSet,
    PredictionSet,
    WeightMethod,
    empirical_class_distribution,
    predicted_label_distribution,
    validate_predictions,
)
from .estimators import (
    BinRatioTable,
    Mode,
    bin_ratio_table,
    estimate_ce_shifted,
    estimate_ce_source,
    estimate_classwise_ce,
)
from .simkit import (
    SimConfig,
    apply_label_shift,
    generate_beta_binary,
    longtail_resample,
    true_calibration_error,
)
from .variance import (
    EstimatorConfig,
    VarianceReport,
    monte_carlo_variance,
    variance_no_shift,
    variance_shifted,
)
from .weights import (
    BctsParams,
    ConfusionMatrix,
    apply_bcts,
    bbsl_weights,
    confusion_matrix,
    em_bcts_weights,
    em_weights,
    estimate_weights,
    fit_bcts,
    oracle_weights,
    rlls_weights,
)

__version__ = "0.1.0"
