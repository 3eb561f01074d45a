"""Feature-table classification with vulture-search hyperparameter tuning.

Min-max scaling and stratified folds (dataset), an SVD principal-component
basis with explained-variance selection (pca), the vulture population
optimizer (avoa), a natural-gradient Bernoulli booster (ngb), a
second-order boosted-tree baseline (gbdt), the metric suite and k-fold
driver (metrics), and the search-space bridge between them (tuner).
"""

from .avoa import AvoaParams, ConvergenceTrace, SearchBounds, VultureState, optimize
from .dataset import (FeatureMatrix, FoldPlan, LabelVector, NormalizerParams,
                      SchemaError, apply_minmax, fit_minmax, load_feature_table,
                      make_stratified_folds)
from .gbdt import GbdtModel, GbdtParams
from .metrics import (ConfusionMatrix, CvReport, PipelineSpec, RocCurve, confusion,
                      cross_validate, fit_pipeline, roc_auc, scalar_metrics)
from .ngb import NgbConfig, NgbModel
from .pca import PcaModel, fit_pca, inverse_transform, select_components, transform
from .tuner import HyperSpace, TunerConfig, decode_position, encode_space, tune

__version__ = "0.1.0"

__all__ = [
    "AvoaParams", "ConvergenceTrace", "SearchBounds", "VultureState", "optimize",
    "FeatureMatrix", "FoldPlan", "LabelVector", "NormalizerParams", "SchemaError",
    "apply_minmax", "fit_minmax", "load_feature_table", "make_stratified_folds",
    "GbdtModel", "GbdtParams",
    "ConfusionMatrix", "CvReport", "PipelineSpec", "RocCurve", "confusion",
    "cross_validate", "fit_pipeline", "roc_auc", "scalar_metrics",
    "NgbConfig", "NgbModel",
    "PcaModel", "fit_pca", "inverse_transform", "select_components", "transform",
    "HyperSpace", "TunerConfig", "decode_position", "encode_space", "tune",
    "__version__",
]
