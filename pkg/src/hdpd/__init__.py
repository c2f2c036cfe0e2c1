"""Health-disease phase diagrams from longitudinal cohort models.

The package trains a gradient-boosted onset predictor on participant-year
records, then interrogates it: for a chosen record and pair of modifiable
biomarkers it sweeps a 2-D intervention grid, projects the remaining
variables onto the training-data manifold, and maps which interventions
move the record across the predicted onset boundary.
"""

from .analysis import (
    BIVARIATE,
    NO_BOUNDARY_NON_ONSET,
    NO_BOUNDARY_ONSET,
    PATTERNS,
    UNIVARIATE_X,
    UNIVARIATE_Y,
    bivariate_proportion,
    classify_boundary,
    feature_contribution,
    limit_values,
    superimpose,
    ward_cluster,
)
from .cohort import (
    BINARY,
    CATEGORICAL,
    CONTINUOUS,
    Cohort,
    CohortError,
    FeatureMeta,
    Record,
    load_cohort,
    load_schema,
    save_cohort,
    save_schema,
)
from .dataset import (
    TEST,
    TRAIN,
    FeatureSpace,
    LabeledDataset,
    build_horizon_dataset,
    fit_feature_space,
    preprocess,
    split_by_participant,
)
from .diagrams import (
    MODE_ICE,
    MODE_PMICE,
    ActiveLearningConfig,
    Diagram,
    DiagramEngine,
    diagram_from_json,
    diagram_to_json,
)
from .evaluate import (
    EvaluationReport,
    approached_distance,
    categorize_predictions,
    evaluate_disease,
    format_report,
    improved_hdpd_proportion,
    tune_k,
)
from .gbdt import Ensemble, TrainConfig, train_gbdt
from .metrics import auc, confusion, f1_score, log_loss
from .model_io import FittedModel, ModelFormatError, load_model, save_model
from .pipeline import (
    FitResult,
    PipelineConfig,
    build_dataset,
    build_engine,
    fit_model,
    parse_record_id,
    record_id,
    run_pipeline,
)
from .pmice import (
    FeatureDomain,
    GridConfig,
    MetricSpace,
    ProjectionConfig,
    build_axis,
    compute_domains,
    ice_curve,
    normalized_distance,
    project,
)
from .rules import (
    DiseaseRule,
    label_ckd_longitudinal,
    label_disease,
    load_rules,
    save_rules,
    standard_rules,
)
from .selection import cv_auc, rfe, select_threshold_cv
from .spreading import grid_affinity, label_spreading
from .stats import paired_t, wilcoxon_rank_sum
from .synthetic import SyntheticConfig, generate_synthetic, generate_synthetic_with_truth
from .workspace import Workspace, WorkspaceError

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
