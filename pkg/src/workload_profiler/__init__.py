"""Workload profiling toolkit: density-based profile groups from usage
traces, metadata-only classification of new workloads, behavior prediction
from profile statistics, and a feedback loop that re-clusters when quality
decays."""

from .boosting import BoostingParams
from .classifier import (
    ClassifierModel,
    build_training_set,
    classify,
    classify_batch,
    feature_importance,
    train,
)
from .dbscan import dbscan
from .distances import distance, similarity
from .encoding import EncoderVocabulary, build_vocabulary, encode_record
from .feedback import (
    DeltaSpec,
    FeedbackConfig,
    FeedbackState,
    ReclusterSpec,
    detect_violation,
    freshness,
    run_feedback,
    update_trigger,
    violation_rate,
)
from .gridsearch import GridSpec, grid_search
from .hdbscan import hdbscan
from .metrics import AcquiresScore, ClassReport, acquires, class_report, davies_bouldin, silhouette_mean
from .predictor import (
    BehaviorPrediction,
    PredictionPolicy,
    RmseReport,
    evaluate_holdout,
    predict,
    rmse_perc,
)
from .preprocess import (
    HopkinsResult,
    TransformSpec,
    apply_transform,
    fit_transform,
    hopkins,
    skewness,
    stratified_sample,
)
from .profiles import ClusteringConfig, FeatureStats, ProfileGroup, ProfileSet, build_profiles
from .trace_model import (
    Dataset,
    FeatureMatrix,
    TraceSchema,
    Workload,
    load_trace,
    runtime_matrix,
    write_trace,
)

__version__ = "0.1.0"
