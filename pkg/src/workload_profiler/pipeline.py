"""End-to-end pipeline orchestration behind the CLI commands.

All randomness is derived from the config seed and timestamps come from the
config, so a build with identical config and seed writes byte-identical
artifacts.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import artifacts
from .boosting import BoostingParams, DEFAULT_PARAMS
from .classifier import (
    ClassifierModel,
    TrainingSet,
    build_training_set,
    feature_importance,
    train,
)
from .errors import (
    ConfigError,
    DegenerateDataError,
    EmptyHoldoutError,
    MissingArtifactError,
    NoValidRowsError,
)
from .feedback import FeedbackConfig, ReclusterSpec, run_feedback
from .gridsearch import GRID_REPORT_FIELDS, GridSpec, grid_search
from .metrics import EQUAL_WEIGHTS, class_report
from .predictor import PredictionPolicy, evaluate_holdout
from .preprocess import hopkins
from .profiles import ClusteringConfig, ProfileSet
from .trace_model import Dataset, TraceSchema, load_trace, runtime_matrix

PROFILES_FILE = "profiles.json"
MODEL_FILE = "model.json"
GRID_FILE = "gridsearch.csv"
BUILD_REPORT_FILE = "build-report.json"
RMSE_REPORT_FILE = "rmse-report.json"
RMSE_ECDF_FILE = "rmse-ecdf.csv"
RMSE_BOXPLOT_FILE = "rmse-boxplot.csv"
FEEDBACK_REPORT_FILE = "feedback-report.json"
VIOLATIONS_FILE = "violations.csv"
PROFILES_POST_FILE = "profiles-post.json"
MODEL_POST_FILE = "model-post.json"


@dataclass
class RunConfig:
    trace: Path
    descriptor: Path
    output_dir: Path
    seed: int
    grid: GridSpec = field(default_factory=GridSpec)
    optimal_cluster_count: int = 10
    acquires_weights: tuple[float, float, float] = EQUAL_WEIGHTS
    classifier_params: BoostingParams = DEFAULT_PARAMS
    validation_fraction: float = 0.2
    prediction: PredictionPolicy = field(default_factory=PredictionPolicy)
    feedback: FeedbackConfig = field(default_factory=FeedbackConfig)
    recluster_config: ClusteringConfig | None = None
    predict_features: tuple[str, ...] | None = None
    build_timestamp: int = 0
    hopkins_fraction: float = 0.1
    include_member_ids: bool = False
    alt_normalization: bool = False
    stats_percentiles: tuple[float, ...] = (5.0, 25.0, 50.0, 75.0, 95.0)

    @classmethod
    def from_json(cls, doc: dict, base_dir: Path | None = None) -> "RunConfig":
        def resolve(p: str) -> Path:
            path = Path(p)
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            return path

        try:
            if "seed" not in doc:
                raise ConfigError("config must pin a seed (reproducibility contract)")
            acq = doc.get("acquires", {})
            weights = tuple(acq.get("weights", EQUAL_WEIGHTS))
            recluster = doc.get("recluster_config")
            return cls(
                trace=resolve(doc["trace"]),
                descriptor=resolve(doc["descriptor"]),
                output_dir=resolve(doc.get("output_dir", "out")),
                seed=int(doc["seed"]),
                grid=GridSpec.from_json(doc.get("grid", {})),
                optimal_cluster_count=int(acq.get("optimal_cluster_count", 10)),
                acquires_weights=weights,
                classifier_params=(
                    BoostingParams.from_json(doc["classifier"])
                    if "classifier" in doc
                    else DEFAULT_PARAMS
                ),
                validation_fraction=float(doc.get("validation_fraction", 0.2)),
                prediction=PredictionPolicy.from_json(doc.get("prediction", {})),
                feedback=FeedbackConfig.from_json(doc.get("feedback", {})),
                recluster_config=(
                    ClusteringConfig.from_json(recluster) if recluster else None
                ),
                predict_features=(
                    tuple(doc["predict_features"]) if "predict_features" in doc else None
                ),
                build_timestamp=int(doc.get("build_timestamp", 0)),
                hopkins_fraction=float(doc.get("hopkins_fraction", 0.1)),
                include_member_ids=bool(doc.get("include_member_ids", False)),
                alt_normalization=bool(doc.get("alt_normalization", False)),
                stats_percentiles=tuple(
                    float(v) for v in doc.get("stats_percentiles", (5, 25, 50, 75, 95))
                ),
            )._validated()
        except ConfigError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid run configuration: {exc}") from exc

    def _validated(self) -> "RunConfig":
        # the prediction quantile must be one of the stored profile percentiles
        key = round(self.prediction.quantile * 100.0, 6)
        if not any(abs(p - key) < 1e-9 for p in self.stats_percentiles):
            raise ConfigError(
                f"prediction quantile {self.prediction.quantile} is not among "
                f"stats_percentiles {sorted(self.stats_percentiles)}"
            )
        return self

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        path = Path(path)
        try:
            doc = artifacts.read_json(path)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except ValueError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        return cls.from_json(doc, base_dir=path.parent)


def stratified_split(
    ts: TrainingSet, validation_fraction: float, seed: int
) -> tuple[TrainingSet, TrainingSet | None]:
    """Per-class 80/20-style split; every class keeps >= 1 training row."""
    if not 0.0 <= validation_fraction < 1.0:
        raise ConfigError("validation_fraction must be in [0, 1)")
    if validation_fraction == 0.0:
        return ts, None
    rng = np.random.default_rng(seed)
    labels = np.asarray(ts.labels)
    train_idx: list[int] = []
    val_idx: list[int] = []
    for c in sorted(set(int(v) for v in labels)):
        idx = np.flatnonzero(labels == c)
        idx = idx[rng.permutation(idx.size)]
        n_val = min(int(round(idx.size * validation_fraction)), idx.size - 1)
        val_idx.extend(idx[:n_val].tolist())
        train_idx.extend(idx[n_val:].tolist())
    train_idx.sort()
    val_idx.sort()
    train_part = TrainingSet(
        rows=[ts.rows[i] for i in train_idx],
        labels=labels[train_idx],
        dimension=ts.dimension,
    )
    if not val_idx:
        return train_part, None
    val_part = TrainingSet(
        rows=[ts.rows[i] for i in val_idx],
        labels=labels[val_idx],
        dimension=ts.dimension,
    )
    return train_part, val_part


@dataclass
class BuildResult:
    dataset: Dataset
    profiles: ProfileSet
    model: ClassifierModel
    report: dict


def run_build(config: RunConfig) -> BuildResult:
    """Transform -> grid search -> profiles -> classifier; writes artifacts."""
    schema = TraceSchema.load(config.descriptor)
    dataset, dropped = load_trace(config.trace, schema)

    hopkins_doc: dict | None
    try:
        hk = hopkins(runtime_matrix(dataset), config.hopkins_fraction, seed=config.seed)
        hopkins_doc = {"score": hk.score, "sample_size": hk.sample_size, "seed": hk.seed}
    except DegenerateDataError as exc:
        hopkins_doc = {"score": None, "error": str(exc)}

    winner, profiles, rows = grid_search(
        dataset,
        config.grid,
        config.optimal_cluster_count,
        seed=config.seed,
        weights=config.acquires_weights,
        now=config.build_timestamp,
        percentiles=config.stats_percentiles,
    )
    ts, vocab = build_training_set(dataset, profiles)
    train_part, val_part = stratified_split(ts, config.validation_fraction, config.seed)
    model = train(
        train_part,
        vocab,
        config.classifier_params,
        seed=config.seed,
        bucket_bounds=dataset.bucket_bounds,
    )

    validation_doc = None
    if val_part is not None and len(val_part):
        # Validation rows are already encoded; route them through the forest directly.
        from .boosting import dense_presence

        present = dense_presence(val_part.rows, vocab.dimension)
        probs = model.forest.probabilities(present)
        predicted = [model.class_labels[i] for i in probs.argmax(axis=1)]
        report = class_report(predicted, val_part.labels.tolist())
        validation_doc = report.to_json()

    selected_row = next(r for r in rows if r.selected)
    build_report = {
        "n_workloads": len(dataset),
        "dropped_rows": dropped,
        "hopkins": hopkins_doc,
        "winner": winner.to_json(),
        "winner_metrics": {
            "n_clusters": selected_row.n_clusters,
            "n_outliers": selected_row.n_outliers,
            "silhouette": selected_row.silhouette,
            "davies_bouldin": selected_row.davies_bouldin,
            "acquires_total": selected_row.acquires_total,
        },
        "grid_combinations": len(rows),
        "encoded_dimension": vocab.dimension,
        "n_train": len(train_part),
        "n_validation": len(val_part) if val_part is not None else 0,
        "validation_report": validation_doc,
        "feature_importance": feature_importance(model, top_n=20),
        "seed": config.seed,
    }

    out = config.output_dir
    out.mkdir(parents=True, exist_ok=True)
    artifacts.write_json(out / PROFILES_FILE, profiles.to_json(config.include_member_ids))
    artifacts.write_json(out / MODEL_FILE, model.to_json())
    artifacts.write_csv(out / GRID_FILE, GRID_REPORT_FIELDS, [r.to_record() for r in rows])
    artifacts.write_json(out / BUILD_REPORT_FILE, build_report)
    return BuildResult(dataset=dataset, profiles=profiles, model=model, report=build_report)


def load_artifacts(output_dir: Path) -> tuple[ProfileSet, ClassifierModel]:
    profiles_path = output_dir / PROFILES_FILE
    model_path = output_dir / MODEL_FILE
    for p in (profiles_path, model_path):
        if not p.exists():
            raise MissingArtifactError(f"missing build artifact: {p}")
    profiles = ProfileSet.from_json(artifacts.read_json(profiles_path))
    model = ClassifierModel.from_json(artifacts.read_json(model_path))
    return profiles, model


def run_evaluate(config: RunConfig, holdout_path: Path) -> dict:
    """Score a holdout trace against the build artifacts; writes reports."""
    profiles, model = load_artifacts(config.output_dir)
    schema = TraceSchema.load(config.descriptor)
    try:
        holdout, _ = load_trace(holdout_path, schema, bucket_bounds=model.bucket_bounds)
    except NoValidRowsError as exc:
        raise EmptyHoldoutError(f"holdout {holdout_path} has no valid rows") from exc
    report = evaluate_holdout(
        holdout,
        model,
        profiles,
        config.prediction,
        features=config.predict_features,
        alt_normalization=config.alt_normalization,
    )
    out = config.output_dir
    artifacts.write_json(out / RMSE_REPORT_FILE, report.to_json())
    artifacts.write_csv(out / RMSE_ECDF_FILE, ("feature", "error"), report.ecdf_records())
    artifacts.write_csv(
        out / RMSE_BOXPLOT_FILE,
        ("profile", "q1", "median", "q3", "count"),
        report.boxplot_records(),
    )
    return report.to_json()


def run_feedback_command(config: RunConfig, stream_path: Path) -> dict:
    """Replay a stream through the feedback loop; writes the run report."""
    profiles, model = load_artifacts(config.output_dir)
    schema = TraceSchema.load(config.descriptor)
    training_data, _ = load_trace(config.trace, schema, bucket_bounds=model.bucket_bounds)
    stream, _ = load_trace(stream_path, schema, bucket_bounds=model.bucket_bounds)
    regen = ReclusterSpec(
        optimal_cluster_count=config.optimal_cluster_count,
        grid=config.grid if config.recluster_config is None else None,
        config=config.recluster_config,
        weights=config.acquires_weights,
        classifier_params=config.classifier_params,
        seed=config.seed,
        percentiles=config.stats_percentiles,
    )
    report = run_feedback(
        stream,
        model,
        profiles,
        config.feedback,
        regen,
        config.prediction,
        training_data,
        features=config.predict_features,
    )
    out = config.output_dir
    artifacts.write_json(out / FEEDBACK_REPORT_FILE, report.to_json())
    artifacts.write_csv(
        out / VIOLATIONS_FILE,
        ("event_index", "t", "id", "label", "violated", "outlier"),
        report.timeline,
    )
    if report.adopted_count and report.final_profiles and report.final_model:
        artifacts.write_json(
            out / PROFILES_POST_FILE, report.final_profiles.to_json(config.include_member_ids)
        )
        artifacts.write_json(out / MODEL_POST_FILE, report.final_model.to_json())
    return report.to_json()
