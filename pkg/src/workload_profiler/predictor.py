"""Runtime-behavior prediction from profile statistics and its evaluation.

Prediction error is the per-feature relative error in percent,

    e_f = 100 * |pred_f - actual_f| / max(|actual_f|, 1e-9),

aggregated per workload as the root mean square across features. The
normalization choice matters for headline numbers; an alternative
normalization by the profile's feature mean is available behind a flag.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .classifier import ClassifierModel, classify_batch
from .errors import EmptyHoldoutError
from .profiles import ProfileGroup, ProfileSet
from .trace_model import Dataset

REL_EPS = 1e-9


@dataclass(frozen=True)
class PredictionPolicy:
    """How a profile's distribution is condensed into one predicted value.

    fixed_quantile: always the configured quantile.
    skew_conditional: the quantile when the profile's stored skewness for the
    feature exceeds skew_threshold, otherwise the median.
    """

    kind: str = "skew_conditional"
    quantile: float = 0.05
    skew_threshold: float = 1.0

    def __post_init__(self):
        if self.kind not in ("fixed_quantile", "skew_conditional"):
            raise ValueError(f"unknown prediction policy {self.kind!r}")
        if not 0.0 < self.quantile < 1.0:
            raise ValueError("quantile must be strictly inside (0, 1)")

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "quantile": self.quantile,
            "skew_threshold": self.skew_threshold,
        }

    @classmethod
    def from_json(cls, doc: Mapping) -> "PredictionPolicy":
        return cls(
            kind=doc.get("kind", "skew_conditional"),
            quantile=float(doc.get("quantile", 0.05)),
            skew_threshold=float(doc.get("skew_threshold", 1.0)),
        )


@dataclass(frozen=True)
class BehaviorPrediction:
    workload_id: str
    profile_label: int
    values: dict[str, float]  # native units
    policy: PredictionPolicy


def predict(
    profile: ProfileGroup,
    features: Sequence[str],
    policy: PredictionPolicy,
    workload_id: str = "",
) -> BehaviorPrediction:
    """Predict the requested runtime features from one profile's statistics."""
    values: dict[str, float] = {}
    for f in features:
        if f not in profile.stats:
            raise KeyError(f"profile {profile.label} has no stats for feature {f!r}")
        stats = profile.stats[f]
        if policy.kind == "fixed_quantile":
            values[f] = stats.quantile(policy.quantile)
        else:
            skew = stats.skewness
            if skew is not None and skew > policy.skew_threshold:
                values[f] = stats.quantile(policy.quantile)
            else:
                values[f] = stats.median
    return BehaviorPrediction(
        workload_id=workload_id, profile_label=profile.label, values=values, policy=policy
    )


def rmse_perc(
    predicted: Mapping[str, float], actual: Mapping[str, float]
) -> tuple[dict[str, float], float]:
    """(per-feature error %, combined %). Zero iff prediction is exact."""
    if set(predicted) != set(actual):
        raise ValueError("predicted and actual feature sets differ")
    errors = {
        f: 100.0 * abs(predicted[f] - actual[f]) / max(abs(actual[f]), REL_EPS)
        for f in predicted
    }
    combined = math.sqrt(sum(e * e for e in errors.values()) / len(errors))
    return errors, combined


@dataclass
class RmseReport:
    features: tuple[str, ...]
    rows: list[dict]  # id, profile, per-feature errors, combined
    per_profile: dict[int, dict[str, float]]  # q1/median/q3 of combined
    fraction_below_50: float
    n_evaluated: int
    n_excluded: int
    policy: PredictionPolicy
    alt_rows: list[dict] = field(default_factory=list)

    def to_json(self) -> dict:
        doc = {
            "features": list(self.features),
            "n_evaluated": self.n_evaluated,
            "n_excluded": self.n_excluded,
            "fraction_below_50": self.fraction_below_50,
            "policy": self.policy.to_json(),
            "per_profile": {str(k): v for k, v in sorted(self.per_profile.items())},
            "workloads": self.rows,
        }
        if self.alt_rows:
            doc["workloads_alt_normalization"] = self.alt_rows
        return doc

    def ecdf_records(self) -> list[dict]:
        out = []
        for row in self.rows:
            for f in self.features:
                out.append({"feature": f, "error": row["errors"][f]})
            out.append({"feature": "combined", "error": row["combined"]})
        return out

    def boxplot_records(self) -> list[dict]:
        return [
            {"profile": label, **stats} for label, stats in sorted(self.per_profile.items())
        ]


def evaluate_holdout(
    dataset: Dataset,
    model: ClassifierModel,
    profiles: ProfileSet,
    policy: PredictionPolicy,
    features: Sequence[str] | None = None,
    alt_normalization: bool = False,
) -> RmseReport:
    """Classify each holdout workload, predict via its profile, score it.

    Workloads classified into a label absent from the profile set are
    excluded and counted (this cannot happen for a model and profiles from
    the same build, but guards stale artifact mixes).
    """
    if len(dataset) == 0:
        raise EmptyHoldoutError("holdout is empty")
    feats = tuple(features) if features else dataset.schema_runtime
    known = set(profiles.labels())

    labels, _ = classify_batch(model, [w.metadata for w in dataset.workloads])
    rows: list[dict] = []
    alt_rows: list[dict] = []
    combined_by_profile: dict[int, list[float]] = {}
    excluded = 0
    group_of = {g.label: g for g in profiles.groups}
    prediction_cache: dict[int, BehaviorPrediction] = {}
    for w, label in zip(dataset.workloads, labels):
        label = int(label)
        if label not in known:
            excluded += 1
            continue
        if label not in prediction_cache:
            prediction_cache[label] = predict(group_of[label], feats, policy)
        pred = prediction_cache[label]
        actual = {f: w.runtime[f] for f in feats}
        errors, combined = rmse_perc(pred.values, actual)
        rows.append(
            {"id": w.id, "profile": label, "errors": errors, "combined": combined}
        )
        combined_by_profile.setdefault(label, []).append(combined)
        if alt_normalization:
            group = group_of[label]
            alt_errors = {
                f: 100.0
                * abs(pred.values[f] - actual[f])
                / max(abs(group.stats[f].mean), REL_EPS)
                for f in feats
            }
            alt_combined = math.sqrt(
                sum(e * e for e in alt_errors.values()) / len(alt_errors)
            )
            alt_rows.append(
                {"id": w.id, "profile": label, "errors": alt_errors, "combined": alt_combined}
            )

    if not rows:
        raise EmptyHoldoutError("no workload could be scored against the profiles")
    per_profile = {}
    for label, values in combined_by_profile.items():
        q1, med, q3 = np.percentile(values, [25, 50, 75])
        per_profile[label] = {
            "q1": float(q1),
            "median": float(med),
            "q3": float(q3),
            "count": len(values),
        }
    below = sum(1 for r in rows if r["combined"] < 50.0)
    return RmseReport(
        features=feats,
        rows=rows,
        per_profile=per_profile,
        fraction_below_50=below / len(rows),
        n_evaluated=len(rows),
        n_excluded=excluded,
        policy=policy,
        alt_rows=alt_rows,
    )
