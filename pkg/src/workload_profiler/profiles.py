"""Profile groups: per-cluster statistics, representatives, and persistence.

Statistics are computed over raw (untransformed) runtime values so that
predictions come out in native units; centroids and medoids live in the
transformed space used for clustering.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .distances import point_to_rows
from .errors import EmptyProfileSetError, UndefinedSkewnessError
from .preprocess import TransformSpec, apply_transform, skewness, transform_vector
from .trace_model import Dataset, FeatureMatrix, runtime_matrix

DEFAULT_PERCENTILES = (5.0, 25.0, 50.0, 75.0, 95.0)


@dataclass(frozen=True)
class ClusteringConfig:
    """One generator configuration: algorithm plus its knobs."""

    algorithm: str  # "dbscan" | "hdbscan"
    transform: str
    distance: str
    min_points: int
    eps: float | None = None  # required for dbscan
    seed: int = 0

    def __post_init__(self):
        if self.algorithm not in ("dbscan", "hdbscan"):
            raise ValueError(f"unknown clustering algorithm {self.algorithm!r}")
        if self.min_points < 2:
            raise ValueError("min_points must be >= 2")
        if self.algorithm == "dbscan" and (self.eps is None or self.eps <= 0):
            raise ValueError("dbscan requires a positive eps")

    def to_json(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "transform": self.transform,
            "distance": self.distance,
            "min_points": self.min_points,
            "eps": self.eps,
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, doc: Mapping) -> "ClusteringConfig":
        return cls(
            algorithm=doc["algorithm"],
            transform=doc["transform"],
            distance=doc["distance"],
            min_points=int(doc["min_points"]),
            eps=doc.get("eps"),
            seed=int(doc.get("seed", 0)),
        )


@dataclass(frozen=True)
class FeatureStats:
    """Summary of one runtime feature over a profile's members."""

    percentiles: dict[float, float]
    mean: float
    median: float
    std: float
    skewness: float | None

    def quantile(self, q: float) -> float:
        key = round(q * 100.0, 6)
        for p, v in self.percentiles.items():
            if abs(p - key) < 1e-9:
                return v
        raise KeyError(f"quantile {q} not among stored percentiles {sorted(self.percentiles)}")

    def to_json(self) -> dict:
        return {
            "percentiles": {str(p): v for p, v in self.percentiles.items()},
            "mean": self.mean,
            "median": self.median,
            "std": self.std,
            "skewness": self.skewness,
        }

    @classmethod
    def from_json(cls, doc: Mapping) -> "FeatureStats":
        return cls(
            percentiles={float(p): float(v) for p, v in doc["percentiles"].items()},
            mean=float(doc["mean"]),
            median=float(doc["median"]),
            std=float(doc["std"]),
            skewness=None if doc["skewness"] is None else float(doc["skewness"]),
        )


@dataclass(frozen=True)
class ProfileGroup:
    label: int
    size: int
    centroid: np.ndarray  # transformed space
    medoid_id: str | None
    stats: dict[str, FeatureStats]  # raw units, keyed by runtime feature
    metadata_bag: dict[str, dict[str, int]]
    last_update: int
    member_ids: tuple[str, ...] | None = None

    def to_json(self, include_members: bool = False) -> dict:
        doc = {
            "label": self.label,
            "size": self.size,
            "centroid": [float(v) for v in self.centroid],
            "medoid_id": self.medoid_id,
            "stats": {f: s.to_json() for f, s in self.stats.items()},
            "metadata_bag": self.metadata_bag,
            "last_update": self.last_update,
        }
        if include_members and self.member_ids is not None:
            doc["member_ids"] = list(self.member_ids)
        return doc

    @classmethod
    def from_json(cls, doc: Mapping) -> "ProfileGroup":
        return cls(
            label=int(doc["label"]),
            size=int(doc["size"]),
            centroid=np.asarray(doc["centroid"], dtype=np.float64),
            medoid_id=doc.get("medoid_id"),
            stats={f: FeatureStats.from_json(s) for f, s in doc["stats"].items()},
            metadata_bag={
                f: {v: int(c) for v, c in bag.items()}
                for f, bag in doc["metadata_bag"].items()
            },
            last_update=int(doc["last_update"]),
            member_ids=tuple(doc["member_ids"]) if "member_ids" in doc else None,
        )


@dataclass
class ProfileSet:
    """A full clustering result plus the configuration that produced it."""

    groups: tuple[ProfileGroup, ...]
    outlier_ids: tuple[str, ...]
    config: ClusteringConfig
    transform_spec: TransformSpec
    distance_threshold: float
    created_at: int
    n_outliers: int = -1  # survives persistence when outlier_ids are dropped
    quality: float | None = None  # composite score at build time

    def __post_init__(self):
        if self.n_outliers < 0:
            self.n_outliers = len(self.outlier_ids)

    def group(self, label: int) -> ProfileGroup:
        for g in self.groups:
            if g.label == label:
                return g
        raise KeyError(f"no profile group with label {label}")

    def labels(self) -> list[int]:
        return [g.label for g in self.groups]

    def nearest_group(self, runtime: Mapping[str, float]) -> tuple[int, float]:
        """Nearest centroid (transformed space) for a raw runtime record."""
        x = transform_vector(self.transform_spec, runtime)
        centroids = np.stack([g.centroid for g in self.groups])
        d = point_to_rows(x, centroids, self.config.distance)
        i = int(np.argmin(d))
        return self.groups[i].label, float(d[i])

    def is_outlier(self, runtime: Mapping[str, float]) -> bool:
        """Post-hoc outlier rule for new arrivals: beyond tau of every centroid."""
        _, d = self.nearest_group(runtime)
        return d > self.distance_threshold

    def to_json(self, include_members: bool = False) -> dict:
        return {
            "groups": [g.to_json(include_members) for g in self.groups],
            "outlier_count": self.n_outliers,
            "outlier_ids": list(self.outlier_ids) if include_members else None,
            "config": self.config.to_json(),
            "transform_spec": self.transform_spec.to_json(),
            "distance_threshold": self.distance_threshold,
            "created_at": self.created_at,
            "quality": self.quality,
        }

    @classmethod
    def from_json(cls, doc: Mapping) -> "ProfileSet":
        return cls(
            groups=tuple(ProfileGroup.from_json(g) for g in doc["groups"]),
            outlier_ids=tuple(doc["outlier_ids"] or ()),
            config=ClusteringConfig.from_json(doc["config"]),
            transform_spec=TransformSpec.from_json(doc["transform_spec"]),
            distance_threshold=float(doc["distance_threshold"]),
            created_at=int(doc["created_at"]),
            n_outliers=int(doc["outlier_count"]),
            quality=doc.get("quality"),
        )


def _feature_stats(values: np.ndarray, percentiles: Sequence[float]) -> FeatureStats:
    pcts = np.percentile(values, list(percentiles))  # linear interpolation
    try:
        skew = skewness(values)
    except UndefinedSkewnessError:
        skew = None
    return FeatureStats(
        percentiles={float(p): float(v) for p, v in zip(percentiles, pcts)},
        mean=float(values.mean()),
        median=float(np.median(values)),
        std=float(values.std()),
        skewness=skew,
    )


def _medoid_index(rows: np.ndarray, kind: str) -> int:
    best, best_sum = 0, np.inf
    for i in range(rows.shape[0]):
        s = float(point_to_rows(rows[i], rows, kind).sum())
        if s < best_sum:
            best, best_sum = i, s
    return best


def build_profiles(
    dataset: Dataset,
    labels,
    config: ClusteringConfig,
    spec: TransformSpec,
    now: int,
    percentiles: Sequence[float] = DEFAULT_PERCENTILES,
    transformed: FeatureMatrix | None = None,
) -> ProfileSet:
    """Assemble one ProfileGroup per non-negative label.

    ``labels`` must align with dataset row order. The post-hoc outlier
    threshold tau is the 95th percentile of member-to-centroid distances
    pooled across all groups.
    """
    lab = np.asarray(labels)
    if lab.shape[0] != len(dataset):
        raise ValueError("labels are not aligned with the dataset")
    if not np.any(lab >= 0):
        raise EmptyProfileSetError("every workload was labelled an outlier")

    if transformed is None:
        transformed = apply_transform(spec, runtime_matrix(dataset))
    T = transformed.rows
    raw = runtime_matrix(dataset).rows
    ids = dataset.ids()

    groups: list[ProfileGroup] = []
    centroid_dists: list[np.ndarray] = []
    for label in sorted(int(v) for v in np.unique(lab[lab >= 0])):
        idx = np.flatnonzero(lab == label)
        member_rows = T[idx]
        centroid = member_rows.mean(axis=0)
        medoid_local = _medoid_index(member_rows, config.distance)
        stats = {
            f: _feature_stats(raw[idx, j], percentiles)
            for j, f in enumerate(dataset.schema_runtime)
        }
        bag: dict[str, dict[str, int]] = {f: {} for f in dataset.schema_metadata}
        for i in idx:
            for f in dataset.schema_metadata:
                value = dataset.workloads[i].metadata[f]
                bag[f][value] = bag[f].get(value, 0) + 1
        groups.append(
            ProfileGroup(
                label=label,
                size=int(idx.size),
                centroid=centroid,
                medoid_id=ids[idx[medoid_local]],
                stats=stats,
                metadata_bag=bag,
                last_update=now,
                member_ids=tuple(ids[i] for i in idx),
            )
        )
        centroid_dists.append(point_to_rows(centroid, member_rows, config.distance))

    tau = float(np.percentile(np.concatenate(centroid_dists), 95))
    outliers = tuple(ids[i] for i in np.flatnonzero(lab == -1))
    return ProfileSet(
        groups=tuple(groups),
        outlier_ids=outliers,
        config=config,
        transform_spec=spec,
        distance_threshold=tau,
        created_at=now,
    )
