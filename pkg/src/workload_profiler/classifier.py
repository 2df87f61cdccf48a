"""Metadata-based profile classifier.

Trains gradient-boosted trees on the one-hot-encoded metadata of clustered
workloads (outliers excluded) and assigns profile labels to new workloads
from metadata alone. Trained models are immutable; classify calls are pure
and safe to run concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .boosting import (
    BoostingParams,
    DEFAULT_PARAMS,
    Forest,
    Tree,
    dense_presence,
    fit_forest,
    total_gain_by_column,
)
from .encoding import EncoderVocabulary, build_vocabulary, encode_record
from .errors import DegenerateDataError, EmptyProfileSetError
from .profiles import ProfileSet
from .trace_model import Dataset

MODEL_FORMAT_VERSION = 1


@dataclass
class TrainingSet:
    """Sparse encoded metadata rows with aligned profile labels."""

    rows: list[tuple[int, ...]]
    labels: np.ndarray  # profile labels, not yet densified
    dimension: int

    def __len__(self) -> int:
        return len(self.rows)


@dataclass
class ClassifierModel:
    vocabulary: EncoderVocabulary
    forest: Forest
    class_labels: tuple[int, ...]  # sorted ascending; argmax ties pick the lowest
    hyperparams: BoostingParams
    seed: int = 0
    bucket_bounds: dict[str, tuple[float, float, float]] | None = None

    def to_json(self) -> dict:
        return {
            "format_version": MODEL_FORMAT_VERSION,
            "vocabulary": self.vocabulary.to_json(),
            "class_labels": list(self.class_labels),
            "hyperparams": self.hyperparams.to_json(),
            "seed": self.seed,
            "bucket_bounds": (
                {k: list(v) for k, v in self.bucket_bounds.items()}
                if self.bucket_bounds
                else None
            ),
            "trees": [
                [tree.to_json() for tree in per_class] for per_class in self.forest.trees
            ],
        }

    @classmethod
    def from_json(cls, doc: Mapping) -> "ClassifierModel":
        if doc.get("format_version") != MODEL_FORMAT_VERSION:
            raise ValueError(f"unsupported model format: {doc.get('format_version')}")
        vocab = EncoderVocabulary.from_json(doc["vocabulary"])
        params = BoostingParams.from_json(doc["hyperparams"])
        trees = [
            [Tree.from_json(t, params.max_depth) for t in per_class]
            for per_class in doc["trees"]
        ]
        class_labels = tuple(int(c) for c in doc["class_labels"])
        forest = Forest(
            trees=trees, n_classes=len(class_labels), dim=vocab.dimension, params=params
        )
        bounds = doc.get("bucket_bounds")
        return cls(
            vocabulary=vocab,
            forest=forest,
            class_labels=class_labels,
            hyperparams=params,
            seed=int(doc.get("seed", 0)),
            bucket_bounds=(
                {k: (float(v[0]), float(v[1]), float(v[2])) for k, v in bounds.items()}
                if bounds
                else None
            ),
        )


def build_training_set(
    dataset: Dataset, profiles: ProfileSet
) -> tuple[TrainingSet, EncoderVocabulary]:
    """Encode the metadata of clustered workloads; outliers are left out."""
    label_of: dict[str, int] = {}
    for g in profiles.groups:
        if g.member_ids is None:
            raise ValueError("profile set lacks member ids; rebuild profiles in memory")
        for wid in g.member_ids:
            label_of[wid] = g.label
    kept = [w for w in dataset.workloads if w.id in label_of]
    if not kept:
        raise EmptyProfileSetError("no clustered workloads to train on")
    vocab = build_vocabulary(dataset.schema_metadata, (w.metadata for w in kept))
    rows = [encode_record(vocab, w.metadata) for w in kept]
    labels = np.array([label_of[w.id] for w in kept], dtype=np.int64)
    return TrainingSet(rows=rows, labels=labels, dimension=vocab.dimension), vocab


def train(
    ts: TrainingSet,
    vocabulary: EncoderVocabulary,
    hyperparams: BoostingParams = DEFAULT_PARAMS,
    seed: int = 0,
    bucket_bounds: Mapping[str, Sequence[float]] | None = None,
) -> ClassifierModel:
    """Fit the boosted classifier; deterministic for a fixed seed.

    The exact greedy algorithm uses no randomness; the seed is recorded so a
    model is traceable to its build. An 80/20 train/validation split, when
    wanted, is the caller's job.
    """
    classes = sorted(set(int(v) for v in ts.labels))
    if len(classes) < 2:
        raise DegenerateDataError("training needs at least 2 distinct profile labels")
    dense = {c: i for i, c in enumerate(classes)}
    y = np.array([dense[int(v)] for v in ts.labels], dtype=np.int64)
    forest = fit_forest(ts.rows, y, len(classes), ts.dimension, hyperparams)
    return ClassifierModel(
        vocabulary=vocabulary,
        forest=forest,
        class_labels=tuple(classes),
        hyperparams=hyperparams,
        seed=seed,
        bucket_bounds=(
            {k: (float(v[0]), float(v[1]), float(v[2])) for k, v in bucket_bounds.items()}
            if bucket_bounds
            else None
        ),
    )


def _softmax_vector(z: np.ndarray) -> np.ndarray:
    e = np.exp(z - z.max())
    return e / e.sum()


def classify(model: ClassifierModel, metadata: Mapping[str, str]) -> tuple[int, dict[int, float]]:
    """Label one workload from metadata alone; ties pick the lowest label."""
    active = encode_record(model.vocabulary, _apply_buckets(model, metadata))
    raw = model.forest.raw_scores_sparse_one(active)
    probs = _softmax_vector(raw)
    best = int(np.argmax(probs))
    return model.class_labels[best], {
        c: float(p) for c, p in zip(model.class_labels, probs)
    }


def classify_batch(
    model: ClassifierModel, records: Sequence[Mapping[str, str]]
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized batch path: (labels, probability matrix in class order)."""
    rows = [
        encode_record(model.vocabulary, _apply_buckets(model, rec)) for rec in records
    ]
    present = dense_presence(rows, model.vocabulary.dimension)
    probs = model.forest.probabilities(present)
    labels = np.array([model.class_labels[i] for i in probs.argmax(axis=1)])
    return labels, probs


def _apply_buckets(model: ClassifierModel, metadata: Mapping[str, str]) -> Mapping[str, str]:
    if not model.bucket_bounds:
        return metadata
    from .trace_model import bucketize_value

    out = dict(metadata)
    for feature, bounds in model.bucket_bounds.items():
        if feature in out:
            try:
                out[feature] = bucketize_value(float(out[feature]), bounds)
            except (TypeError, ValueError):
                pass  # already a quartile label
    return out


def feature_importance(model: ClassifierModel, top_n: int = 20) -> list[tuple[str, float]]:
    """Encoded features ranked by split-gain share (sums to 1 over all)."""
    gains = total_gain_by_column(model.forest)
    total = float(gains.sum())
    if total <= 0.0:
        return []
    share = gains / total
    order = np.argsort(-share, kind="stable")[:top_n]
    return [
        (model.vocabulary.column_name(int(i)), float(share[i]))
        for i in order
        if share[i] > 0.0
    ]


def path_attribution(model: ClassifierModel, metadata: Mapping[str, str]) -> dict[str, float]:
    """Per-prediction attribution: leaf-value deltas along each tree path,
    summed per encoded feature across all trees and classes."""
    active = set(encode_record(model.vocabulary, _apply_buckets(model, metadata)))
    out: dict[int, float] = {}
    lr = model.forest.params.learning_rate
    for per_class in model.forest.trees:
        for tree in per_class:
            i = 0
            while tree.feature[i] >= 0:
                feat = int(tree.feature[i])
                child = 2 * i + 2 if feat in active else 2 * i + 1
                delta = float(tree.value[child] - tree.value[i])
                out[feat] = out.get(feat, 0.0) + lr * delta
                i = child
    return {model.vocabulary.column_name(f): v for f, v in sorted(out.items())}
