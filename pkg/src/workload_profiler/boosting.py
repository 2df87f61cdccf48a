"""Gradient-boosted decision trees with a softmax objective, from scratch.

Inputs are sparse one-hot rows (tuples of active column indices), which makes
exact greedy split finding cheap: for every (tree node, column) pair the
gradient/hessian sums on the column's "present" side are accumulated with one
bincount pass, and the "absent" side follows by subtraction. Trees are grown
level-wise to max_depth with the usual second-order gain

    0.5 * (GL^2/(HL+l2) + GR^2/(HR+l2) - G^2/(H+l2))

and leaf weight -G/(H+l2). Training rows are sorted into a canonical order
first, so the fitted model is invariant to input row permutation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np


@dataclass(frozen=True)
class BoostingParams:
    rounds: int = 100
    learning_rate: float = 0.3
    max_depth: int = 6
    min_child_weight: float = 1.0
    l2: float = 1.0

    def to_json(self) -> dict:
        return {
            "rounds": self.rounds,
            "learning_rate": self.learning_rate,
            "max_depth": self.max_depth,
            "min_child_weight": self.min_child_weight,
            "l2": self.l2,
        }

    @classmethod
    def from_json(cls, doc: Mapping) -> "BoostingParams":
        return cls(
            rounds=int(doc["rounds"]),
            learning_rate=float(doc["learning_rate"]),
            max_depth=int(doc["max_depth"]),
            min_child_weight=float(doc["min_child_weight"]),
            l2=float(doc["l2"]),
        )


DEFAULT_PARAMS = BoostingParams()

_MIN_GAIN = 1e-12  # a split must strictly reduce loss


@dataclass
class Tree:
    """Heap-layout binary tree: children of i are 2i+1 (absent) / 2i+2 (present)."""

    feature: np.ndarray  # split column, -1 where leaf
    value: np.ndarray    # node weight -G/(H+l2); the prediction at leaves
    gain: np.ndarray     # split gain, 0 at leaves

    def predict(self, present: np.ndarray) -> np.ndarray:
        """Route rows given a dense boolean presence matrix (n, dim)."""
        n = present.shape[0]
        node = np.zeros(n, dtype=np.int64)
        active = self.feature[node] >= 0
        while np.any(active):
            idx = np.flatnonzero(active)
            feats = self.feature[node[idx]]
            goes_right = present[idx, feats]
            node[idx] = 2 * node[idx] + 1 + goes_right
            active = self.feature[node] >= 0
        return self.value[node]

    def predict_sparse_one(self, active_cols: frozenset[int] | set[int]) -> float:
        i = 0
        while self.feature[i] >= 0:
            i = 2 * i + 2 if self.feature[i] in active_cols else 2 * i + 1
        return float(self.value[i])

    def to_json(self) -> dict:
        def node(i: int) -> dict:
            if self.feature[i] < 0:
                return {"value": float(self.value[i])}
            return {
                "feature": int(self.feature[i]),
                "value": float(self.value[i]),
                "gain": float(self.gain[i]),
                "absent": node(2 * i + 1),
                "present": node(2 * i + 2),
            }

        return node(0)

    @classmethod
    def from_json(cls, doc: Mapping, max_depth: int) -> "Tree":
        size = 2 ** (max_depth + 2) - 1
        feature = np.full(size, -1, dtype=np.int64)
        value = np.zeros(size, dtype=np.float64)
        gain = np.zeros(size, dtype=np.float64)

        def fill(node: Mapping, i: int) -> None:
            value[i] = node["value"]
            if "feature" in node:
                feature[i] = node["feature"]
                gain[i] = node["gain"]
                fill(node["absent"], 2 * i + 1)
                fill(node["present"], 2 * i + 2)

        fill(doc, 0)
        return cls(feature=feature, value=value, gain=gain)


def canonical_order(rows: Sequence[tuple[int, ...]], labels: np.ndarray) -> np.ndarray:
    """Permutation sorting rows by (active columns, label): a stable, order-
    free presentation of the same training bag."""
    keys = [(rows[i], int(labels[i]), i) for i in range(len(rows))]
    keys.sort(key=lambda t: (t[0], t[1]))
    return np.array([t[2] for t in keys], dtype=np.int64)


def _softmax(F: np.ndarray) -> np.ndarray:
    z = F - F.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _build_tree(
    rows_flat: np.ndarray,
    cols_flat: np.ndarray,
    g: np.ndarray,
    h: np.ndarray,
    dim: int,
    params: BoostingParams,
) -> tuple[Tree, np.ndarray]:
    """Grow one regression tree; returns the tree and per-row predictions."""
    n = g.shape[0]
    size = 2 ** (params.max_depth + 2) - 1
    feature = np.full(size, -1, dtype=np.int64)
    value = np.zeros(size, dtype=np.float64)
    gain_arr = np.zeros(size, dtype=np.float64)
    pred = np.zeros(n, dtype=np.float64)

    node_of = np.zeros(n, dtype=np.int64)  # -1 once a row reaches a leaf
    level_nodes = np.array([0], dtype=np.int64)

    for depth in range(params.max_depth + 1):
        if level_nodes.size == 0:
            break
        base = level_nodes.min()
        width = int(level_nodes.max() - base + 1)

        live = node_of >= 0
        rel = np.full(n, -1, dtype=np.int64)
        rel[live] = node_of[live] - base

        G = np.bincount(rel[live], weights=g[live], minlength=width)
        H = np.bincount(rel[live], weights=h[live], minlength=width)

        live_entries = rel[rows_flat] >= 0
        rf = rows_flat[live_entries]
        cf = cols_flat[live_entries]
        keys = rel[rf] * dim + cf
        G1 = np.bincount(keys, weights=g[rf], minlength=width * dim).reshape(width, dim)
        H1 = np.bincount(keys, weights=h[rf], minlength=width * dim).reshape(width, dim)
        G0 = G[:, None] - G1
        H0 = H[:, None] - H1

        node_values = -G / (H + params.l2)
        for node in level_nodes:
            value[node] = node_values[node - base]

        if depth == params.max_depth:
            for node in level_nodes:
                sel = node_of == node
                pred[sel] = value[node]
                node_of[sel] = -1
            break

        l2 = params.l2
        score_parent = G**2 / (H + l2)
        gains = 0.5 * (G1**2 / (H1 + l2) + G0**2 / (H0 + l2) - score_parent[:, None])
        ok = (H1 >= params.min_child_weight) & (H0 >= params.min_child_weight)
        gains = np.where(ok, gains, -np.inf)

        next_nodes: list[int] = []
        for node in level_nodes:
            r = node - base
            col = int(np.argmax(gains[r]))
            best_gain = gains[r, col]
            if not np.isfinite(best_gain) or best_gain <= _MIN_GAIN:
                sel = node_of == node
                pred[sel] = value[node]
                node_of[sel] = -1
                continue
            feature[node] = col
            gain_arr[node] = best_gain
            next_nodes.extend((2 * node + 1, 2 * node + 2))

        if not next_nodes:
            break

        # Move surviving rows to a child: right iff the split column is active.
        live = node_of >= 0
        splitting = live & (feature[np.where(live, node_of, 0)] >= 0)
        goes_right = np.zeros(n, dtype=bool)
        entry_live = splitting[rows_flat]
        match = entry_live & (cols_flat == feature[np.where(splitting, node_of, 0)[rows_flat]])
        goes_right[rows_flat[match]] = True
        node_of[splitting] = 2 * node_of[splitting] + 1 + goes_right[splitting]
        level_nodes = np.unique(np.asarray(next_nodes, dtype=np.int64))

    return Tree(feature=feature, value=value, gain=gain_arr), pred


@dataclass
class Forest:
    """rounds x n_classes trees plus what a predictor needs to route rows."""

    trees: list[list[Tree]]
    n_classes: int
    dim: int
    params: BoostingParams

    def raw_scores(self, present: np.ndarray) -> np.ndarray:
        n = present.shape[0]
        F = np.zeros((n, self.n_classes), dtype=np.float64)
        lr = self.params.learning_rate
        for per_class in self.trees:
            for c, tree in enumerate(per_class):
                F[:, c] += lr * tree.predict(present)
        return F

    def raw_scores_sparse_one(self, active_cols) -> np.ndarray:
        cols = set(active_cols)
        F = np.zeros(self.n_classes, dtype=np.float64)
        lr = self.params.learning_rate
        for per_class in self.trees:
            for c, tree in enumerate(per_class):
                F[c] += lr * tree.predict_sparse_one(cols)
        return F

    def probabilities(self, present: np.ndarray) -> np.ndarray:
        return _softmax(self.raw_scores(present))


def dense_presence(rows: Sequence[tuple[int, ...]], dim: int) -> np.ndarray:
    present = np.zeros((len(rows), dim), dtype=bool)
    for i, cols in enumerate(rows):
        for c in cols:
            present[i, c] = True
    return present


def fit_forest(
    rows: Sequence[tuple[int, ...]],
    labels: np.ndarray,
    n_classes: int,
    dim: int,
    params: BoostingParams = DEFAULT_PARAMS,
) -> Forest:
    """Boost softmax trees on sparse one-hot rows with dense labels 0..K-1."""
    labels = np.asarray(labels, dtype=np.int64)
    order = canonical_order(rows, labels)
    rows = [rows[i] for i in order]
    y = labels[order]
    n = len(rows)

    rows_flat = np.array(
        [i for i, cols in enumerate(rows) for _ in cols], dtype=np.int64
    )
    cols_flat = np.array([c for cols in rows for c in cols], dtype=np.int64)

    onehot = np.zeros((n, n_classes), dtype=np.float64)
    onehot[np.arange(n), y] = 1.0

    F = np.zeros((n, n_classes), dtype=np.float64)
    trees: list[list[Tree]] = []
    for _ in range(params.rounds):
        P = _softmax(F)
        per_class: list[Tree] = []
        for c in range(n_classes):
            g = P[:, c] - onehot[:, c]
            h = P[:, c] * (1.0 - P[:, c])
            tree, pred = _build_tree(rows_flat, cols_flat, g, h, dim, params)
            F[:, c] += params.learning_rate * pred
            per_class.append(tree)
        trees.append(per_class)
    return Forest(trees=trees, n_classes=n_classes, dim=dim, params=params)


def total_gain_by_column(forest: Forest) -> np.ndarray:
    gains = np.zeros(forest.dim, dtype=np.float64)
    for per_class in forest.trees:
        for tree in per_class:
            split = tree.feature >= 0
            np.add.at(gains, tree.feature[split], tree.gain[split])
    return gains
