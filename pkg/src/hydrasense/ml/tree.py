"""CART-style binary decision trees with Gini impurity.

Grown breadth-first until the internal-node cap (fine: 100, coarse: 4)
or purity.  Supports sample weights so the boosting ensemble can reuse
the same growing code.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from hydrasense import _kernels
from hydrasense.ml.base import Standardizer, encode_labels, register_model


@register_model("tree")
@dataclass
class TreeModel:
    """Flat array representation: node i splits on feature[i] < threshold.

    feature[i] == -1 marks a leaf; children index into the same arrays.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    leaf_label: np.ndarray  # class index, valid at leaves
    classes: list
    scaler: Standardizer
    max_splits: int

    @property
    def n_internal(self) -> int:
        return int((self.feature >= 0).sum())

    def predict_idx(self, x_std: np.ndarray) -> np.ndarray:
        node = np.zeros(len(x_std), dtype=np.int64)
        while True:
            feat = self.feature[node]
            active = feat >= 0
            if not active.any():
                break
            rows = np.nonzero(active)[0]
            goes_left = x_std[rows, feat[rows]] < self.threshold[node[rows]]
            node[rows] = np.where(goes_left, self.left[node[rows]], self.right[node[rows]])
        return self.leaf_label[node]

    def predict(self, x):
        x_std = self.scaler.transform(np.atleast_2d(x))
        return np.asarray(self.classes)[self.predict_idx(x_std)]

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "leaf_label": self.leaf_label.tolist(),
            "classes": list(self.classes),
            "scaler": self.scaler.to_dict(),
            "max_splits": self.max_splits,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TreeModel":
        return cls(
            feature=np.asarray(d["feature"], dtype=np.int64),
            threshold=np.asarray(d["threshold"], dtype=np.float64),
            left=np.asarray(d["left"], dtype=np.int64),
            right=np.asarray(d["right"], dtype=np.int64),
            leaf_label=np.asarray(d["leaf_label"], dtype=np.int64),
            classes=list(d["classes"]),
            scaler=Standardizer.from_dict(d["scaler"]),
            max_splits=d["max_splits"],
        )


def _majority(y: np.ndarray, w: np.ndarray) -> int:
    w1 = float(w[y == 1].sum())
    w0 = float(w.sum()) - w1
    return 1 if w1 > w0 else 0  # tie goes to class 0


def grow_tree(x_std: np.ndarray, y: np.ndarray, w: np.ndarray, max_splits: int):
    """Breadth-first growth; returns flat node arrays (see TreeModel)."""
    feature, threshold, left, right, leaf_label = [], [], [], [], []

    def new_node():
        feature.append(-1)
        threshold.append(np.nan)
        left.append(-1)
        right.append(-1)
        leaf_label.append(0)
        return len(feature) - 1

    root = new_node()
    queue = [(root, np.arange(len(y)))]
    n_internal = 0
    while queue:
        node, rows = queue.pop(0)
        ys, ws = y[rows], w[rows]
        leaf_label[node] = _majority(ys, ws)
        if n_internal >= max_splits or len(rows) < 2 or ys.min() == ys.max():
            continue
        feat, thr, gain = _kernels.best_split(x_std[rows], ys, ws)
        if feat < 0 or gain <= 0.0:
            continue
        n_internal += 1
        feature[node] = feat
        threshold[node] = thr
        mask = x_std[rows, feat] < thr
        l, r = new_node(), new_node()
        left[node], right[node] = l, r
        queue.append((l, rows[mask]))
        queue.append((r, rows[~mask]))
    return (
        np.asarray(feature, dtype=np.int64),
        np.asarray(threshold, dtype=np.float64),
        np.asarray(left, dtype=np.int64),
        np.asarray(right, dtype=np.int64),
        np.asarray(leaf_label, dtype=np.int64),
    )


def tree_fit(x, labels, max_splits: int = 100, sample_weight=None) -> TreeModel:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] == 0:
        raise ValueError("empty training set")
    classes = sorted(set(labels))
    if len(classes) == 2:
        classes, y = encode_labels(labels)
    elif len(classes) == 1:
        y = np.zeros(len(labels), dtype=np.int64)
    else:
        raise ValueError(f"expected at most 2 classes, got {classes}")
    scaler = Standardizer.fit(x)
    xs = scaler.transform(x)
    w = np.full(len(y), 1.0 / len(y)) if sample_weight is None else np.asarray(sample_weight, float)
    arrays = grow_tree(xs, y, w, max_splits)
    return TreeModel(*arrays, classes=classes, scaler=scaler, max_splits=max_splits)


def tree_predict(model: TreeModel, x):
    return model.predict(x)
