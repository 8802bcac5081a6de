"""Ensemble classifiers: AdaBoost trees, bagged trees, random subspaces.

Member seeds derive from the ensemble seed and the member index, so
members can be fitted in any order (or in parallel) with identical
results; vote aggregation order is fixed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from hydrasense import _kernels
from hydrasense.ml.base import Standardizer, encode_labels, register_model
from hydrasense.ml.lda import _lda_parts
from hydrasense.ml.tree import TreeModel, grow_tree

ENSEMBLE_KINDS = ("boosted_tree", "bagged_tree", "subspace_knn", "subspace_discriminant")

BOOSTED_BASE_SPLITS = 20
BAGGED_BASE_SPLITS = 100
SUBSPACE_DIM = 32
SUBSPACE_KNN_K = 1


def _member_rng(seed: int, member: int) -> np.random.Generator:
    return np.random.default_rng((int(seed), 7351, member))


def _bare_tree(x_std, y, w, max_splits) -> TreeModel:
    arrays = grow_tree(x_std, y, w, max_splits)
    return TreeModel(
        *arrays,
        classes=[0, 1],
        scaler=Standardizer.identity(x_std.shape[1]),
        max_splits=max_splits,
    )


@register_model("ensemble")
@dataclass
class EnsembleModel:
    ensemble_kind: str
    classes: list
    scaler: Standardizer
    learning_rate: float = 0.1
    member_weights: np.ndarray = field(default_factory=lambda: np.empty(0))
    trees: list = field(default_factory=list)
    masks: list = field(default_factory=list)  # subspace feature indices
    member_train_x: list = field(default_factory=list)  # subspace_knn
    member_train_y: list = field(default_factory=list)
    member_coefs: list = field(default_factory=list)  # subspace_discriminant
    member_intercepts: list = field(default_factory=list)

    @property
    def n_members(self) -> int:
        if self.ensemble_kind in ("boosted_tree", "bagged_tree"):
            return len(self.trees)
        return len(self.masks)

    def _member_votes(self, x_std: np.ndarray) -> np.ndarray:
        """(n_members, n_queries) array of 0/1 member predictions."""
        votes = []
        if self.ensemble_kind in ("boosted_tree", "bagged_tree"):
            for tree in self.trees:
                votes.append(tree.predict_idx(x_std))
        elif self.ensemble_kind == "subspace_knn":
            for mask, tx, ty in zip(self.masks, self.member_train_x, self.member_train_y):
                votes.append(
                    _kernels.knn_predict(tx, ty, np.ascontiguousarray(x_std[:, mask]), SUBSPACE_KNN_K)
                )
        else:
            for mask, coef, b in zip(self.masks, self.member_coefs, self.member_intercepts):
                votes.append((x_std[:, mask] @ coef + b >= 0).astype(np.int64))
        return np.asarray(votes)

    def predict_idx(self, x_std: np.ndarray) -> np.ndarray:
        votes = self._member_votes(x_std)
        if self.ensemble_kind == "boosted_tree":
            score = (self.member_weights[:, None] * (2 * votes - 1)).sum(axis=0)
            return (score >= 0).astype(np.int64)
        # Unweighted majority; an exact tie goes to class index 1.
        return (2 * votes.sum(axis=0) >= votes.shape[0]).astype(np.int64)

    def predict(self, x):
        x_std = self.scaler.transform(np.atleast_2d(x))
        return np.asarray(self.classes)[self.predict_idx(x_std)]

    def to_dict(self) -> dict:
        return {
            "ensemble_kind": self.ensemble_kind,
            "classes": list(self.classes),
            "scaler": self.scaler.to_dict(),
            "learning_rate": self.learning_rate,
            "member_weights": self.member_weights.tolist(),
            "trees": [t.to_dict() for t in self.trees],
            "masks": [list(map(int, m)) for m in self.masks],
            "member_train_x": [m.tolist() for m in self.member_train_x],
            "member_train_y": [m.tolist() for m in self.member_train_y],
            "member_coefs": [c.tolist() for c in self.member_coefs],
            "member_intercepts": list(self.member_intercepts),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EnsembleModel":
        return cls(
            ensemble_kind=d["ensemble_kind"],
            classes=list(d["classes"]),
            scaler=Standardizer.from_dict(d["scaler"]),
            learning_rate=d["learning_rate"],
            member_weights=np.asarray(d["member_weights"], dtype=np.float64),
            trees=[TreeModel.from_dict(t) for t in d["trees"]],
            masks=[np.asarray(m, dtype=np.int64) for m in d["masks"]],
            member_train_x=[np.asarray(m, dtype=np.float64) for m in d["member_train_x"]],
            member_train_y=[np.asarray(m, dtype=np.int64) for m in d["member_train_y"]],
            member_coefs=[np.asarray(c, dtype=np.float64) for c in d["member_coefs"]],
            member_intercepts=list(d["member_intercepts"]),
        )


def _fit_boosted(xs, y, members, learning_rate, base_splits) -> tuple:
    """Discrete AdaBoost; halts early when a member's weighted error
    reaches 0.5 (or hits zero, in which case the member is decisive)."""
    n = len(y)
    w = np.full(n, 1.0 / n)
    trees, alphas = [], []
    y_signed = 2.0 * y - 1.0
    for _ in range(members):
        tree = _bare_tree(xs, y, w, base_splits)
        pred = tree.predict_idx(xs)
        miss = pred != y
        err = float(w[miss].sum())
        if err >= 0.5:
            if not trees:  # keep a neutral member so predict stays defined
                trees.append(tree)
                alphas.append(0.0)
            break
        err = max(err, 1e-12)
        alpha = learning_rate * 0.5 * np.log((1.0 - err) / err)
        trees.append(tree)
        alphas.append(alpha)
        h_signed = 2.0 * pred - 1.0
        w = w * np.exp(-alpha * y_signed * h_signed)
        w = w / w.sum()
        if err <= 1e-12:
            break
    return trees, np.asarray(alphas)


def boosting_round_weights(y01, pred01, w, learning_rate=0.1):
    """One AdaBoost reweighting step, exposed for verification."""
    y_signed = 2.0 * np.asarray(y01, float) - 1.0
    h_signed = 2.0 * np.asarray(pred01, float) - 1.0
    err = max(float(np.asarray(w, float)[pred01 != y01].sum()), 1e-12)
    alpha = learning_rate * 0.5 * np.log((1.0 - err) / err)
    w_new = w * np.exp(-alpha * y_signed * h_signed)
    return alpha, w_new / w_new.sum()


def ensemble_fit(
    x,
    labels,
    kind: str,
    members: int = 30,
    seed: int = 0,
    learning_rate: float = 0.1,
    bootstrap: bool = True,
    subspace_dim: int = SUBSPACE_DIM,
) -> EnsembleModel:
    if kind not in ENSEMBLE_KINDS:
        raise ValueError(f"unknown ensemble kind {kind!r}")
    if members < 1:
        raise ValueError("members must be >= 1")
    x = np.asarray(x, dtype=np.float64)
    classes, y = encode_labels(labels)
    scaler = Standardizer.fit(x)
    xs = scaler.transform(x)
    n, d = xs.shape
    model = EnsembleModel(
        ensemble_kind=kind, classes=classes, scaler=scaler, learning_rate=learning_rate
    )

    if kind == "boosted_tree":
        model.trees, model.member_weights = _fit_boosted(
            xs, y, members, learning_rate, BOOSTED_BASE_SPLITS
        )
    elif kind == "bagged_tree":
        w = np.full(n, 1.0 / n)
        for m in range(members):
            rows = _member_rng(seed, m).integers(0, n, size=n) if bootstrap else np.arange(n)
            model.trees.append(_bare_tree(xs[rows], y[rows], w, BAGGED_BASE_SPLITS))
    elif kind == "subspace_knn":
        for m in range(members):
            mask = np.sort(_member_rng(seed, m).choice(d, size=subspace_dim, replace=False))
            model.masks.append(mask)
            model.member_train_x.append(np.ascontiguousarray(xs[:, mask]))
            model.member_train_y.append(y)
    else:  # subspace_discriminant
        for m in range(members):
            mask = np.sort(_member_rng(seed, m).choice(d, size=subspace_dim, replace=False))
            coef, intercept = _lda_parts(xs[:, mask], y)
            model.masks.append(mask)
            model.member_coefs.append(coef)
            model.member_intercepts.append(intercept)
    return model


def ensemble_predict(model: EnsembleModel, x):
    return model.predict(x)
