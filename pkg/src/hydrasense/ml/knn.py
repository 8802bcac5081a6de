"""K-nearest-neighbour classifier (fine k=1, medium k=10, coarse k=100)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from hydrasense import _kernels
from hydrasense.ml.base import Standardizer, encode_labels, register_model


@register_model("knn")
@dataclass
class KnnModel:
    k: int
    train_x: np.ndarray  # standardized
    train_y: np.ndarray  # 0/1
    classes: list
    scaler: Standardizer

    def predict(self, x: np.ndarray):
        x = self.scaler.transform(np.atleast_2d(x))
        idx = _kernels.knn_predict(self.train_x, self.train_y, x, self.k)
        return np.asarray(self.classes)[idx]

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "train_x": self.train_x.tolist(),
            "train_y": self.train_y.tolist(),
            "classes": list(self.classes),
            "scaler": self.scaler.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "KnnModel":
        return cls(
            k=d["k"],
            train_x=np.asarray(d["train_x"], dtype=np.float64),
            train_y=np.asarray(d["train_y"], dtype=np.int64),
            classes=list(d["classes"]),
            scaler=Standardizer.from_dict(d["scaler"]),
        )


def knn_fit(x, labels, k: int) -> KnnModel:
    """Memorize the standardized training set.

    Euclidean distance, majority vote; a tied vote goes to the class of
    the single nearest neighbour.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] == 0:
        raise ValueError("empty training set")
    if k < 1 or k > x.shape[0]:
        raise ValueError(f"k={k} out of range for {x.shape[0]} training points")
    classes, y = encode_labels(labels)
    scaler = Standardizer.fit(x)
    return KnnModel(k=k, train_x=scaler.transform(x), train_y=y, classes=classes, scaler=scaler)


def knn_predict(model: KnnModel, x):
    return model.predict(x)
