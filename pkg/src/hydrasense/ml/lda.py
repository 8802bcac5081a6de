"""Fisher linear discriminant with pooled covariance and ridge shrinkage."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from hydrasense.ml.base import Standardizer, encode_labels, register_model

SHRINKAGE = 1e-4  # lambda = SHRINKAGE * trace(cov) / dim


@register_model("lda")
@dataclass
class LdaModel:
    coef: np.ndarray  # discriminant weight vector Sigma^-1 (mu1 - mu0)
    intercept: float
    classes: list
    scaler: Standardizer

    def decision_function(self, x) -> np.ndarray:
        x = self.scaler.transform(np.atleast_2d(x))
        return x @ self.coef + self.intercept

    def predict(self, x):
        scores = self.decision_function(x)
        return np.asarray(self.classes)[(scores >= 0).astype(np.int64)]

    def to_dict(self) -> dict:
        return {
            "coef": self.coef.tolist(),
            "intercept": self.intercept,
            "classes": list(self.classes),
            "scaler": self.scaler.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LdaModel":
        return cls(
            coef=np.asarray(d["coef"], dtype=np.float64),
            intercept=d["intercept"],
            classes=list(d["classes"]),
            scaler=Standardizer.from_dict(d["scaler"]),
        )


def _lda_parts(xs: np.ndarray, y: np.ndarray):
    """Pooled-covariance discriminant on pre-standardized features."""
    x0, x1 = xs[y == 0], xs[y == 1]
    n0, n1 = len(x0), len(x1)
    mu0, mu1 = x0.mean(axis=0), x1.mean(axis=0)
    dim = xs.shape[1]
    scatter = (x0 - mu0).T @ (x0 - mu0) + (x1 - mu1).T @ (x1 - mu1)
    cov = scatter / max(n0 + n1 - 2, 1)
    lam = SHRINKAGE * np.trace(cov) / dim
    if lam <= 0.0:
        lam = SHRINKAGE  # zero-scatter data still gets an invertible matrix
    cov = cov + lam * np.eye(dim)
    coef = np.linalg.solve(cov, mu1 - mu0)
    prior = np.log(n1 / n0)
    intercept = -0.5 * (mu1 + mu0) @ coef + prior
    return coef, float(intercept)


def ld_fit(x, labels) -> LdaModel:
    x = np.asarray(x, dtype=np.float64)
    classes, y = encode_labels(labels)
    scaler = Standardizer.fit(x)
    coef, intercept = _lda_parts(scaler.transform(x), y)
    return LdaModel(coef=coef, intercept=intercept, classes=classes, scaler=scaler)


def ld_predict(model: LdaModel, x):
    return model.predict(x)
