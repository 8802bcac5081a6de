"""Soft-margin SVM with linear and polynomial kernels, trained by SMO."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from hydrasense import _kernels
from hydrasense.ml.base import Standardizer, encode_labels, register_model, to_signed

KERNEL_DEGREES = {"linear": 1, "poly2": 2, "poly3": 3}

KKT_TOL = 1e-3


def kernel_matrix(a: np.ndarray, b: np.ndarray, kernel: str) -> np.ndarray:
    """<a,b> for 'linear', (1+<a,b>)^d for 'poly2'/'poly3'."""
    g = a @ b.T
    degree = KERNEL_DEGREES[kernel]
    if degree == 1:
        return g
    return (1.0 + g) ** degree


@register_model("svm")
@dataclass
class SvmModel:
    kernel: str
    C: float
    alpha: np.ndarray  # full dual vector, training order
    b: float
    sv_x: np.ndarray  # standardized training points
    sv_y: np.ndarray  # -1/+1
    classes: list
    scaler: Standardizer
    sweeps: int = 0
    objective_trace: np.ndarray = field(default_factory=lambda: np.empty(0))

    def decision_function(self, x) -> np.ndarray:
        x = self.scaler.transform(np.atleast_2d(x))
        k = kernel_matrix(self.sv_x, x, self.kernel)
        return (self.alpha * self.sv_y) @ k + self.b

    def predict(self, x):
        scores = self.decision_function(x)
        return np.asarray(self.classes)[(scores >= 0).astype(np.int64)]

    def kkt_residual(self) -> float:
        """Largest violation of the KKT conditions on the training set."""
        k = kernel_matrix(self.sv_x, self.sv_x, self.kernel)
        f = (self.alpha * self.sv_y) @ k + self.b
        margins = self.sv_y * f
        residual = 0.0
        for a, m in zip(self.alpha, margins):
            if a < 1e-9 * self.C:
                residual = max(residual, 1.0 - m)  # should satisfy m >= 1
            elif a > (1.0 - 1e-9) * self.C:
                residual = max(residual, m - 1.0)  # should satisfy m <= 1
            else:
                residual = max(residual, abs(m - 1.0))
        return residual

    def to_dict(self) -> dict:
        return {
            "kernel": self.kernel,
            "C": self.C,
            "alpha": self.alpha.tolist(),
            "b": self.b,
            "sv_x": self.sv_x.tolist(),
            "sv_y": self.sv_y.tolist(),
            "classes": list(self.classes),
            "scaler": self.scaler.to_dict(),
            "sweeps": self.sweeps,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SvmModel":
        return cls(
            kernel=d["kernel"],
            C=d["C"],
            alpha=np.asarray(d["alpha"], dtype=np.float64),
            b=d["b"],
            sv_x=np.asarray(d["sv_x"], dtype=np.float64),
            sv_y=np.asarray(d["sv_y"], dtype=np.float64),
            classes=list(d["classes"]),
            scaler=Standardizer.from_dict(d["scaler"]),
            sweeps=d.get("sweeps", 0),
        )


def svm_fit(
    x,
    labels,
    kernel: str = "linear",
    C: float = 1.0,
    tol: float = KKT_TOL,
    max_sweeps: int = 1000,
    record_objective: bool = False,
) -> SvmModel:
    """Solve the soft-margin dual by sequential pairwise optimization."""
    if kernel not in KERNEL_DEGREES:
        raise ValueError(f"unknown kernel {kernel!r}")
    x = np.asarray(x, dtype=np.float64)
    classes, y01 = encode_labels(labels)
    y = to_signed(y01)
    scaler = Standardizer.fit(x)
    xs = scaler.transform(x)
    k = kernel_matrix(xs, xs, kernel)
    alpha, b, sweeps, trace = _kernels.smo_solve(
        k, y, C, tol, max_sweeps=max_sweeps, record_objective=record_objective
    )
    return SvmModel(
        kernel=kernel,
        C=C,
        alpha=alpha,
        b=b,
        sv_x=xs,
        sv_y=y,
        classes=classes,
        scaler=scaler,
        sweeps=sweeps,
        objective_trace=np.asarray(trace),
    )


def svm_predict(model: SvmModel, x):
    return model.predict(x)
