"""Shared classifier machinery: standardization, labels, serialization."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

FORMAT_VERSION = 1


@dataclass
class Standardizer:
    """Per-dimension affine scaler fitted on training data only."""

    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, x: np.ndarray) -> "Standardizer":
        x = np.asarray(x, dtype=np.float64)
        mean = x.mean(axis=0)
        std = x.std(axis=0)
        std = np.where(std < 1e-12, 1.0, std)
        return cls(mean=mean, std=std)

    @classmethod
    def identity(cls, dim: int) -> "Standardizer":
        return cls(mean=np.zeros(dim), std=np.ones(dim))

    def transform(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=np.float64) - self.mean) / self.std

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Standardizer":
        return cls(mean=np.asarray(d["mean"]), std=np.asarray(d["std"]))


def encode_labels(labels):
    """Map labels to 0/1 against the sorted class list.

    Exactly two classes are supported end to end.
    """
    classes = sorted(set(labels))
    if len(classes) != 2:
        raise ValueError(f"expected exactly 2 classes, got {classes}")
    lookup = {c: i for i, c in enumerate(classes)}
    y = np.array([lookup[l] for l in labels], dtype=np.int64)
    return classes, y


def to_signed(y01: np.ndarray) -> np.ndarray:
    """0/1 labels to -1/+1 (class index 1 is positive)."""
    return 2.0 * np.asarray(y01, dtype=np.float64) - 1.0


_MODEL_REGISTRY = {}


def register_model(kind: str):
    def wrap(cls):
        _MODEL_REGISTRY[kind] = cls
        cls.kind = kind
        return cls
    return wrap


def model_to_dict(model) -> dict:
    d = model.to_dict()
    d["kind"] = model.kind
    d["format_version"] = FORMAT_VERSION
    return d


def model_from_dict(d: dict):
    d = dict(d)
    version = d.pop("format_version", None)
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported model format version: {version}")
    kind = d.pop("kind")
    try:
        cls = _MODEL_REGISTRY[kind]
    except KeyError:
        raise ValueError(f"unknown model kind {kind!r}") from None
    return cls.from_dict(d)


def save_model(model, path):
    Path(path).write_text(json.dumps(model_to_dict(model), sort_keys=True) + "\n")


def load_model(path):
    return model_from_dict(json.loads(Path(path).read_text()))
