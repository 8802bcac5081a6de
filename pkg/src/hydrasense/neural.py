"""Fully-connected feedforward classifiers: ReLU hidden layers, softmax out.

Five named variants mirror the comparison roster: narrow [10], medium
[25], wide [100], bilayer [10, 10], trilayer [10, 10, 10].  Training is
plain mini-batch gradient descent with momentum and a fixed epoch count;
no early stopping, so runs are deterministic and comparable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from hydrasense.ml.base import Standardizer, encode_labels, register_model

MLP_VARIANTS = {
    "narrow": (10,),
    "medium": (25,),
    "wide": (100,),
    "bilayer": (10, 10),
    "trilayer": (10, 10, 10),
}


@dataclass(frozen=True)
class MlpSpec:
    hidden_sizes: tuple = (10,)
    epochs: int = 300
    learning_rate: float = 0.01
    batch_size: int = 64
    l2: float = 1e-4
    momentum: float = 0.9
    seed: int = 0

    def __post_init__(self):
        if any(h < 1 for h in self.hidden_sizes):
            raise ValueError("hidden layer sizes must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")


@register_model("mlp")
@dataclass
class MlpModel:
    weights: list  # one matrix per layer, (fan_in, fan_out)
    biases: list
    classes: list
    scaler: Standardizer
    spec: MlpSpec = field(default_factory=MlpSpec)
    loss_trace: np.ndarray = field(default_factory=lambda: np.empty(0))

    def _forward(self, x_std: np.ndarray):
        """Returns (activations per layer, output probabilities)."""
        acts = [x_std]
        a = x_std
        for w, b in zip(self.weights[:-1], self.biases[:-1]):
            a = np.maximum(a @ w + b, 0.0)
            acts.append(a)
        logits = a @ self.weights[-1] + self.biases[-1]
        logits = logits - logits.max(axis=1, keepdims=True)
        e = np.exp(logits)
        probs = e / e.sum(axis=1, keepdims=True)
        return acts, probs

    def predict_proba(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if x.shape[1] != self.weights[0].shape[0]:
            raise ValueError(
                f"expected {self.weights[0].shape[0]} features, got {x.shape[1]}"
            )
        _, probs = self._forward(self.scaler.transform(x))
        return probs

    def predict(self, x):
        probs = self.predict_proba(x)
        return np.asarray(self.classes)[probs.argmax(axis=1)]

    def to_dict(self) -> dict:
        return {
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
            "classes": list(self.classes),
            "scaler": self.scaler.to_dict(),
            "spec": {
                "hidden_sizes": list(self.spec.hidden_sizes),
                "epochs": self.spec.epochs,
                "learning_rate": self.spec.learning_rate,
                "batch_size": self.spec.batch_size,
                "l2": self.spec.l2,
                "momentum": self.spec.momentum,
                "seed": self.spec.seed,
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MlpModel":
        spec = d["spec"]
        return cls(
            weights=[np.asarray(w, dtype=np.float64) for w in d["weights"]],
            biases=[np.asarray(b, dtype=np.float64) for b in d["biases"]],
            classes=list(d["classes"]),
            scaler=Standardizer.from_dict(d["scaler"]),
            spec=MlpSpec(
                hidden_sizes=tuple(spec["hidden_sizes"]),
                epochs=spec["epochs"],
                learning_rate=spec["learning_rate"],
                batch_size=spec["batch_size"],
                l2=spec["l2"],
                momentum=spec["momentum"],
                seed=spec["seed"],
            ),
        )


def mlp_forward(model: MlpModel, x) -> np.ndarray:
    """Class probabilities; rows sum to 1."""
    return model.predict_proba(x)


def _init_params(sizes, rng):
    """He initialization: std sqrt(2 / fan_in), zero biases."""
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        weights.append(rng.standard_normal((fan_in, fan_out)) * np.sqrt(2.0 / fan_in))
        biases.append(np.zeros(fan_out))
    return weights, biases


def _loss_and_grads(weights, biases, x_std, y01, l2):
    """Mean cross-entropy + l2 * sum ||W||^2 (biases unpenalized)."""
    n = len(y01)
    acts = [x_std]
    a = x_std
    for w, b in zip(weights[:-1], biases[:-1]):
        a = np.maximum(a @ w + b, 0.0)
        acts.append(a)
    logits = a @ weights[-1] + biases[-1]
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    probs = e / e.sum(axis=1, keepdims=True)
    ce = -np.log(probs[np.arange(n), y01] + 1e-300).mean()
    loss = ce + l2 * sum(float((w * w).sum()) for w in weights)

    delta = probs.copy()
    delta[np.arange(n), y01] -= 1.0
    delta /= n
    grads_w = [None] * len(weights)
    grads_b = [None] * len(biases)
    for layer in range(len(weights) - 1, -1, -1):
        grads_w[layer] = acts[layer].T @ delta + 2.0 * l2 * weights[layer]
        grads_b[layer] = delta.sum(axis=0)
        if layer > 0:
            delta = (delta @ weights[layer].T) * (acts[layer] > 0.0)
    return loss, grads_w, grads_b


def mlp_fit(x, labels, spec: MlpSpec) -> MlpModel:
    """Mini-batch gradient descent with momentum; deterministic per seed."""
    x = np.asarray(x, dtype=np.float64)
    classes, y = encode_labels(labels)
    if min((y == 0).sum(), (y == 1).sum()) < 2:
        raise ValueError("need at least 2 examples per class")
    scaler = Standardizer.fit(x)
    xs = scaler.transform(x)
    n, dim = xs.shape

    sizes = (dim,) + tuple(spec.hidden_sizes) + (2,)
    init_rng = np.random.default_rng(spec.seed)
    weights, biases = _init_params(sizes, init_rng)
    shuffle_rng = np.random.default_rng((spec.seed, 4242))

    vel_w = [np.zeros_like(w) for w in weights]
    vel_b = [np.zeros_like(b) for b in biases]
    trace = [_loss_and_grads(weights, biases, xs, y, spec.l2)[0]]

    for epoch in range(spec.epochs):
        order = shuffle_rng.permutation(n)
        for start in range(0, n, spec.batch_size):
            rows = order[start:start + spec.batch_size]
            _, gw, gb = _loss_and_grads(weights, biases, xs[rows], y[rows], spec.l2)
            for i in range(len(weights)):
                vel_w[i] = spec.momentum * vel_w[i] - spec.learning_rate * gw[i]
                vel_b[i] = spec.momentum * vel_b[i] - spec.learning_rate * gb[i]
                weights[i] = weights[i] + vel_w[i]
                biases[i] = biases[i] + vel_b[i]
        loss = _loss_and_grads(weights, biases, xs, y, spec.l2)[0]
        if not np.isfinite(loss):
            raise RuntimeError(f"training diverged (non-finite loss) at epoch {epoch + 1}")
        trace.append(loss)

    return MlpModel(
        weights=weights,
        biases=biases,
        classes=classes,
        scaler=scaler,
        spec=spec,
        loss_trace=np.asarray(trace),
    )


def mlp_gradcheck(model: MlpModel, x, labels, step: float = 1e-5) -> float:
    """Max relative error between backprop and central finite differences.

    Checks every parameter, so keep the model small.
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if x.shape[0] == 0:
        raise ValueError("batch must be non-empty")
    lookup = {c: i for i, c in enumerate(model.classes)}
    y = np.array([lookup[l] for l in labels], dtype=np.int64)
    xs = model.scaler.transform(x)
    weights = [w.copy() for w in model.weights]
    biases = [b.copy() for b in model.biases]
    _, gw, gb = _loss_and_grads(weights, biases, xs, y, model.spec.l2)

    worst = 0.0

    def loss_fn():
        return _loss_and_grads(weights, biases, xs, y, model.spec.l2)[0]

    for grads, params in ((gw, weights), (gb, biases)):
        for g, p in zip(grads, params):
            flat_p = p.reshape(-1)
            flat_g = g.reshape(-1)
            for j in range(flat_p.size):
                orig = flat_p[j]
                flat_p[j] = orig + step
                up = loss_fn()
                flat_p[j] = orig - step
                down = loss_fn()
                flat_p[j] = orig
                numeric = (up - down) / (2.0 * step)
                denom = max(abs(numeric), abs(flat_g[j]), 1e-8)
                worst = max(worst, abs(numeric - flat_g[j]) / denom)
    return worst
