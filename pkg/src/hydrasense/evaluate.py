"""K-fold evaluation: confusion matrices, accuracy, comparison reports.

"dehydrated" is the positive class throughout.  Both snapshot-level and
session-majority accuracies are reported.  Wall-clock timings are
returned separately from reports so report files stay byte-identical
across reruns.
"""

from __future__ import annotations

import json
import time
import zlib
from dataclasses import dataclass, field

import numpy as np

from hydrasense import preprocess as preprocess_mod
from hydrasense.ml import ensemble as ensemble_mod
from hydrasense.ml import knn as knn_mod
from hydrasense.ml import svm as svm_mod
from hydrasense.ml import tree as tree_mod
from hydrasense import neural as neural_mod

POSITIVE_CLASS = "dehydrated"


@dataclass
class ConfusionMatrix:
    tn: int = 0
    tp: int = 0
    fn: int = 0
    fp: int = 0

    @property
    def total(self) -> int:
        return self.tn + self.tp + self.fn + self.fp

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(
            tn=self.tn + other.tn,
            tp=self.tp + other.tp,
            fn=self.fn + other.fn,
            fp=self.fp + other.fp,
        )

    @classmethod
    def from_predictions(cls, true_labels, pred_labels, positive=POSITIVE_CLASS):
        true_pos = np.asarray(true_labels) == positive
        pred_pos = np.asarray(pred_labels) == positive
        return cls(
            tn=int((~true_pos & ~pred_pos).sum()),
            tp=int((true_pos & pred_pos).sum()),
            fn=int((true_pos & ~pred_pos).sum()),
            fp=int((~true_pos & pred_pos).sum()),
        )

    def as_dict(self) -> dict:
        return {"tn": self.tn, "tp": self.tp, "fn": self.fn, "fp": self.fp}


def accuracy(cm: ConfusionMatrix) -> float:
    """(tn + tp) / (tn + tp + fn + fp) * 100."""
    if cm.total == 0:
        raise ValueError("cannot compute accuracy of an empty confusion matrix")
    return (cm.tn + cm.tp) / cm.total * 100.0


@dataclass
class SessionFeatures:
    """Per-snapshot feature matrix of one session."""

    uid: str
    label: str
    x: np.ndarray  # (n_snapshots, 64) magnitudes
    y: list  # per-snapshot labels (equal to `label` unless permuted)


def extract_features(sessions, filter_spec=None, stride: int = 1):
    """Sessions -> per-snapshot magnitude features, optionally denoised.

    Filtering runs on the full-rate series; the stride subsamples
    afterwards, so the denoiser sees the complete record.
    """
    if stride < 1:
        raise ValueError("stride must be >= 1")
    out = []
    for session in sessions:
        if filter_spec is not None:
            session = preprocess_mod.preprocess_session(session, filter_spec)
        mags = np.abs(session.h_matrix())[::stride]
        out.append(
            SessionFeatures(
                uid=session.uid,
                label=session.label,
                x=np.ascontiguousarray(mags),
                y=[session.label] * mags.shape[0],
            )
        )
    return out


def permute_labels(features, seed: int):
    """Random permutation of the pooled per-snapshot labels (null model)."""
    pooled = [l for f in features for l in f.y]
    rng = np.random.default_rng((int(seed), 555))
    pooled = [pooled[i] for i in rng.permutation(len(pooled))]
    new = []
    start = 0
    for f in features:
        n = len(f.y)
        new.append(SessionFeatures(uid=f.uid, label=f.label, x=f.x, y=pooled[start:start + n]))
        start += n
    return new


def classifier_seed(master_seed: int, name: str, fold: int) -> int:
    """Stable per-(classifier, fold) seed; order of evaluation never matters."""
    tag = zlib.crc32(name.encode("utf-8"))
    return int(
        np.random.SeedSequence((int(master_seed), tag, int(fold))).generate_state(1)[0]
    )


def fit_classifier(spec: dict, x, labels, seed: int):
    """Instantiate and fit one roster entry.

    ``spec`` is {"name": ..., "family": knn|svm|tree|ensemble|mlp,
    "params": {...}}; unknown families are rejected.
    """
    family = spec["family"]
    params = spec.get("params", {})
    if family == "knn":
        return knn_mod.knn_fit(x, labels, k=params["k"])
    if family == "svm":
        return svm_mod.svm_fit(x, labels, kernel=params["kernel"], C=params.get("C", 1.0))
    if family == "tree":
        return tree_mod.tree_fit(x, labels, max_splits=params["max_splits"])
    if family == "ensemble":
        return ensemble_mod.ensemble_fit(
            x,
            labels,
            kind=params["kind"],
            members=params.get("members", 30),
            seed=seed,
            learning_rate=params.get("learning_rate", 0.1),
        )
    if family == "mlp":
        mlp_spec = neural_mod.MlpSpec(
            hidden_sizes=tuple(params["hidden_sizes"]),
            epochs=params.get("epochs", 300),
            learning_rate=params.get("learning_rate", 0.01),
            batch_size=params.get("batch_size", 64),
            l2=params.get("l2", 1e-4),
            momentum=params.get("momentum", 0.9),
            seed=seed,
        )
        return neural_mod.mlp_fit(x, labels, mlp_spec)
    raise ValueError(f"unknown classifier family {family!r}")


@dataclass
class EvalReport:
    classifier: str
    family: str
    params: dict
    k: int
    fold_snapshot_cms: list  # one ConfusionMatrix per fold
    fold_session_cms: list
    dataset_checksum: str
    seed: int
    split_unit: str = "session"

    @property
    def pooled_snapshot_cm(self) -> ConfusionMatrix:
        return sum(self.fold_snapshot_cms, ConfusionMatrix())

    @property
    def pooled_session_cm(self) -> ConfusionMatrix:
        return sum(self.fold_session_cms, ConfusionMatrix())

    @property
    def snapshot_accuracy(self) -> float:
        return accuracy(self.pooled_snapshot_cm)

    @property
    def session_accuracy(self) -> float:
        cm = self.pooled_session_cm
        return accuracy(cm) if cm.total else float("nan")

    def to_json_dict(self) -> dict:
        return {
            "format_version": 1,
            "classifier": self.classifier,
            "family": self.family,
            "params": self.params,
            "k": self.k,
            "split_unit": self.split_unit,
            "folds": [
                {"fold": i, "snapshot": s.as_dict(), "session": m.as_dict()}
                for i, (s, m) in enumerate(
                    zip(self.fold_snapshot_cms, self.fold_session_cms)
                )
            ],
            "pooled_snapshot": self.pooled_snapshot_cm.as_dict(),
            "pooled_session": self.pooled_session_cm.as_dict(),
            "snapshot_accuracy_pct": self.snapshot_accuracy,
            "session_accuracy_pct": (
                self.session_accuracy if self.pooled_session_cm.total else None
            ),
            "dataset_checksum": self.dataset_checksum,
            "seed": self.seed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "EvalReport":
        d = json.loads(text)
        return cls(
            classifier=d["classifier"],
            family=d["family"],
            params=d["params"],
            k=d["k"],
            fold_snapshot_cms=[ConfusionMatrix(**f["snapshot"]) for f in d["folds"]],
            fold_session_cms=[ConfusionMatrix(**f["session"]) for f in d["folds"]],
            dataset_checksum=d["dataset_checksum"],
            seed=d["seed"],
            split_unit=d.get("split_unit", "session"),
        )


def _majority_label(labels):
    """Most frequent label; exact ties go to the positive class."""
    values, counts = np.unique(np.asarray(labels), return_counts=True)
    top = counts.max()
    winners = sorted(values[counts == top])
    if POSITIVE_CLASS in winners:
        return POSITIVE_CLASS
    return winners[0]


def _snapshot_folds(features, k: int, seed: int):
    """Stratified per-snapshot fold indices (leaky by construction; only
    for the comparison mode behind the split_unit flag)."""
    labels = np.asarray([l for f in features for l in f.y])
    fold_of = np.empty(len(labels), dtype=np.int64)
    rng = np.random.default_rng((int(seed), 777))
    for label in sorted(set(labels.tolist())):
        rows = np.nonzero(labels == label)[0]
        rows = rows[rng.permutation(len(rows))]
        fold_of[rows] = np.arange(len(rows)) % k
    return fold_of


def run_cv(
    features,
    plan,
    spec: dict,
    seed: int,
    dataset_checksum: str = "",
    split_unit: str = "session",
):
    """Train on k-1 folds, evaluate on the held-out fold, aggregate.

    Returns (EvalReport, fit_seconds per fold).  Standardization is
    fitted inside each classifier on its training split only.  Train/test
    session disjointness is asserted at run time for every fold.
    """
    name = spec["name"]
    by_uid = {f.uid: f for f in features}
    fold_snapshot_cms, fold_session_cms, timings = [], [], []

    if split_unit == "snapshot":
        k = plan.k
        fold_of = _snapshot_folds(features, k, seed)
        x_all = np.vstack([f.x for f in features])
        y_all = np.asarray([l for f in features for l in f.y])
        for fold in range(k):
            test_mask = fold_of == fold
            t0 = time.perf_counter()
            model = fit_classifier(
                spec, x_all[~test_mask], y_all[~test_mask].tolist(),
                classifier_seed(seed, name, fold),
            )
            timings.append(time.perf_counter() - t0)
            pred = model.predict(x_all[test_mask])
            fold_snapshot_cms.append(
                ConfusionMatrix.from_predictions(y_all[test_mask], pred)
            )
            fold_session_cms.append(ConfusionMatrix())  # sessions straddle folds
    elif split_unit == "session":
        for fold in range(plan.k):
            test_uids = plan.fold_uids(fold)
            train_uids = sorted(u for u, f in plan.assignment.items() if f != fold)
            overlap = set(test_uids) & set(train_uids)
            if overlap:
                raise RuntimeError(f"fold {fold} leaks sessions: {sorted(overlap)}")
            x_train = np.vstack([by_uid[u].x for u in train_uids])
            y_train = [l for u in train_uids for l in by_uid[u].y]
            t0 = time.perf_counter()
            model = fit_classifier(spec, x_train, y_train, classifier_seed(seed, name, fold))
            timings.append(time.perf_counter() - t0)

            snap_cm = ConfusionMatrix()
            true_sessions, pred_sessions = [], []
            for uid in test_uids:
                f = by_uid[uid]
                pred = model.predict(f.x)
                snap_cm = snap_cm + ConfusionMatrix.from_predictions(f.y, pred)
                true_sessions.append(_majority_label(f.y))
                pred_sessions.append(_majority_label(pred))
            fold_snapshot_cms.append(snap_cm)
            fold_session_cms.append(
                ConfusionMatrix.from_predictions(true_sessions, pred_sessions)
            )
    else:
        raise ValueError(f"unknown split unit {split_unit!r}")

    report = EvalReport(
        classifier=name,
        family=spec["family"],
        params=dict(spec.get("params", {})),
        k=plan.k,
        fold_snapshot_cms=fold_snapshot_cms,
        fold_session_cms=fold_session_cms,
        dataset_checksum=dataset_checksum,
        seed=seed,
        split_unit=split_unit,
    )
    return report, timings


@dataclass
class ComparisonTable:
    """Accuracy ranking across classifiers on one dataset."""

    rows: list = field(default_factory=list)  # dicts, sorted best first
    dataset_checksum: str = ""

    def to_csv(self) -> str:
        lines = ["rank,classifier,family,snapshot_accuracy_pct,session_accuracy_pct,best"]
        for i, row in enumerate(self.rows):
            lines.append(
                f"{i + 1},{row['classifier']},{row['family']},"
                f"{row['snapshot_accuracy_pct']:.4f},{row['session_accuracy_pct']:.4f},"
                f"{'*' if row['best'] else ''}"
            )
        return "\n".join(lines) + "\n"

    def to_svg(self) -> str:
        return _render_svg(self.rows)

    @property
    def best(self) -> dict:
        return self.rows[0]


def compare(reports) -> ComparisonTable:
    """Merge reports into a sorted table; all must share one dataset."""
    reports = list(reports)
    if not reports:
        raise ValueError("no reports to compare")
    checksums = {r.dataset_checksum for r in reports}
    if len(checksums) != 1:
        raise ValueError(f"reports span different datasets: {sorted(checksums)}")
    rows = [
        {
            "classifier": r.classifier,
            "family": r.family,
            "snapshot_accuracy_pct": r.snapshot_accuracy,
            "session_accuracy_pct": r.session_accuracy,
            "best": False,
        }
        for r in reports
    ]
    rows.sort(key=lambda row: (-row["snapshot_accuracy_pct"], row["classifier"]))
    rows[0]["best"] = True
    return ComparisonTable(rows=rows, dataset_checksum=checksums.pop())


_SVG_BAR_H = 18
_SVG_GAP = 6
_SVG_LEFT = 210
_SVG_SCALE = 4.2  # pixels per accuracy percent


def _render_svg(rows) -> str:
    """Deterministic horizontal bar chart (no timestamps, no libraries)."""
    width = _SVG_LEFT + int(100 * _SVG_SCALE) + 80
    height = len(rows) * (_SVG_BAR_H + _SVG_GAP) + 40
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'font-family="monospace" font-size="12">',
        '<text x="10" y="20">snapshot accuracy (%)</text>',
    ]
    for i, row in enumerate(rows):
        y = 32 + i * (_SVG_BAR_H + _SVG_GAP)
        acc = row["snapshot_accuracy_pct"]
        bar = acc * _SVG_SCALE
        fill = "#2b6cb0" if not row["best"] else "#c05621"
        parts.append(
            f'<text x="{_SVG_LEFT - 8}" y="{y + 13}" text-anchor="end">{row["classifier"]}</text>'
        )
        parts.append(
            f'<rect x="{_SVG_LEFT}" y="{y}" width="{bar:.1f}" height="{_SVG_BAR_H}" fill="{fill}"/>'
        )
        parts.append(
            f'<text x="{_SVG_LEFT + bar + 6:.1f}" y="{y + 13}">{acc:.2f}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
