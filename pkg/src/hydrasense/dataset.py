"""Labelled CFR session storage, synthetic dataset generation and folds.

Layout mirrors the acquisition protocol: per subject, 5 dehydrated plus
5 hydrated sessions of 30 s per sensing method, i.e. 50 balanced sessions
per method for the default 5 subjects.  Sessions are plain CSV (one row
per snapshot, 17-significant-digit decimals for lossless round trips);
the manifest is a JSON document with SHA-256 checksums of every file.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from hydrasense import channel as channel_mod
from hydrasense import modem as modem_mod

N_SUBCARRIERS = 64

CSV_HEADER = "frame_index,time_s," + ",".join(
    f"re_{i},im_{i}" for i in range(N_SUBCARRIERS)
)

_ROW_FMT = "%d," + ",".join(["%.17g"] * (1 + 2 * N_SUBCARRIERS))

LABELS = ("dehydrated", "hydrated")
METHODS = ("CBDM", "HBDM")


class DatasetError(Exception):
    pass


class MalformedSessionError(DatasetError):
    """Header or column structure does not match the session schema."""


class TruncatedSessionError(DatasetError):
    """A data row is missing, short, or unparseable."""


class ChecksumError(DatasetError):
    """File bytes do not hash to the manifest checksum."""


@dataclass
class Session:
    """A labelled sequence of CFR snapshots from one recording."""

    snapshots: list
    label: str
    subject_id: int
    session_id: int
    method: str
    snapshot_rate: float = 250.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.label not in LABELS:
            raise ValueError(f"unknown label {self.label!r}")
        self._h = None

    @property
    def duration(self) -> float:
        return len(self.snapshots) / self.snapshot_rate

    @property
    def uid(self) -> str:
        return f"{self.method}/subject_{self.subject_id}/{self.label}/{self.session_id}"

    def h_matrix(self) -> np.ndarray:
        if self._h is None:
            self._h = np.array([s.h for s in self.snapshots])
        return self._h

    def frame_indices(self) -> np.ndarray:
        return np.array([s.frame_index for s in self.snapshots], dtype=np.int64)

    def times(self) -> np.ndarray:
        return np.array([s.time for s in self.snapshots])

    @classmethod
    def from_matrix(
        cls,
        h,
        label,
        subject_id,
        session_id,
        method,
        snapshot_rate=250.0,
        frame_indices=None,
        times=None,
        meta=None,
    ) -> "Session":
        h = np.asarray(h, dtype=np.complex128)
        n = h.shape[0]
        if frame_indices is None:
            frame_indices = np.arange(n)
        if times is None:
            times = np.asarray(frame_indices) / snapshot_rate
        snaps = [
            modem_mod.CfrSnapshot(h=h[i], frame_index=int(frame_indices[i]), time=float(times[i]))
            for i in range(n)
        ]
        session = cls(
            snapshots=snaps,
            label=label,
            subject_id=subject_id,
            session_id=session_id,
            method=method,
            snapshot_rate=snapshot_rate,
            meta=meta or {},
        )
        session._h = h
        return session


def save_session(session: Session, path) -> None:
    """Write one session as CSV (lossless float64 text)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    h = session.h_matrix()
    idx = session.frame_indices()
    times = session.times()
    lines = [CSV_HEADER]
    for i in range(h.shape[0]):
        row = np.empty(1 + 2 * N_SUBCARRIERS)
        row[0] = times[i]
        row[1::2] = h[i].real
        row[2::2] = h[i].imag
        lines.append(_ROW_FMT % ((int(idx[i]),) + tuple(row)))
    path.write_text("\n".join(lines) + "\n")


def load_session(
    path,
    label=None,
    subject_id=0,
    session_id=0,
    method="CBDM",
    snapshot_rate=250.0,
    expected_sha256=None,
) -> Session:
    """Read a session CSV back; raises distinct errors per failure mode."""
    path = Path(path)
    data = path.read_bytes()
    if expected_sha256 is not None:
        digest = hashlib.sha256(data).hexdigest()
        if digest != expected_sha256:
            raise ChecksumError(f"{path}: sha256 {digest} != manifest {expected_sha256}")
    text = data.decode("utf-8")
    newline = text.find("\n")
    if newline < 0 or text[:newline].rstrip("\r") != CSV_HEADER:
        raise MalformedSessionError(f"{path}: header does not match session schema")
    try:
        arr = np.loadtxt([ln for ln in text[newline + 1:].splitlines() if ln],
                         delimiter=",", ndmin=2)
    except ValueError as exc:
        raise TruncatedSessionError(f"{path}: {exc}") from None
    if arr.size == 0:
        raise TruncatedSessionError(f"{path}: no snapshot rows")
    if arr.shape[1] != 2 + 2 * N_SUBCARRIERS:
        raise MalformedSessionError(
            f"{path}: expected {2 + 2 * N_SUBCARRIERS} columns, found {arr.shape[1]}"
        )
    h = arr[:, 2::2] + 1j * arr[:, 3::2]
    if label is None:
        label = path.parent.name
    return Session.from_matrix(
        h,
        label=label,
        subject_id=subject_id,
        session_id=session_id,
        method=method,
        snapshot_rate=snapshot_rate,
        frame_indices=arr[:, 0].astype(np.int64),
        times=arr[:, 1],
    )


def _profile_dict(p: channel_mod.HydrationProfile) -> dict:
    return dataclasses.asdict(p)


def _preset_dict(p: channel_mod.ScenarioPreset) -> dict:
    return {
        "name": p.name,
        "static_taps": [[z.real, z.imag] for z in p.static_taps],
        "motion_path_gain": [p.motion_path_gain.real, p.motion_path_gain.imag],
        "motion_delay": p.motion_delay,
        "breathing_rate": p.breathing_rate,
        "breathing_amp": p.breathing_amp,
    }


#: Front-end settings with no baseband effect, kept for record only.
RF_METADATA = {
    "carrier_frequency_hz": 5.23e9,
    "antenna_gain_db": 40.0,
    "antenna_type": "directional horn",
    "interpolation_factor": 250,
    "decimation_factor": 250,
}


@dataclass
class DatasetManifest:
    """Audit record of one generated dataset."""

    seed: int
    subjects: int
    sessions_per_class_per_subject: int
    methods: list
    snapshot_rate: float
    session_duration_s: float
    noise_std: float
    drift_std: float
    frame_cfg: dict
    profiles: dict
    scenarios: dict
    files: list
    rf_metadata: dict = field(default_factory=lambda: dict(RF_METADATA))
    format_version: int = 1

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "DatasetManifest":
        raw = json.loads(text)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise DatasetError(f"unknown manifest keys: {sorted(unknown)}")
        return cls(**raw)

    def session_entries(self, method=None):
        return [f for f in self.files if method is None or f["method"] == method]


def manifest_path(root) -> Path:
    return Path(root) / "manifest.json"


def save_manifest(manifest: DatasetManifest, root) -> Path:
    path = manifest_path(root)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(manifest.to_json() + "\n")
    return path


def load_manifest(root) -> DatasetManifest:
    path = manifest_path(root)
    if not path.is_file():
        raise DatasetError(f"manifest not found: {path}")
    return DatasetManifest.from_json(path.read_text())


def dataset_checksum(root) -> str:
    """Identity of a dataset: the SHA-256 of its manifest bytes."""
    return hashlib.sha256(manifest_path(root).read_bytes()).hexdigest()


def _session_seed(seed, method, subject_id, label, session_id):
    return np.random.SeedSequence(
        (int(seed), METHODS.index(method), subject_id, LABELS.index(label), session_id)
    )


def generate_dataset(
    root,
    cfg: modem_mod.OfdmFrameCfg,
    profiles: dict,
    presets: dict,
    methods,
    subjects: int,
    seed: int,
    sessions_per_class: int = 5,
    duration_s: float = 30.0,
    noise_std: float = 0.056,
    drift_std: float = channel_mod.DEFAULT_DRIFT_STD,
) -> DatasetManifest:
    """Synthesize the balanced dataset and write it under ``root``.

    Deterministic per seed: every session derives an independent seed
    stream from (seed, method, subject, label, session).
    """
    if subjects < 1:
        raise ValueError("subjects must be >= 1")
    channel_mod.validate_profiles(profiles["hydrated"], profiles["dehydrated"])
    root = Path(root)
    n_frames = round(duration_s * cfg.snapshot_rate)
    files = []
    for method in methods:
        preset = presets[method]
        for subject_id in range(1, subjects + 1):
            for label in LABELS:
                for session_id in range(1, sessions_per_class + 1):
                    chan = channel_mod.sample_channel(
                        profiles[label],
                        subject_id,
                        session_id,
                        seed,
                        preset=preset,
                        drift_std=drift_std,
                    )
                    snaps = modem_mod.run_link(
                        cfg,
                        chan,
                        n_frames,
                        noise_std,
                        _session_seed(seed, method, subject_id, label, session_id),
                    )
                    session = Session(
                        snapshots=snaps,
                        label=label,
                        subject_id=subject_id,
                        session_id=session_id,
                        method=method,
                        snapshot_rate=cfg.snapshot_rate,
                    )
                    rel = f"{method}/subject_{subject_id}/{label}/session_{session_id}.csv"
                    save_session(session, root / rel)
                    files.append(
                        {
                            "path": rel,
                            "uid": session.uid,
                            "method": method,
                            "subject_id": subject_id,
                            "label": label,
                            "session_id": session_id,
                            "sha256": hashlib.sha256((root / rel).read_bytes()).hexdigest(),
                            "n_snapshots": len(snaps),
                            "duration_s": session.duration,
                        }
                    )
    manifest = DatasetManifest(
        seed=seed,
        subjects=subjects,
        sessions_per_class_per_subject=sessions_per_class,
        methods=list(methods),
        snapshot_rate=cfg.snapshot_rate,
        session_duration_s=duration_s,
        noise_std=noise_std,
        drift_std=drift_std,
        frame_cfg={
            "n_subcarriers": cfg.n_subcarriers,
            "cp_len": cfg.cp_len,
            "bits_per_frame": cfg.bits_per_frame,
            "bits_per_symbol": cfg.bits_per_symbol,
            "sample_rate": cfg.sample_rate,
            "constellation_id": cfg.constellation_id,
            "n_pilot_subcarriers": int(len(cfg.pilot_indices)),
        },
        profiles={k: _profile_dict(v) for k, v in profiles.items()},
        scenarios={m: _preset_dict(presets[m]) for m in methods},
        files=files,
    )
    save_manifest(manifest, root)
    return manifest


def audit_dataset(root, verify_checksums: bool = True) -> dict:
    """Check balance and file integrity against the manifest.

    Returns a per-method summary; raises DatasetError subclasses on any
    inconsistency.
    """
    root = Path(root)
    manifest = load_manifest(root)
    summary = {}
    for method in manifest.methods:
        entries = manifest.session_entries(method)
        per_subject = {}
        total_duration = 0.0
        for e in entries:
            fpath = root / e["path"]
            if not fpath.is_file():
                raise DatasetError(f"missing session file: {fpath}")
            if verify_checksums:
                digest = hashlib.sha256(fpath.read_bytes()).hexdigest()
                if digest != e["sha256"]:
                    raise ChecksumError(f"{fpath}: checksum mismatch")
            counts = per_subject.setdefault(e["subject_id"], {l: 0 for l in LABELS})
            counts[e["label"]] += 1
            total_duration += e["duration_s"]
        for subject_id, counts in per_subject.items():
            if counts["hydrated"] != counts["dehydrated"]:
                raise DatasetError(
                    f"subject {subject_id} is unbalanced for {method}: {counts}"
                )
        summary[method] = {
            "sessions": len(entries),
            "total_duration_s": total_duration,
            "subjects": len(per_subject),
        }
    return summary


def load_method_sessions(root, method, verify_checksums=True) -> list:
    """Load every session of one method, in manifest order."""
    root = Path(root)
    manifest = load_manifest(root)
    sessions = []
    for e in manifest.session_entries(method):
        sessions.append(
            load_session(
                root / e["path"],
                label=e["label"],
                subject_id=e["subject_id"],
                session_id=e["session_id"],
                method=method,
                snapshot_rate=manifest.snapshot_rate,
                expected_sha256=e["sha256"] if verify_checksums else None,
            )
        )
    return sessions


@dataclass(frozen=True)
class FoldPlan:
    """Session-level fold assignment for K-fold cross-validation."""

    k: int
    assignment: dict  # session uid -> fold index

    def fold_uids(self, fold: int) -> list:
        return sorted(u for u, f in self.assignment.items() if f == fold)

    def validate(self):
        folds = np.array(sorted(self.assignment.values()))
        if set(folds) != set(range(self.k)):
            raise ValueError("fold indices must cover 0..k-1")
        sizes = np.bincount(folds, minlength=self.k)
        if sizes.max() - sizes.min() > 1:
            raise ValueError(f"fold sizes differ by more than 1: {sizes.tolist()}")


def make_folds(entries, k: int, seed: int) -> FoldPlan:
    """Stratified fold assignment over session entries.

    ``entries`` is an iterable of manifest session dicts (or anything with
    'uid' and 'label' keys).  Deterministic per seed; sessions never
    straddle folds because assignment is by whole session.
    """
    entries = list(entries)
    if k < 2 or k > len(entries):
        raise ValueError(f"k={k} out of range for {len(entries)} sessions")
    by_label = {}
    for e in entries:
        by_label.setdefault(e["label"], []).append(e["uid"])
    assignment = {}
    pointer = 0
    for label in sorted(by_label):
        uids = sorted(by_label[label])
        rng = np.random.default_rng((int(seed), 101, sorted(by_label).index(label)))
        rng.shuffle(uids)
        for uid in uids:
            assignment[uid] = pointer % k
            pointer += 1
    plan = FoldPlan(k=k, assignment=assignment)
    plan.validate()
    return plan
