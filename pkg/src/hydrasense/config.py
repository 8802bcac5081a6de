"""Run configuration: one JSON document drives every command.

All tuned constants (channel physiology ranges, geometry presets, filter
parameters, classifier hyperparameters) appear here with defaults so a
run is fully auditable from its config.  Unknown keys are rejected.
"""

from __future__ import annotations

import copy
import json
from pathlib import Path

import numpy as np

from hydrasense import channel as channel_mod
from hydrasense import modem as modem_mod
from hydrasense import preprocess as preprocess_mod


class ConfigError(Exception):
    pass


def default_config() -> dict:
    return {
        "seed": 7,
        "workers": 0,  # 0 = machine core count
        "frame": {
            "layout": "all-data",  # or "52+12"
            "sample_rate": 20000.0,
        },
        "link": {
            "noise_std": 0.056,  # ~25 dB per-subcarrier SNR at unit |h|
        },
        "dataset": {
            "subjects": 5,
            "sessions_per_class": 5,
            "duration_s": 30.0,
            "methods": ["CBDM", "HBDM"],
            "drift_std": 0.10,
        },
        "profiles": {
            "hydrated": {
                "heart_rate_range": [1.00, 1.25],
                "reflection_scale_range": [0.9, 1.1],
                "heart_amp_range": [0.05, 0.15],
                "jitter_seed": 0,
            },
            "dehydrated": {
                "heart_rate_range": [1.35, 1.70],
                "reflection_scale_range": [0.7, 0.9],
                "heart_amp_range": [0.08, 0.20],
                "jitter_seed": 0,
            },
        },
        "scenarios": {
            "CBDM": _preset_to_config(channel_mod.scenario("CBDM")),
            "HBDM": _preset_to_config(channel_mod.scenario("HBDM")),
        },
        "preprocess": {
            "enabled": True,
            "lowpass_cutoff": 10.0,
            "lowpass_taps": 101,
            "sg_window": 11,
            "sg_polyorder": 3,
        },
        "eval": {
            "k": 5,
            "stride": 100,
            "split_unit": "session",
            "classifiers": list(DEFAULT_ROSTER_ORDER),
            "label_permutation_seed": None,
            "save_models": False,
        },
        "ml": {
            "svm_C": 1.0,
            "ensemble_members": 30,
            "boost_learning_rate": 0.1,
            "knn_fine_k": 1,
            "knn_medium_k": 10,
            "knn_coarse_k": 100,
            "tree_fine_splits": 100,
            "tree_medium_splits": 20,
            "tree_coarse_splits": 4,
        },
        "mlp": {
            "epochs": 300,
            "learning_rate": 0.01,
            "batch_size": 64,
            "l2": 1e-4,
            "momentum": 0.9,
        },
    }


def _preset_to_config(p: channel_mod.ScenarioPreset) -> dict:
    return {
        "static_taps": [[z.real, z.imag] for z in p.static_taps],
        "motion_path_gain": [p.motion_path_gain.real, p.motion_path_gain.imag],
        "motion_delay": p.motion_delay,
        "breathing_rate": p.breathing_rate,
        "breathing_amp": p.breathing_amp,
    }


DEFAULT_ROSTER_ORDER = (
    "knn-fine",
    "knn-medium",
    "knn-coarse",
    "svm-linear",
    "svm-quadratic",
    "svm-cubic",
    "tree-fine",
    "tree-coarse",
    "ensemble-boosted-tree",
    "ensemble-bagged-tree",
    "ensemble-subspace-knn",
    "ensemble-subspace-discriminant",
    "nn-narrow",
    "nn-medium",
    "nn-wide",
    "nn-bilayer",
    "nn-trilayer",
)

# Available but not in the default comparison roster.
EXTRA_CLASSIFIERS = ("tree-medium",)


def _merge_validate(defaults, override, path=""):
    """Fill defaults, rejecting keys the schema does not know."""
    if not isinstance(override, dict):
        raise ConfigError(f"expected an object at {path or 'top level'}")
    merged = copy.deepcopy(defaults)
    for key, value in override.items():
        if key not in defaults:
            raise ConfigError(f"unknown config key: {path}{key}")
        if isinstance(defaults[key], dict) and not _is_leaf(path + key):
            merged[key] = _merge_validate(defaults[key], value, f"{path}{key}.")
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def _is_leaf(path: str) -> bool:
    # Scenario/profile sub-dicts are replaced wholesale when overridden
    # at their level; their inner keys are still validated below.
    return False


def load_config(path=None, overrides=None) -> dict:
    """Read, merge with defaults, and validate a config document."""
    cfg = default_config()
    if path is not None:
        try:
            raw = json.loads(Path(path).read_text())
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        cfg = _merge_validate(cfg, raw)
    if overrides:
        cfg = _merge_validate(cfg, overrides)
    validate_config(cfg)
    return cfg


def validate_config(cfg: dict):
    if cfg["frame"]["layout"] not in ("all-data", "52+12"):
        raise ConfigError("frame.layout must be 'all-data' or '52+12'")
    if cfg["link"]["noise_std"] < 0:
        raise ConfigError("link.noise_std must be >= 0")
    ds = cfg["dataset"]
    if ds["subjects"] < 1 or ds["sessions_per_class"] < 1:
        raise ConfigError("dataset.subjects and sessions_per_class must be >= 1")
    for m in ds["methods"]:
        if m not in ("CBDM", "HBDM"):
            raise ConfigError(f"unknown method {m!r}")
    ev = cfg["eval"]
    if ev["k"] < 2:
        raise ConfigError("eval.k must be >= 2")
    if ev["stride"] < 1:
        raise ConfigError("eval.stride must be >= 1")
    if ev["split_unit"] not in ("session", "snapshot"):
        raise ConfigError("eval.split_unit must be 'session' or 'snapshot'")
    known = set(DEFAULT_ROSTER_ORDER) | set(EXTRA_CLASSIFIERS)
    for name in ev["classifiers"]:
        if name not in known:
            raise ConfigError(f"unknown classifier {name!r}")
    try:
        build_profiles(cfg)
        build_presets(cfg)
        build_frame_cfg(cfg)
        build_filter_spec(cfg)
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(str(exc)) from None


def build_frame_cfg(cfg: dict) -> modem_mod.OfdmFrameCfg:
    frame = cfg["frame"]
    if frame["layout"] == "52+12":
        return modem_mod.OfdmFrameCfg.with_pilots(sample_rate=frame["sample_rate"])
    return modem_mod.OfdmFrameCfg(sample_rate=frame["sample_rate"])


def build_profiles(cfg: dict) -> dict:
    out = {}
    for label in ("hydrated", "dehydrated"):
        p = cfg["profiles"][label]
        out[label] = channel_mod.HydrationProfile(
            label=label,
            heart_rate_range=tuple(p["heart_rate_range"]),
            reflection_scale_range=tuple(p["reflection_scale_range"]),
            heart_amp_range=tuple(p["heart_amp_range"]),
            jitter_seed=p.get("jitter_seed", 0),
        )
    channel_mod.validate_profiles(out["hydrated"], out["dehydrated"])
    return out


def build_presets(cfg: dict) -> dict:
    out = {}
    for name, s in cfg["scenarios"].items():
        if name not in ("CBDM", "HBDM"):
            raise ConfigError(f"unknown scenario {name!r}")
        out[name] = channel_mod.ScenarioPreset(
            name=name,
            static_taps=np.array([complex(re, im) for re, im in s["static_taps"]]),
            motion_path_gain=complex(*s["motion_path_gain"]),
            motion_delay=int(s["motion_delay"]),
            breathing_rate=float(s["breathing_rate"]),
            breathing_amp=float(s["breathing_amp"]),
        )
    return out


def build_filter_spec(cfg: dict) -> preprocess_mod.FilterSpec:
    p = cfg["preprocess"]
    return preprocess_mod.FilterSpec(
        lowpass_cutoff=p["lowpass_cutoff"],
        lowpass_taps=p["lowpass_taps"],
        sg_window=p["sg_window"],
        sg_polyorder=p["sg_polyorder"],
    )


def build_roster(cfg: dict) -> list:
    """Classifier specs in canonical order, filtered by eval.classifiers."""
    ml = cfg["ml"]
    mlp = cfg["mlp"]
    catalogue = {
        "knn-fine": {"family": "knn", "params": {"k": ml["knn_fine_k"]}},
        "knn-medium": {"family": "knn", "params": {"k": ml["knn_medium_k"]}},
        "knn-coarse": {"family": "knn", "params": {"k": ml["knn_coarse_k"]}},
        "svm-linear": {"family": "svm", "params": {"kernel": "linear", "C": ml["svm_C"]}},
        "svm-quadratic": {"family": "svm", "params": {"kernel": "poly2", "C": ml["svm_C"]}},
        "svm-cubic": {"family": "svm", "params": {"kernel": "poly3", "C": ml["svm_C"]}},
        "tree-fine": {"family": "tree", "params": {"max_splits": ml["tree_fine_splits"]}},
        "tree-medium": {"family": "tree", "params": {"max_splits": ml["tree_medium_splits"]}},
        "tree-coarse": {"family": "tree", "params": {"max_splits": ml["tree_coarse_splits"]}},
        "ensemble-boosted-tree": {
            "family": "ensemble",
            "params": {
                "kind": "boosted_tree",
                "members": ml["ensemble_members"],
                "learning_rate": ml["boost_learning_rate"],
            },
        },
        "ensemble-bagged-tree": {
            "family": "ensemble",
            "params": {"kind": "bagged_tree", "members": ml["ensemble_members"]},
        },
        "ensemble-subspace-knn": {
            "family": "ensemble",
            "params": {"kind": "subspace_knn", "members": ml["ensemble_members"]},
        },
        "ensemble-subspace-discriminant": {
            "family": "ensemble",
            "params": {"kind": "subspace_discriminant", "members": ml["ensemble_members"]},
        },
    }
    for variant, hidden in (
        ("nn-narrow", (10,)),
        ("nn-medium", (25,)),
        ("nn-wide", (100,)),
        ("nn-bilayer", (10, 10)),
        ("nn-trilayer", (10, 10, 10)),
    ):
        catalogue[variant] = {
            "family": "mlp",
            "params": {
                "hidden_sizes": list(hidden),
                "epochs": mlp["epochs"],
                "learning_rate": mlp["learning_rate"],
                "batch_size": mlp["batch_size"],
                "l2": mlp["l2"],
                "momentum": mlp["momentum"],
            },
        }
    wanted = cfg["eval"]["classifiers"]
    order = list(DEFAULT_ROSTER_ORDER) + list(EXTRA_CLASSIFIERS)
    roster = []
    for name in order:
        if name in wanted:
            spec = dict(catalogue[name])
            spec["name"] = name
            roster.append(spec)
    return roster
