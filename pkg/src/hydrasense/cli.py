"""Command-line entry point.

Subcommands: simulate, modem-selftest, preprocess, train-eval, report.
Exit codes: 0 success, 1 validation error, 2 runtime/check failure.
Output files are deterministic for a fixed config; wall-clock timings go
to a sidecar ``run.log`` only.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import dataclasses
import hashlib
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from hydrasense import channel as channel_mod
from hydrasense import config as config_mod
from hydrasense import dataset as dataset_mod
from hydrasense import evaluate as evaluate_mod
from hydrasense import modem as modem_mod
from hydrasense import preprocess as preprocess_mod

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2


def _load_config(args, overrides=None) -> dict:
    merged = dict(overrides or {})
    if getattr(args, "seed", None) is not None:
        merged["seed"] = args.seed
    if getattr(args, "workers", None) is not None:
        merged["workers"] = args.workers
    return config_mod.load_config(getattr(args, "config", None), merged)


def _methods(args, cfg) -> list:
    if getattr(args, "method", None) and args.method != "both":
        return [args.method]
    return list(cfg["dataset"]["methods"])


def cmd_simulate(args) -> int:
    cfg = _load_config(args)
    methods = _methods(args, cfg)
    out = Path(args.out)
    manifest = dataset_mod.generate_dataset(
        out,
        config_mod.build_frame_cfg(cfg),
        config_mod.build_profiles(cfg),
        config_mod.build_presets(cfg),
        methods,
        subjects=cfg["dataset"]["subjects"],
        seed=cfg["seed"],
        sessions_per_class=cfg["dataset"]["sessions_per_class"],
        duration_s=cfg["dataset"]["duration_s"],
        noise_std=cfg["link"]["noise_std"],
        drift_std=cfg["dataset"]["drift_std"],
    )
    for method in methods:
        entries = manifest.session_entries(method)
        total = sum(e["duration_s"] for e in entries)
        print(f"{method}: {len(entries)} sessions, {total:.1f} s")
    print(f"manifest: {dataset_mod.manifest_path(out)}")
    return EXIT_OK


def cmd_modem_selftest(args) -> int:
    cfg = _load_config(args)
    frame_cfg = config_mod.build_frame_cfg(cfg)
    failures = 0

    def report(name, passed, detail):
        nonlocal failures
        print(f"{'ok  ' if passed else 'FAIL'} {name}: {detail}")
        failures += 0 if passed else 1

    n_frames = 2000
    rng = np.random.default_rng(cfg["seed"])
    bits = rng.integers(0, 2, size=(n_frames, frame_cfg.bits_per_frame), dtype=np.uint8)
    errors = 0
    parseval_worst = 0.0
    for i in range(n_frames):
        symbols = modem_mod.frame_symbols(bits[i], frame_cfg)
        frame = modem_mod.ofdm_modulate(symbols, frame_cfg)
        rx = modem_mod.ofdm_demodulate(frame.time_samples, frame_cfg)
        recovered = modem_mod.qpsk_demodulate(rx[frame_cfg.data_indices])
        errors += int((recovered != bits[i]).sum())
        tx_energy = float(np.sum(np.abs(symbols) ** 2))
        td_energy = float(np.sum(np.abs(frame.time_samples[frame_cfg.cp_len:]) ** 2))
        parseval_worst = max(parseval_worst, abs(tx_energy - td_energy))
    report("round-trip BER", errors == 0, f"{errors} bit errors over {n_frames} frames")
    report("parseval residual", parseval_worst < 1e-10, f"max {parseval_worst:.3e}")

    worst = 0.0
    for trial in range(50):
        taps = rng.standard_normal(8) + 1j * rng.standard_normal(8)
        chan = channel_mod.ChannelModel.static(taps)
        snaps = modem_mod.run_link(frame_cfg, chan, 3, 0.0, seed=trial)
        expect = chan.analytic_cfr(frame_cfg.n_subcarriers)
        for s in snaps:
            worst = max(worst, float(np.max(np.abs(s.h - expect) / np.abs(expect))))
    report("static-channel CFR residual", worst < 1e-10, f"max relative {worst:.3e}")
    return EXIT_OK if failures == 0 else EXIT_RUNTIME


def cmd_preprocess(args) -> int:
    cfg = _load_config(args)
    spec = config_mod.build_filter_spec(cfg)
    root = Path(args.data)
    out = Path(args.out)
    manifest = dataset_mod.load_manifest(root)
    new_files = []
    dropped_total = 0
    for entry in manifest.files:
        session = dataset_mod.load_session(
            root / entry["path"],
            label=entry["label"],
            subject_id=entry["subject_id"],
            session_id=entry["session_id"],
            method=entry["method"],
            snapshot_rate=manifest.snapshot_rate,
            expected_sha256=entry["sha256"],
        )
        clean = preprocess_mod.preprocess_session(session, spec)
        dropped_total += clean.meta["dropped_snapshots"]
        dataset_mod.save_session(clean, out / entry["path"])
        new_entry = dict(entry)
        new_entry["sha256"] = hashlib.sha256((out / entry["path"]).read_bytes()).hexdigest()
        new_entry["n_snapshots"] = len(clean.snapshots)
        new_entry["duration_s"] = clean.duration
        new_files.append(new_entry)
    new_manifest = dataclasses.replace(manifest, files=new_files)
    dataset_mod.save_manifest(new_manifest, out)
    print(f"preprocessed {len(new_files)} sessions, dropped {dropped_total} snapshots")
    print(f"manifest: {dataset_mod.manifest_path(out)}")
    return EXIT_OK


def _eval_one(task):
    spec, features, plan, seed, checksum, split_unit = task
    return evaluate_mod.run_cv(
        features, plan, spec, seed, dataset_checksum=checksum, split_unit=split_unit
    )


def run_train_eval(cfg: dict, data_root, out_dir, methods, log_lines) -> dict:
    """Shared implementation of the train-eval command; returns reports
    per method."""
    root = Path(data_root)
    out = Path(out_dir)
    manifest = dataset_mod.load_manifest(root)
    dataset_mod.audit_dataset(root)  # checksum mismatch aborts before training
    checksum = dataset_mod.dataset_checksum(root)
    filter_spec = config_mod.build_filter_spec(cfg) if cfg["preprocess"]["enabled"] else None
    roster = config_mod.build_roster(cfg)
    workers = cfg["workers"] or os.cpu_count() or 1
    results = {}
    for method in methods:
        t0 = time.perf_counter()
        sessions = dataset_mod.load_method_sessions(root, method)
        features = evaluate_mod.extract_features(
            sessions, filter_spec, stride=cfg["eval"]["stride"]
        )
        del sessions
        perm_seed = cfg["eval"]["label_permutation_seed"]
        if perm_seed is not None:
            features = evaluate_mod.permute_labels(features, perm_seed)
        plan = dataset_mod.make_folds(
            dataset_mod.load_manifest(root).session_entries(method),
            cfg["eval"]["k"],
            cfg["seed"],
        )
        log_lines.append(
            f"{method}: features ready in {time.perf_counter() - t0:.1f}s "
            f"({sum(len(f.y) for f in features)} snapshots)"
        )
        tasks = [
            (spec, features, plan, cfg["seed"], checksum, cfg["eval"]["split_unit"])
            for spec in roster
        ]
        if workers > 1 and len(tasks) > 1:
            with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
                outcomes = list(pool.map(_eval_one, tasks))
        else:
            outcomes = [_eval_one(t) for t in tasks]

        method_dir = out / method
        method_dir.mkdir(parents=True, exist_ok=True)
        reports = []
        for spec, (report, timings) in zip(roster, outcomes):
            reports.append(report)
            (method_dir / f"report_{spec['name']}.json").write_text(report.to_json() + "\n")
            log_lines.append(
                f"{method}/{spec['name']}: fit times "
                + ", ".join(f"{t:.2f}s" for t in timings)
                + f"; snapshot acc {report.snapshot_accuracy:.2f}%"
            )
        table = evaluate_mod.compare(reports)
        (method_dir / "comparison.csv").write_text(table.to_csv())
        (method_dir / "comparison.svg").write_text(table.to_svg())
        (method_dir / "fold_plan.json").write_text(
            json.dumps({"k": plan.k, "assignment": plan.assignment}, indent=2, sort_keys=True)
            + "\n"
        )
        results[method] = reports
    (out / "run_config.json").write_text(
        json.dumps({"config": cfg, "dataset_checksum": checksum}, indent=2, sort_keys=True)
        + "\n"
    )
    return results


def cmd_train_eval(args) -> int:
    overrides = {}
    if args.classifiers:
        overrides = {"eval": {"classifiers": args.classifiers.split(",")}}
    cfg = _load_config(args, overrides)
    if args.permute_labels is not None:
        cfg["eval"]["label_permutation_seed"] = args.permute_labels
    methods = _methods(args, cfg)
    data_root = Path(args.data)
    if not dataset_mod.manifest_path(data_root).is_file():
        print(f"error: no dataset manifest under {data_root}", file=sys.stderr)
        return EXIT_VALIDATION
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    log_lines = [f"started {time.strftime('%Y-%m-%dT%H:%M:%S')}"]
    try:
        results = run_train_eval(cfg, data_root, out, methods, log_lines)
    finally:
        log_lines.append(f"finished {time.strftime('%Y-%m-%dT%H:%M:%S')}")
        (out / "run.log").write_text("\n".join(log_lines) + "\n")
    for method, reports in results.items():
        table = evaluate_mod.compare(reports)
        best = table.best
        print(
            f"{method}: best {best['classifier']} "
            f"snapshot {best['snapshot_accuracy_pct']:.2f}% "
            f"session {best['session_accuracy_pct']:.2f}%"
        )
        print(f"reports: {out / method}")
    return EXIT_OK


def cmd_report(args) -> int:
    paths = []
    for item in args.inputs:
        p = Path(item)
        if p.is_dir():
            paths.extend(sorted(p.glob("report_*.json")))
        else:
            paths.append(p)
    if not paths:
        print("error: no report files found", file=sys.stderr)
        return EXIT_VALIDATION
    reports = [evaluate_mod.EvalReport.from_json(p.read_text()) for p in paths]
    table = evaluate_mod.compare(reports)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "comparison.csv").write_text(table.to_csv())
    (out / "comparison.svg").write_text(table.to_svg())
    print(table.to_csv(), end="")
    print(f"written: {out / 'comparison.csv'}, {out / 'comparison.svg'}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hydrasense",
        description="OFDM sounding simulator and hydration-state classification pipeline",
    )
    parser.add_argument("--config", help="JSON config file (defaults apply otherwise)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="synthesize the labelled CFR dataset")
    p.add_argument("--out", default="dataset", help="dataset root directory")
    p.add_argument("--seed", type=int)
    p.add_argument("--method", choices=["CBDM", "HBDM", "both"], default="both")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("modem-selftest", help="verify modem round trip and CFR math")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_modem_selftest)

    p = sub.add_parser("preprocess", help="write a denoised copy of a dataset")
    p.add_argument("--data", required=True, help="raw dataset root")
    p.add_argument("--out", required=True, help="output dataset root")
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("train-eval", help="K-fold training and evaluation")
    p.add_argument("--data", default="dataset", help="dataset root")
    p.add_argument("--out", default="runs/latest", help="report output directory")
    p.add_argument("--seed", type=int)
    p.add_argument("--method", choices=["CBDM", "HBDM", "both"], default="CBDM")
    p.add_argument("--classifiers", help="comma-separated roster subset")
    p.add_argument("--workers", type=int)
    p.add_argument("--permute-labels", type=int, default=None,
                   help="permute snapshot labels with this seed (null-model check)")
    p.set_defaults(func=cmd_train_eval)

    p = sub.add_parser("report", help="merge eval reports into a comparison table")
    p.add_argument("inputs", nargs="+", help="report files or directories")
    p.add_argument("--out", default="runs/comparison", help="output directory")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_VALIDATION if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except config_mod.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except dataset_mod.DatasetError as exc:
        print(f"dataset error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
