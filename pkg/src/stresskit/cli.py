"""Command-line interface: synth, extract, train, evaluate, report.

Configuration values resolve in order: explicit flag, then key=value config
file (``--config``), then the ``STRESSKIT_SEED`` environment variable (seed
only), then built-in defaults.  Exit codes: 0 success, 2 ingestion/input
problems, 3 training failures, 64 usage errors.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__, evaluate, forest, nn, synth, windows
from .data_model import list_subject_dirs, load_subject
from .eda import EdaConfig
from .errors import FoldFailure, IngestError, SchemaMismatch, StresskitError

EXIT_OK = 0
EXIT_INGEST = 2
EXIT_TRAIN = 3
EXIT_USAGE = 64

CACHE_VERSION = 1

# every key accepted in a --config file (flags use the same names with dashes)
CONFIG_KEYS = {
    "dataset_root": str,
    "cache_dir": str,
    "output_dir": str,
    "window_width_s": float,
    "window_shift_s": float,
    "coverage_threshold": float,
    "eda_mode": str,
    "signals": str,
    "model": str,
    "seed": int,
    "jobs": int,
    "learning_rate": float,
    "batch_size": int,
    "dropout": float,
    "max_epochs": int,
    "patience": int,
    "val_frac": float,
    "n_trees": int,
    "max_depth": int,
    "min_samples_split": int,
    "min_samples_leaf": int,
    "max_features": str,
    "class_weight": str,
    "n_subjects": int,
    "duration_s": float,
}

DEFAULTS = {
    "window_width_s": 60.0,
    "window_shift_s": 0.25,
    "coverage_threshold": 1.0,
    "eda_mode": "cvxeda",
    "signals": "fusion",
    "model": "nn",
    "jobs": 1,
    "learning_rate": 0.003,
    "batch_size": 2048,
    "dropout": 0.10,
    "max_epochs": 200,
    "patience": 20,
    "val_frac": 0.2,
    "n_trees": 250,
    "max_depth": 8,
    "min_samples_split": 2,
    "min_samples_leaf": 4,
    "max_features": "sqrt",
    "class_weight": "balanced",
    "n_subjects": 6,
    "duration_s": 1200.0,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that exits 64 on usage problems instead of 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def parse_config_file(path) -> dict:
    """key=value lines, ``#`` comments; unknown keys are usage errors."""
    values: dict = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value, got {raw.strip()!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in CONFIG_KEYS:
                raise UsageError(f"{path}:{lineno}: unknown config key {key!r}")
            try:
                values[key] = CONFIG_KEYS[key](value)
            except ValueError as exc:
                raise UsageError(f"{path}:{lineno}: bad value for {key}: {exc}") from exc
    return values


def _resolve(args, key: str, default=None):
    """flag > config file > (seed only) environment > default."""
    flag = getattr(args, key, None)
    if flag is not None:
        return flag
    if args.config_values and key in args.config_values:
        return args.config_values[key]
    if key == "seed":
        env = os.environ.get("STRESSKIT_SEED")
        if env is not None:
            try:
                return int(env)
            except ValueError as exc:
                raise UsageError(f"STRESSKIT_SEED must be an integer, got {env!r}") from exc
    if key in DEFAULTS:
        return DEFAULTS[key]
    return default


def _require(args, key: str):
    value = _resolve(args, key)
    if value is None:
        raise UsageError(f"missing required setting {key!r} (flag or config file)")
    return value


# ---------------------------------------------------------------------------
# Shared pieces


def _dataset_sha256(root) -> str:
    """Content hash over every subject file, path-ordered."""
    h = hashlib.sha256()
    for subject_dir in list_subject_dirs(root):
        for name in sorted(p.name for p in subject_dir.iterdir() if p.is_file()):
            h.update(f"{subject_dir.name}/{name}".encode())
            h.update((subject_dir / name).read_bytes())
    return h.hexdigest()


def _window_cfg(args) -> windows.WindowConfig:
    return windows.WindowConfig(
        width_s=_resolve(args, "window_width_s"),
        shift_s=_resolve(args, "window_shift_s"),
        coverage_threshold=_resolve(args, "coverage_threshold"),
    )


def _train_cfg(args, seed: int) -> nn.TrainConfig:
    return nn.TrainConfig(
        learning_rate=_resolve(args, "learning_rate"),
        batch_size=_resolve(args, "batch_size"),
        dropout=_resolve(args, "dropout"),
        max_epochs=_resolve(args, "max_epochs"),
        patience=_resolve(args, "patience"),
        val_frac=_resolve(args, "val_frac"),
        seed=seed,
    )


def _forest_cfg(args, seed: int) -> forest.ForestConfig:
    max_features = _resolve(args, "max_features")
    if isinstance(max_features, str) and max_features not in ("sqrt", "all"):
        max_features = int(max_features)
    class_weight = _resolve(args, "class_weight")
    if class_weight == "none":
        class_weight = None
    return forest.ForestConfig(
        n_trees=_resolve(args, "n_trees"),
        max_depth=_resolve(args, "max_depth"),
        min_samples_split=_resolve(args, "min_samples_split"),
        min_samples_leaf=_resolve(args, "min_samples_leaf"),
        max_features=max_features,
        class_weight=class_weight,
        seed=seed,
    )


# ---------------------------------------------------------------------------
# Commands


def cmd_synth(args) -> int:
    out = Path(_require(args, "output_dir"))
    out.mkdir(parents=True, exist_ok=True)
    ids = synth.generate_dataset(
        out,
        n_subjects=_resolve(args, "n_subjects"),
        duration_s=_resolve(args, "duration_s"),
        seed=_resolve(args, "seed", 0),
    )
    print(f"wrote {len(ids)} synthetic subjects to {out}")
    return EXIT_OK


def cmd_extract(args) -> int:
    root = Path(_require(args, "dataset_root"))
    cache = Path(_require(args, "cache_dir"))
    window_cfg = _window_cfg(args)
    eda_cfg = EdaConfig(mode=_resolve(args, "eda_mode"))
    jobs = _resolve(args, "jobs")

    dataset_hash = _dataset_sha256(root)
    meta = {
        "version": CACHE_VERSION,
        "dataset_sha256": dataset_hash,
        "window": {
            "width_s": window_cfg.width_s,
            "shift_s": window_cfg.shift_s,
            "coverage_threshold": window_cfg.coverage_threshold,
        },
        "eda_mode": eda_cfg.mode,
    }
    meta_path = cache / "meta.json"
    if meta_path.exists() and not args.force:
        existing = json.loads(meta_path.read_text())
        if {k: existing.get(k) for k in meta} == meta:
            print(f"cache up to date: {cache} ({existing['n_rows']} rows)")
            return EXIT_OK

    records = [load_subject(d) for d in list_subject_dirs(root)]
    if not records:
        raise IngestError(f"no subject directories under {root}")
    matrix, drops = windows.build_feature_matrix(
        records, window_cfg, eda_cfg, n_jobs=jobs
    )
    cache.mkdir(parents=True, exist_ok=True)
    windows.save_matrix(matrix, cache / "features.csv")
    with open(cache / "drops.csv", "w", newline="\n") as fh:
        fh.write("subject_id,window_start_s,reason\n")
        for d in drops:
            fh.write(f"{d.subject_id},{d.window_start_s:.9g},{d.reason}\n")
    with open(cache / "feature_dictionary.json", "w") as fh:
        json.dump(windows.feature_dictionary(), fh, indent=2)
        fh.write("\n")
    meta.update({"n_rows": len(matrix), "n_drops": len(drops)})
    meta_path_tmp = meta_path.with_suffix(".tmp")
    meta_path_tmp.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    meta_path_tmp.replace(meta_path)
    print(f"extracted {len(matrix)} rows ({len(drops)} dropped windows) to {cache}")
    return EXIT_OK


def _load_cached_matrix(args) -> windows.FeatureMatrix:
    cache = Path(_require(args, "cache_dir"))
    features = cache / "features.csv"
    if not features.exists():
        raise IngestError(f"feature cache not found: {features} (run extract first)")
    return windows.load_matrix(features)


def cmd_train(args) -> int:
    matrix = _load_cached_matrix(args)
    out = Path(_resolve(args, "output_dir", _require(args, "cache_dir")))
    out.mkdir(parents=True, exist_ok=True)
    model = _resolve(args, "model")
    signals = _resolve(args, "signals")
    seed = _resolve(args, "seed", 0)
    if model == "nn":
        net_cfg = nn.config_for_signals(signals)
        result = nn.train(matrix.features, matrix.labels, net_cfg, _train_cfg(args, seed))
        path = out / f"nn_{signals}.npz"
        nn.save_checkpoint(path, result.params, net_cfg)
        with open(out / f"nn_{signals}_history.json", "w") as fh:
            json.dump(result.history, fh, indent=2)
            fh.write("\n")
        best = result.history[result.best_epoch - 1]["val_balanced_accuracy"]
        print(f"trained nn/{signals}: best val BA {best:.4f} "
              f"at epoch {result.best_epoch}; checkpoint {path}")
    elif model == "rf":
        sl = windows.FEATURE_SLICES[signals]
        fitted = forest.fit_forest(
            matrix.features[:, sl], matrix.labels, _forest_cfg(args, seed),
            n_jobs=_resolve(args, "jobs"),
        )
        path = out / f"rf_{signals}.npz"
        forest.save_forest(path, fitted)
        oob = "n/a" if fitted.oob_accuracy is None else f"{fitted.oob_accuracy:.4f}"
        print(f"trained rf/{signals}: OOB accuracy {oob}; checkpoint {path}")
    else:
        raise UsageError(f"unknown model {model!r} (expected nn or rf)")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    matrix = _load_cached_matrix(args)
    out = Path(_resolve(args, "output_dir", _require(args, "cache_dir")))
    out.mkdir(parents=True, exist_ok=True)
    model = _resolve(args, "model")
    signals = _resolve(args, "signals")
    seed = _resolve(args, "seed", 0)
    report = evaluate.run_experiment(
        matrix,
        model=model,
        signals=signals,
        seed=seed,
        nn_train_cfg=_train_cfg(args, seed),
        rf_cfg=_forest_cfg(args, seed),
        n_jobs=_resolve(args, "jobs"),
    )
    csv_path = out / f"report_{model}_{signals}_subjects.csv"
    json_path = out / f"report_{model}_{signals}.json"
    evaluate.save_report(report, csv_path, json_path)
    agg = report.aggregate()
    print(f"{model}/{signals} LOSO over {agg['n_subjects']} subjects: "
          f"accuracy {agg['accuracy_mean']:.4f} ± {agg['accuracy_std']:.4f}, "
          f"balanced accuracy {agg['balanced_accuracy_mean']:.4f} ± "
          f"{agg['balanced_accuracy_std']:.4f}")
    print(f"report written to {json_path}")
    return EXIT_OK


def cmd_report(args) -> int:
    report = evaluate.load_report(args.report_json)
    agg = report.aggregate()
    cfg = report.config
    print(f"model={cfg.get('model')} signals={cfg.get('signals')} seed={cfg.get('seed')}")
    print(f"{'subject':<12}{'windows':>8}{'accuracy':>10}{'bal.acc':>10}"
          f"{'tn':>6}{'fp':>6}{'fn':>6}{'tp':>6}")
    for s in report.subjects:
        print(f"{s.subject_id:<12}{s.n_windows:>8}{s.accuracy:>10.4f}"
              f"{s.balanced_accuracy:>10.4f}{s.tn:>6}{s.fp:>6}{s.fn:>6}{s.tp:>6}")
    print(f"{'mean':<12}{agg['n_windows']:>8}{agg['accuracy_mean']:>10.4f}"
          f"{agg['balanced_accuracy_mean']:>10.4f}")
    print(f"{'std (pop.)':<12}{'':>8}{agg['accuracy_std']:>10.4f}"
          f"{agg['balanced_accuracy_std']:>10.4f}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser assembly


def _add_common(sub: argparse.ArgumentParser):
    sub.add_argument("--config", help="key=value config file; flags override it")
    sub.add_argument("--seed", type=int, help="master seed (fallback: config, "
                     "then STRESSKIT_SEED, then 0)")
    sub.add_argument("--jobs", type=int, dest="jobs", help="worker processes (default 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="stresskit",
                     description="Wearable stress-detection pipeline")
    parser.add_argument("--version", action="version", version=f"stresskit {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("synth", parents=[], help="generate a synthetic dataset",
                        description="Write deterministic synthetic subjects in the "
                                    "neutral dataset layout.")
    p.add_argument("--out", dest="output_dir", help="dataset directory to create")
    p.add_argument("--n-subjects", type=int, dest="n_subjects")
    p.add_argument("--duration-s", type=float, dest="duration_s")
    _add_common(p)
    p.set_defaults(func=cmd_synth)

    p = subs.add_parser("extract", help="extract windowed features to a cache",
                        description="Window every subject and write features.csv, "
                                    "drops.csv, feature_dictionary.json, meta.json.")
    p.add_argument("--dataset", dest="dataset_root", help="neutral dataset root")
    p.add_argument("--cache", dest="cache_dir", help="feature cache directory")
    p.add_argument("--window-width-s", type=float, dest="window_width_s")
    p.add_argument("--window-shift-s", type=float, dest="window_shift_s")
    p.add_argument("--coverage-threshold", type=float, dest="coverage_threshold")
    p.add_argument("--eda-mode", choices=("cvxeda", "simple"), dest="eda_mode")
    p.add_argument("--force", action="store_true", help="re-extract even if cached")
    _add_common(p)
    p.set_defaults(func=cmd_extract)

    for name, func, help_text in (
        ("train", cmd_train, "fit one model on the whole cache, save a checkpoint"),
        ("evaluate", cmd_evaluate, "leave-one-subject-out evaluation, save a report"),
    ):
        p = subs.add_parser(name, help=help_text)
        p.add_argument("--cache", dest="cache_dir", help="feature cache directory")
        p.add_argument("--out", dest="output_dir", help="output directory "
                       "(default: the cache directory)")
        p.add_argument("--model", choices=evaluate.MODEL_KINDS, dest="model")
        p.add_argument("--signals", choices=evaluate.SIGNAL_LANES, dest="signals")
        p.add_argument("--learning-rate", type=float, dest="learning_rate")
        p.add_argument("--batch-size", type=int, dest="batch_size")
        p.add_argument("--dropout", type=float, dest="dropout")
        p.add_argument("--max-epochs", type=int, dest="max_epochs")
        p.add_argument("--patience", type=int, dest="patience")
        p.add_argument("--val-frac", type=float, dest="val_frac")
        p.add_argument("--n-trees", type=int, dest="n_trees")
        p.add_argument("--max-depth", type=int, dest="max_depth")
        p.add_argument("--min-samples-split", type=int, dest="min_samples_split")
        p.add_argument("--min-samples-leaf", type=int, dest="min_samples_leaf")
        p.add_argument("--max-features", dest="max_features",
                       help='"sqrt", "all", or an integer')
        p.add_argument("--class-weight", choices=("balanced", "none"), dest="class_weight")
        _add_common(p)
        p.set_defaults(func=func)

    p = subs.add_parser("report", help="print a saved evaluation report")
    p.add_argument("report_json", help="report JSON written by evaluate")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.config_values = parse_config_file(args.config) if getattr(args, "config", None) else {}
        return args.func(args)
    except UsageError as exc:
        print(f"stresskit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except IngestError as exc:
        print(f"stresskit: ingestion error: {exc}", file=sys.stderr)
        return EXIT_INGEST
    except SchemaMismatch as exc:
        print(f"stresskit: ingestion error: {exc}", file=sys.stderr)
        return EXIT_INGEST
    except FoldFailure as exc:
        print(f"stresskit: training error: {exc}", file=sys.stderr)
        return EXIT_TRAIN
    except StresskitError as exc:
        print(f"stresskit: training error: {exc}", file=sys.stderr)
        return EXIT_TRAIN


if __name__ == "__main__":
    sys.exit(main())
