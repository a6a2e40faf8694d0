"""Leave-one-subject-out orchestration, stratified splitting, metrics, and
report emission.

A report carries one row per held-out subject plus population-statistics
aggregates (mean and ddof=0 std over subjects) and an echo of the
configuration that produced it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np
from joblib import Parallel, delayed

from . import forest as forest_mod
from . import nn as nn_mod
from .errors import (
    EmptyInput,
    FoldFailure,
    SingleClassData,
    SingleClassLabels,
    TooFewSubjects,
)
from .windows import FEATURE_SLICES, FeatureMatrix

MODEL_KINDS = ("nn", "rf")
SIGNAL_LANES = ("eda", "bvp", "st", "fusion")


# ---------------------------------------------------------------------------
# Metrics


def accuracy(y_true, y_pred) -> float:
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if len(y_true) == 0:
        raise EmptyInput("accuracy of an empty prediction set")
    return float(np.mean(y_true == y_pred))


def balanced_accuracy(y_true, y_pred) -> float:
    """Mean of per-class recalls; needs both classes in ``y_true``."""
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    n1 = int(np.sum(y_true == 1))
    n0 = len(y_true) - n1
    if n0 == 0 or n1 == 0:
        raise SingleClassLabels("balanced accuracy needs both classes present")
    recall1 = np.sum((y_true == 1) & (y_pred == 1)) / n1
    recall0 = np.sum((y_true == 0) & (y_pred == 0)) / n0
    return float(0.5 * (recall0 + recall1))


def confusion_counts(y_true, y_pred) -> tuple[int, int, int, int]:
    """(tn, fp, fn, tp)."""
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    tp = int(np.sum((y_true == 1) & (y_pred == 1)))
    tn = int(np.sum((y_true == 0) & (y_pred == 0)))
    fp = int(np.sum((y_true == 0) & (y_pred == 1)))
    fn = int(np.sum((y_true == 1) & (y_pred == 0)))
    return tn, fp, fn, tp


# ---------------------------------------------------------------------------
# Splits


def loso_folds(subjects) -> list[tuple[str, np.ndarray, np.ndarray]]:
    """One (subject_id, train_idx, test_idx) per distinct subject, in
    sorted subject order."""
    subjects = np.asarray(subjects)
    uniq = sorted(set(subjects.tolist()))
    if len(uniq) < 2:
        raise TooFewSubjects(f"LOSO needs >= 2 subjects, got {len(uniq)}")
    folds = []
    for sid in uniq:
        test = subjects == sid
        folds.append((sid, np.flatnonzero(~test), np.flatnonzero(test)))
    return folds


def stratified_shuffle_split(labels, train_frac: float = 0.8, seed: int = 0):
    """(train_idx, val_idx): a seeded shuffle that keeps each class's
    validation share at round((1 - train_frac) * count)."""
    labels = np.asarray(labels)
    if not 0.0 < train_frac < 1.0:
        raise ValueError("train_frac must be in (0, 1)")
    classes = np.unique(labels)
    if len(classes) < 2:
        raise SingleClassData("stratified split needs both classes")
    rng = np.random.default_rng(seed)
    val_parts = []
    train_parts = []
    for c in classes:
        idx = np.flatnonzero(labels == c)
        rng.shuffle(idx)
        n_val = int(round((1.0 - train_frac) * len(idx)))
        val_parts.append(idx[:n_val])
        train_parts.append(idx[n_val:])
    train_idx = np.sort(np.concatenate(train_parts))
    val_idx = np.sort(np.concatenate(val_parts))
    return train_idx, val_idx


# ---------------------------------------------------------------------------
# Reports


@dataclass(frozen=True)
class SubjectResult:
    subject_id: str
    n_windows: int
    accuracy: float
    balanced_accuracy: float
    tn: int
    fp: int
    fn: int
    tp: int


@dataclass
class EvalReport:
    subjects: list[SubjectResult]
    config: dict = field(default_factory=dict)

    def aggregate(self) -> dict:
        """Mean and population std (ddof=0) of each metric over subjects."""
        acc = np.array([s.accuracy for s in self.subjects])
        ba = np.array([s.balanced_accuracy for s in self.subjects])
        return {
            "n_subjects": len(self.subjects),
            "n_windows": int(sum(s.n_windows for s in self.subjects)),
            "accuracy_mean": float(acc.mean()),
            "accuracy_std": float(acc.std()),
            "balanced_accuracy_mean": float(ba.mean()),
            "balanced_accuracy_std": float(ba.std()),
            "std_convention": "population (ddof=0) over subjects",
        }


def save_report(report: EvalReport, csv_path, json_path) -> None:
    header = "subject_id,n_windows,accuracy,balanced_accuracy,tn,fp,fn,tp"
    lines = [header]
    for s in report.subjects:
        lines.append(
            f"{s.subject_id},{s.n_windows},{s.accuracy:.9g},{s.balanced_accuracy:.9g},"
            f"{s.tn},{s.fp},{s.fn},{s.tp}"
        )
    with open(csv_path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    payload = {
        "config": report.config,
        "aggregate": report.aggregate(),
        "subjects": [vars(s) for s in report.subjects],
    }
    with open(json_path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_report(json_path) -> EvalReport:
    with open(json_path) as fh:
        payload = json.load(fh)
    subjects = [SubjectResult(**s) for s in payload["subjects"]]
    return EvalReport(subjects=subjects, config=payload["config"])


# ---------------------------------------------------------------------------
# Experiments


def _fold_seed_ints(seed: int, n: int) -> list[int]:
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(n)]


def _run_fold(matrix: FeatureMatrix, sid: str, train_idx, test_idx,
              model: str, signals: str, fold_seed: int,
              nn_train_cfg, rf_cfg) -> SubjectResult:
    X_tr, y_tr = matrix.features[train_idx], matrix.labels[train_idx]
    X_te, y_te = matrix.features[test_idx], matrix.labels[test_idx]
    try:
        if model == "nn":
            net_cfg = nn_mod.config_for_signals(signals)
            train_cfg = replace(nn_train_cfg, seed=fold_seed)
            fit = nn_mod.train(X_tr, y_tr, net_cfg, train_cfg)
            y_hat, _ = nn_mod.predict(fit.params, net_cfg, X_te)
        else:
            sl = FEATURE_SLICES[signals]
            cfg = replace(rf_cfg, seed=fold_seed)
            fitted = forest_mod.fit_forest(X_tr[:, sl], y_tr, cfg)
            y_hat, _ = forest_mod.predict_forest(fitted, X_te[:, sl])
        tn, fp, fn, tp = confusion_counts(y_te, y_hat)
        return SubjectResult(
            subject_id=sid, n_windows=len(y_te),
            accuracy=accuracy(y_te, y_hat),
            balanced_accuracy=balanced_accuracy(y_te, y_hat),
            tn=tn, fp=fp, fn=fn, tp=tp,
        )
    except Exception as exc:
        raise FoldFailure(sid, exc) from exc


def run_experiment(
    matrix: FeatureMatrix,
    model: str = "nn",
    signals: str = "fusion",
    seed: int = 0,
    nn_train_cfg: nn_mod.TrainConfig = nn_mod.TrainConfig(),
    rf_cfg: forest_mod.ForestConfig = forest_mod.ForestConfig(),
    n_jobs: int = 1,
) -> EvalReport:
    """LOSO evaluation of one model/signal lane over a feature matrix.

    Per-fold seeds derive from the master seed, so results do not depend
    on ``n_jobs`` or fold execution order.
    """
    if model not in MODEL_KINDS:
        raise ValueError(f"model must be one of {MODEL_KINDS}")
    if signals not in SIGNAL_LANES:
        raise ValueError(f"signals must be one of {SIGNAL_LANES}")
    folds = loso_folds(matrix.subjects)
    fold_seeds = _fold_seed_ints(seed, len(folds))
    if n_jobs == 1:
        results = [
            _run_fold(matrix, sid, tr, te, model, signals, fs, nn_train_cfg, rf_cfg)
            for (sid, tr, te), fs in zip(folds, fold_seeds)
        ]
    else:
        results = Parallel(n_jobs=n_jobs)(
            delayed(_run_fold)(matrix, sid, tr, te, model, signals, fs, nn_train_cfg, rf_cfg)
            for (sid, tr, te), fs in zip(folds, fold_seeds)
        )
    config = {
        "model": model,
        "signals": signals,
        "seed": seed,
        "n_subjects": len(folds),
        "nn": {
            "learning_rate": nn_train_cfg.learning_rate,
            "batch_size": nn_train_cfg.batch_size,
            "dropout": nn_train_cfg.dropout,
            "max_epochs": nn_train_cfg.max_epochs,
            "patience": nn_train_cfg.patience,
            "val_frac": nn_train_cfg.val_frac,
        },
        "rf": {
            "n_trees": rf_cfg.n_trees,
            "max_depth": rf_cfg.max_depth,
            "min_samples_split": rf_cfg.min_samples_split,
            "min_samples_leaf": rf_cfg.min_samples_leaf,
            "bootstrap": rf_cfg.bootstrap,
            "max_features": rf_cfg.max_features,
            "class_weight": rf_cfg.class_weight,
        },
    }
    return EvalReport(subjects=results, config=config)
