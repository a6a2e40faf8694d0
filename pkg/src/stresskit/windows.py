"""Sliding-window enumeration, per-subject feature extraction, and the
feature-matrix CSV format.

A feature row is one labeled window: 36 EDA + 30 BVP + 6 ST features
concatenated into a 72-dimensional fused vector.  Windows whose condition
coverage does not produce a binary label are excluded (counted, not
logged); windows whose signals defeat extraction are logged as drops.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed

from . import bvp as bvp_mod
from . import eda as eda_mod
from . import st as st_mod
from .data_model import SubjectRecord, label_for_span, slice_series
from .errors import (
    DspError,
    InsufficientBeats,
    SchemaMismatch,
    SolverNotConverged,
    TooShort,
)

FEATURE_NAMES: tuple[str, ...] = (
    eda_mod.EDA_FEATURE_NAMES + bvp_mod.BVP_FEATURE_NAMES + st_mod.ST_FEATURE_NAMES
)
N_EDA, N_BVP, N_ST = 36, 30, 6
N_FUSED = N_EDA + N_BVP + N_ST
FEATURE_SLICES = {
    "eda": slice(0, N_EDA),
    "bvp": slice(N_EDA, N_EDA + N_BVP),
    "st": slice(N_EDA + N_BVP, N_FUSED),
    "fusion": slice(0, N_FUSED),
}
SIGNAL_NAMES = ("eda", "bvp", "st", "fusion")

_FLOAT_FMT = "%.9g"


def feature_dictionary() -> list[dict]:
    """Index/name/source-signal record for every fused-vector column."""
    entries = []
    for signal in ("eda", "bvp", "st"):
        sl = FEATURE_SLICES[signal]
        for i in range(sl.start, sl.stop):
            entries.append({"index": i, "name": FEATURE_NAMES[i], "signal": signal})
    return entries


@dataclass(frozen=True)
class WindowConfig:
    width_s: float = 60.0
    shift_s: float = 0.25
    coverage_threshold: float = 1.0

    def __post_init__(self):
        if self.width_s <= 0 or self.shift_s <= 0:
            raise ValueError("window width and shift must be positive")
        if not 0.0 < self.coverage_threshold <= 1.0:
            raise ValueError("coverage_threshold must be in (0, 1]")


def enumerate_windows(duration_s: float, cfg: WindowConfig) -> np.ndarray:
    """Window start times: 0, shift, 2*shift, ... while the window fits.

    The count uses a small tolerance so durations that are exact multiples
    of the shift are not lost to float rounding.
    """
    if duration_s < cfg.width_s:
        return np.empty(0)
    k = int(np.floor((duration_s - cfg.width_s) / cfg.shift_s + 1e-9)) + 1
    return np.arange(k) * cfg.shift_s


@dataclass(frozen=True)
class FeatureRow:
    subject_id: str
    window_start_s: float
    label: int
    features: np.ndarray  # (72,)


@dataclass(frozen=True)
class DroppedWindow:
    subject_id: str
    window_start_s: float
    reason: str


@dataclass
class ExtractionResult:
    rows: list[FeatureRow] = field(default_factory=list)
    drops: list[DroppedWindow] = field(default_factory=list)
    n_unlabeled: int = 0


def extract_features(
    record: SubjectRecord,
    window_cfg: WindowConfig = WindowConfig(),
    eda_cfg: eda_mod.EdaConfig = eda_mod.EdaConfig(),
    bvp_cfg: bvp_mod.BvpConfig = bvp_mod.BvpConfig(),
) -> ExtractionResult:
    """All labeled windows of one subject as feature rows, plus a drop log
    for windows whose signals defeated extraction."""
    result = ExtractionResult()
    bounds = None
    if eda_cfg.normalize_per == "subject":
        bounds = eda_mod.clean_bounds(
            record.eda.samples, record.eda.sampling_rate_hz, eda_cfg
        )
    for t0 in enumerate_windows(record.duration_s, window_cfg):
        t0 = float(t0)
        t1 = t0 + window_cfg.width_s
        label = label_for_span(record.intervals, t0, t1, window_cfg.coverage_threshold)
        if label is None:
            result.n_unlabeled += 1
            continue
        try:
            feats = np.concatenate([
                eda_mod.extract_eda_features(
                    slice_series(record.eda, t0, t1).samples,
                    record.eda.sampling_rate_hz, eda_cfg, bounds=bounds,
                ),
                bvp_mod.extract_bvp_features(
                    slice_series(record.bvp, t0, t1).samples,
                    record.bvp.sampling_rate_hz, bvp_cfg,
                ),
                st_mod.extract_st_features(
                    slice_series(record.st, t0, t1).samples,
                    record.st.sampling_rate_hz,
                ),
            ])
        except (InsufficientBeats, SolverNotConverged, TooShort, DspError) as exc:
            result.drops.append(DroppedWindow(record.subject_id, t0, type(exc).__name__))
            continue
        result.rows.append(FeatureRow(record.subject_id, t0, int(label), feats))
    return result


@dataclass
class FeatureMatrix:
    """Stacked feature rows of one or more subjects."""

    features: np.ndarray  # (n, 72)
    labels: np.ndarray  # (n,) int
    subjects: np.ndarray  # (n,) str
    starts: np.ndarray  # (n,) float

    def __len__(self):
        return len(self.labels)

    def subset(self, mask) -> "FeatureMatrix":
        return FeatureMatrix(
            self.features[mask], self.labels[mask],
            self.subjects[mask], self.starts[mask],
        )


def matrix_from_rows(rows: list[FeatureRow]) -> FeatureMatrix:
    if not rows:
        return FeatureMatrix(
            np.empty((0, N_FUSED)), np.empty(0, dtype=int),
            np.empty(0, dtype=object), np.empty(0),
        )
    return FeatureMatrix(
        features=np.stack([r.features for r in rows]),
        labels=np.array([r.label for r in rows], dtype=int),
        subjects=np.array([r.subject_id for r in rows], dtype=object),
        starts=np.array([r.window_start_s for r in rows]),
    )


def build_feature_matrix(
    records: list[SubjectRecord],
    window_cfg: WindowConfig = WindowConfig(),
    eda_cfg: eda_mod.EdaConfig = eda_mod.EdaConfig(),
    bvp_cfg: bvp_mod.BvpConfig = bvp_mod.BvpConfig(),
    n_jobs: int = 1,
) -> tuple[FeatureMatrix, list[DroppedWindow]]:
    """Extract every subject (optionally in parallel) and stack the rows in
    the given subject order.  Output is independent of ``n_jobs``."""
    if n_jobs == 1:
        results = [extract_features(r, window_cfg, eda_cfg, bvp_cfg) for r in records]
    else:
        results = Parallel(n_jobs=n_jobs)(
            delayed(extract_features)(r, window_cfg, eda_cfg, bvp_cfg) for r in records
        )
    rows: list[FeatureRow] = []
    drops: list[DroppedWindow] = []
    for res in results:
        rows.extend(res.rows)
        drops.extend(res.drops)
    return matrix_from_rows(rows), drops


# ---------------------------------------------------------------------------
# CSV persistence

_META_COLUMNS = ("subject_id", "window_start_s", "label")


def _matrix_header() -> str:
    return ",".join(_META_COLUMNS + FEATURE_NAMES)


def save_matrix(matrix: FeatureMatrix, path) -> None:
    """Write the matrix as CSV with 9-significant-digit floats.  Output is
    byte-identical for identical input."""
    lines = [_matrix_header()]
    for i in range(len(matrix)):
        subject = str(matrix.subjects[i])
        if "," in subject:
            raise ValueError(f"subject id {subject!r} contains a comma")
        cells = [subject, _FLOAT_FMT % matrix.starts[i], str(int(matrix.labels[i]))]
        cells.extend(_FLOAT_FMT % v for v in matrix.features[i])
        lines.append(",".join(cells))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_matrix(path) -> FeatureMatrix:
    """Read a feature-matrix CSV; the header must match the current feature
    dictionary exactly, otherwise ``SchemaMismatch``."""
    with open(path) as fh:
        header = fh.readline().rstrip("\n")
        if header != _matrix_header():
            raise SchemaMismatch(
                f"feature matrix header does not match the current dictionary: {path}"
            )
        subjects, starts, labels, feats = [], [], [], []
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            cells = line.split(",")
            if len(cells) != len(_META_COLUMNS) + N_FUSED:
                raise SchemaMismatch(f"row {lineno} has {len(cells)} columns: {path}")
            subjects.append(cells[0])
            starts.append(float(cells[1]))
            labels.append(int(cells[2]))
            feats.append([float(v) for v in cells[3:]])
    return FeatureMatrix(
        features=np.array(feats, dtype=float).reshape(len(subjects), N_FUSED),
        labels=np.array(labels, dtype=int),
        subjects=np.array(subjects, dtype=object),
        starts=np.array(starts, dtype=float),
    )
