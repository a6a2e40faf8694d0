"""On-disk dataset format and in-memory data model.

A subject lives in one directory holding eda.csv, bvp.csv, temp.csv and
labels.csv. Signal files start with a ``# sampling_rate_hz=<float>`` header
line followed by one sample per line; labels.csv maps condition intervals to
the protocol conditions. Floats are serialized with 9 significant digits.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    DurationMismatch,
    MalformedHeader,
    MalformedRow,
    MissingFile,
    NonFiniteSample,
    OutOfRange,
    OverlappingIntervals,
)

FLOAT_FMT = "%.9g"
SIGNAL_FILES = {"eda": "eda.csv", "bvp": "bvp.csv", "st": "temp.csv"}
LABELS_FILE = "labels.csv"
LABELS_HEADER = "start_s,end_s,condition"


class Condition(str, enum.Enum):
    BASELINE = "baseline"
    AMUSEMENT = "amusement"
    STRESS = "stress"
    MEDITATION = "meditation"
    OTHER = "other"


class BinaryLabel(enum.IntEnum):
    NON_STRESS = 0
    STRESS = 1


# Conditions entering the binary task; meditation/other never yield a label.
CONDITION_TO_LABEL = {
    Condition.BASELINE: BinaryLabel.NON_STRESS,
    Condition.AMUSEMENT: BinaryLabel.NON_STRESS,
    Condition.STRESS: BinaryLabel.STRESS,
}


@dataclass(frozen=True)
class TimeSeries:
    """Uniformly sampled scalar signal."""

    samples: np.ndarray
    sampling_rate_hz: float

    def __post_init__(self):
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=float))
        if self.sampling_rate_hz <= 0:
            raise ValueError("sampling_rate_hz must be positive")

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sampling_rate_hz

    def __len__(self):
        return len(self.samples)


def slice_series(ts: TimeSeries, t0: float, t1: float) -> TimeSeries:
    """Samples in [round(t0*fs), round(t1*fs)) at the same rate."""
    if t0 < 0 or t0 >= t1 or t1 > ts.duration_s + 1e-9:
        raise OutOfRange(f"slice [{t0}, {t1}) outside series of {ts.duration_s:.3f} s")
    fs = ts.sampling_rate_hz
    i0 = int(round(t0 * fs))
    i1 = int(round(t1 * fs))
    return TimeSeries(ts.samples[i0:i1], fs)


@dataclass(frozen=True)
class ConditionInterval:
    start_s: float
    end_s: float
    condition: Condition

    def __post_init__(self):
        if self.start_s >= self.end_s:
            raise ValueError(f"interval [{self.start_s}, {self.end_s}) is empty")


@dataclass(frozen=True)
class SubjectRecord:
    """One subject's three signals plus condition-interval annotations."""

    subject_id: str
    eda: TimeSeries
    bvp: TimeSeries
    st: TimeSeries
    intervals: tuple[ConditionInterval, ...]

    def __post_init__(self):
        object.__setattr__(self, "intervals", tuple(self.intervals))

    @property
    def duration_s(self) -> float:
        """Common time span covered by all three signals."""
        return min(self.eda.duration_s, self.bvp.duration_s, self.st.duration_s)

    @property
    def is_trainable(self) -> bool:
        conds = {iv.condition for iv in self.intervals}
        return Condition.STRESS in conds and Condition.BASELINE in conds


def label_for_span(intervals, t0: float, t1: float, coverage_threshold: float = 1.0):
    """Binary label of [t0, t1), or None if no single condition covers enough.

    A condition qualifies when its intervals cover at least
    ``coverage_threshold`` of the span; spans without exactly one qualifying
    condition, and spans covered by meditation/other, yield None.
    """
    if t0 >= t1:
        raise ValueError("span must have t0 < t1")
    span = t1 - t0
    coverage: dict[Condition, float] = {}
    for iv in intervals:
        overlap = min(iv.end_s, t1) - max(iv.start_s, t0)
        if overlap > 0:
            coverage[iv.condition] = coverage.get(iv.condition, 0.0) + overlap
    qualifying = [c for c, cov in coverage.items() if cov / span >= coverage_threshold - 1e-9]
    if len(qualifying) != 1:
        return None
    return CONDITION_TO_LABEL.get(qualifying[0])


# ---------------------------------------------------------------------------
# Loading


def _read_signal_csv(path: Path) -> TimeSeries:
    if not path.is_file():
        raise MissingFile(f"missing signal file", file=str(path))
    with open(path) as fh:
        header = fh.readline().rstrip("\n")
        if not header.startswith("# sampling_rate_hz="):
            raise MalformedHeader(
                f"expected '# sampling_rate_hz=<float>', got {header!r}",
                file=str(path), line=1,
            )
        try:
            fs = float(header.split("=", 1)[1])
        except ValueError:
            raise MalformedHeader("unparseable sampling rate", file=str(path), line=1)
        if fs <= 0 or not math.isfinite(fs):
            raise MalformedHeader(f"sampling rate {fs} must be positive", file=str(path), line=1)
        samples = []
        for lineno, raw in enumerate(fh, start=2):
            raw = raw.strip()
            if not raw:
                continue
            try:
                value = float(raw)
            except ValueError:
                raise MalformedRow(f"unparseable sample {raw!r}", file=str(path), line=lineno)
            if not math.isfinite(value):
                raise NonFiniteSample(f"non-finite sample {raw!r}", file=str(path), line=lineno)
            samples.append(value)
    if not samples:
        raise MalformedRow("signal file holds no samples", file=str(path))
    return TimeSeries(np.array(samples), fs)


def _read_labels_csv(path: Path) -> tuple[ConditionInterval, ...]:
    if not path.is_file():
        raise MissingFile("missing labels file", file=str(path))
    intervals = []
    with open(path) as fh:
        header = fh.readline().rstrip("\n")
        if header != LABELS_HEADER:
            raise MalformedHeader(
                f"expected {LABELS_HEADER!r}, got {header!r}", file=str(path), line=1
            )
        for lineno, raw in enumerate(fh, start=2):
            raw = raw.strip()
            if not raw:
                continue
            parts = raw.split(",")
            if len(parts) != 3:
                raise MalformedRow(f"expected 3 columns, got {len(parts)}", file=str(path), line=lineno)
            try:
                start_s, end_s = float(parts[0]), float(parts[1])
            except ValueError:
                raise MalformedRow(f"unparseable interval bounds {raw!r}", file=str(path), line=lineno)
            try:
                condition = Condition(parts[2])
            except ValueError:
                raise MalformedRow(f"unknown condition {parts[2]!r}", file=str(path), line=lineno)
            if not (math.isfinite(start_s) and math.isfinite(end_s)) or start_s >= end_s:
                raise MalformedRow(f"invalid interval [{parts[0]}, {parts[1]})", file=str(path), line=lineno)
            intervals.append(ConditionInterval(start_s, end_s, condition))
    _check_no_overlap(intervals, path)
    return tuple(intervals)


def _check_no_overlap(intervals, path):
    ordered = sorted(intervals, key=lambda iv: iv.start_s)
    for prev, cur in zip(ordered, ordered[1:]):
        if cur.start_s < prev.end_s - 1e-9:
            raise OverlappingIntervals(
                f"intervals [{prev.start_s}, {prev.end_s}) and "
                f"[{cur.start_s}, {cur.end_s}) overlap",
                file=str(path),
            )


def load_subject(dir_path, max_duration_mismatch_s: float = 1.0) -> SubjectRecord:
    """Load and validate one subject directory."""
    dir_path = Path(dir_path)
    if not dir_path.is_dir():
        raise MissingFile("subject directory does not exist", file=str(dir_path))
    eda = _read_signal_csv(dir_path / SIGNAL_FILES["eda"])
    bvp = _read_signal_csv(dir_path / SIGNAL_FILES["bvp"])
    st = _read_signal_csv(dir_path / SIGNAL_FILES["st"])
    intervals = _read_labels_csv(dir_path / LABELS_FILE)
    durations = [eda.duration_s, bvp.duration_s, st.duration_s]
    if max(durations) - min(durations) > max_duration_mismatch_s:
        raise DurationMismatch(
            f"signal durations {durations} differ by more than "
            f"{max_duration_mismatch_s} s", file=str(dir_path),
        )
    return SubjectRecord(
        subject_id=dir_path.name, eda=eda, bvp=bvp, st=st, intervals=intervals
    )


# ---------------------------------------------------------------------------
# Writing (used by the synthetic generator and format converters)


def _write_signal_csv(path: Path, ts: TimeSeries):
    with open(path, "w") as fh:
        fh.write(f"# sampling_rate_hz={FLOAT_FMT % ts.sampling_rate_hz}\n")
        fh.writelines(FLOAT_FMT % v + "\n" for v in ts.samples)


def write_subject(record: SubjectRecord, dir_path) -> Path:
    """Write a record in the neutral layout; returns the subject directory."""
    dir_path = Path(dir_path)
    dir_path.mkdir(parents=True, exist_ok=True)
    _write_signal_csv(dir_path / SIGNAL_FILES["eda"], record.eda)
    _write_signal_csv(dir_path / SIGNAL_FILES["bvp"], record.bvp)
    _write_signal_csv(dir_path / SIGNAL_FILES["st"], record.st)
    with open(dir_path / LABELS_FILE, "w") as fh:
        fh.write(LABELS_HEADER + "\n")
        for iv in sorted(record.intervals, key=lambda iv: iv.start_s):
            fh.write(f"{FLOAT_FMT % iv.start_s},{FLOAT_FMT % iv.end_s},{iv.condition.value}\n")
    return dir_path


def list_subject_dirs(root) -> list[Path]:
    """Subject directories under a dataset root, sorted by name."""
    root = Path(root)
    if not root.is_dir():
        raise MissingFile("dataset root does not exist", file=str(root))
    return sorted(p for p in root.iterdir() if p.is_dir() and (p / LABELS_FILE).is_file())
