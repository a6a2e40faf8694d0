"""Native subject file to neutral dataset layout.

The native per-subject file is a Python pickle holding wrist-device
channels (EDA at 4 Hz, BVP at 64 Hz, TEMP at 4 Hz) and a label stream of
integer condition codes sampled at the chest-device rate (700 Hz).  The
converter writes the four neutral files::

    eda.csv / bvp.csv / temp.csv   "# sampling_rate_hz=<rate>" + one value per line
    labels.csv                     "start_s,end_s,condition" rows

The label stream is compressed into maximal constant-code runs; runs
shorter than one second are dropped as sensor noise (their time span is
simply left unlabeled); codes are mapped to conditions through the code
map.  Codes absent from the map make the run ``other`` and emit an
UnknownCodeWarning rather than failing, so one glitched sample cannot
abort a two-hour conversion.
"""

from __future__ import annotations

import pickle
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .code_map import DEFAULT_CODE_MAP
from .errors import CorruptFile, UnknownCodeWarning

LABEL_RATE_HZ = 700.0
MIN_RUN_S = 1.0
WRIST_RATES_HZ = {"EDA": 4.0, "BVP": 64.0, "TEMP": 4.0}
SIGNAL_FILES = {"EDA": "eda.csv", "BVP": "bvp.csv", "TEMP": "temp.csv"}
LABELS_FILE = "labels.csv"
LABELS_HEADER = "start_s,end_s,condition"
FLOAT_FMT = "%.9g"


@dataclass(frozen=True)
class LabelRun:
    """Maximal constant-code span of the label stream, [start, end) samples."""

    code: int
    start_idx: int
    end_idx: int


@dataclass(frozen=True)
class Interval:
    start_s: float
    end_s: float
    condition: str


@dataclass
class ConversionReport:
    subject_id: str
    out_dir: Path
    intervals: list[Interval]
    n_runs: int
    n_dropped_runs: int
    unknown_codes: list[int] = field(default_factory=list)
    label_stream_s: float = 0.0
    labeled_s: float = 0.0


def load_native(path) -> dict:
    """Deserialize a native subject file; any structural surprise is
    reported as CorruptFile with the underlying cause."""
    try:
        with open(path, "rb") as fh:
            # native files were serialized under Python 2
            data = pickle.load(fh, encoding="latin1")
    except OSError:
        raise
    except Exception as exc:
        raise CorruptFile(f"{path}: cannot unpickle native file: {exc}") from exc
    try:
        wrist = data["signal"]["wrist"]
        channels = {
            name: np.asarray(wrist[name], dtype=float).ravel()
            for name in WRIST_RATES_HZ
        }
        labels = np.asarray(data["label"], dtype=int).ravel()
        subject_id = str(data.get("subject", Path(path).stem))
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptFile(f"{path}: unexpected native structure: {exc}") from exc
    if labels.size == 0 or any(ch.size == 0 for ch in channels.values()):
        raise CorruptFile(f"{path}: empty channel or label stream")
    return {"subject_id": subject_id, "channels": channels, "labels": labels}


def label_runs(labels: np.ndarray) -> list[LabelRun]:
    """Compress the code stream into maximal constant runs."""
    labels = np.asarray(labels)
    boundaries = np.flatnonzero(np.diff(labels)) + 1
    starts = np.concatenate([[0], boundaries])
    ends = np.concatenate([boundaries, [len(labels)]])
    return [
        LabelRun(int(labels[s]), int(s), int(e)) for s, e in zip(starts, ends)
    ]


def runs_to_intervals(
    runs: list[LabelRun],
    code_map: dict[int, str],
    label_rate_hz: float = LABEL_RATE_HZ,
    min_run_s: float = MIN_RUN_S,
) -> tuple[list[Interval], int, list[int]]:
    """Map runs to labeled intervals; returns (intervals, n_dropped,
    unknown_codes).  Sub-second runs are dropped; unmapped codes go to
    ``other`` with a warning."""
    intervals: list[Interval] = []
    dropped = 0
    unknown: list[int] = []
    for run in runs:
        duration_s = (run.end_idx - run.start_idx) / label_rate_hz
        if duration_s < min_run_s:
            dropped += 1
            continue
        if run.code in code_map:
            condition = code_map[run.code]
        else:
            condition = "other"
            if run.code not in unknown:
                unknown.append(run.code)
                warnings.warn(
                    f"label code {run.code} not in code map; "
                    f"mapping its runs to 'other'",
                    UnknownCodeWarning,
                    stacklevel=2,
                )
        intervals.append(
            Interval(
                start_s=run.start_idx / label_rate_hz,
                end_s=run.end_idx / label_rate_hz,
                condition=condition,
            )
        )
    return intervals, dropped, unknown


def _write_signal(path: Path, samples: np.ndarray, rate_hz: float) -> None:
    with open(path, "w") as fh:
        fh.write(f"# sampling_rate_hz={FLOAT_FMT % rate_hz}\n")
        fh.writelines(FLOAT_FMT % v + "\n" for v in samples)


def _write_labels(path: Path, intervals: list[Interval]) -> None:
    with open(path, "w") as fh:
        fh.write(LABELS_HEADER + "\n")
        for iv in sorted(intervals, key=lambda iv: iv.start_s):
            fh.write(
                f"{FLOAT_FMT % iv.start_s},{FLOAT_FMT % iv.end_s},{iv.condition}\n"
            )


def convert_subject(
    in_file,
    out_dir,
    code_map: dict[int, str] | None = None,
    label_rate_hz: float = LABEL_RATE_HZ,
) -> ConversionReport:
    """Convert one native subject file into a neutral subject directory."""
    if code_map is None:
        code_map = DEFAULT_CODE_MAP
    native = load_native(in_file)
    runs = label_runs(native["labels"])
    intervals, dropped, unknown = runs_to_intervals(
        runs, code_map, label_rate_hz=label_rate_hz
    )

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, rate in WRIST_RATES_HZ.items():
        _write_signal(out_dir / SIGNAL_FILES[name], native["channels"][name], rate)
    _write_labels(out_dir / LABELS_FILE, intervals)

    return ConversionReport(
        subject_id=native["subject_id"],
        out_dir=out_dir,
        intervals=intervals,
        n_runs=len(runs),
        n_dropped_runs=dropped,
        unknown_codes=unknown,
        label_stream_s=len(native["labels"]) / label_rate_hz,
        labeled_s=sum(iv.end_s - iv.start_s for iv in intervals),
    )
