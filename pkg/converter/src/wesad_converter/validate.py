"""Post-conversion validation of a neutral subject directory.

Re-reads the emitted files from disk (no shared state with the writer)
and checks the properties a downstream consumer relies on: the expected
rate headers, finite samples, mutually consistent channel durations, and
a sane non-overlapping interval list.  Returns a report rather than
raising, so callers can print every problem at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

from .code_map import VALID_CONDITIONS
from .convert import LABELS_FILE, LABELS_HEADER, SIGNAL_FILES, WRIST_RATES_HZ

MAX_DURATION_MISMATCH_S = 1.0


@dataclass
class ValidationReport:
    directory: Path
    problems: list[str] = field(default_factory=list)
    channel_durations_s: dict = field(default_factory=dict)
    n_intervals: int = 0

    @property
    def ok(self) -> bool:
        return not self.problems


def _check_signal(path: Path, expected_rate: float, report: ValidationReport):
    if not path.is_file():
        report.problems.append(f"{path.name}: missing file")
        return
    with open(path) as fh:
        header = fh.readline().rstrip("\n")
        prefix = "# sampling_rate_hz="
        if not header.startswith(prefix):
            report.problems.append(f"{path.name}: bad rate header {header!r}")
            return
        try:
            rate = float(header[len(prefix):])
        except ValueError:
            report.problems.append(f"{path.name}: unparseable rate header")
            return
        if rate != expected_rate:
            report.problems.append(
                f"{path.name}: rate {rate:g} Hz, expected {expected_rate:g} Hz"
            )
        n = 0
        for lineno, raw in enumerate(fh, start=2):
            raw = raw.strip()
            if not raw:
                continue
            try:
                value = float(raw)
            except ValueError:
                report.problems.append(f"{path.name}:{lineno}: unparseable sample {raw!r}")
                return
            if not math.isfinite(value):
                report.problems.append(f"{path.name}:{lineno}: non-finite sample")
                return
            n += 1
    if n == 0:
        report.problems.append(f"{path.name}: no samples")
    elif rate > 0:
        report.channel_durations_s[path.name] = n / rate


def _check_labels(path: Path, report: ValidationReport):
    if not path.is_file():
        report.problems.append(f"{path.name}: missing file")
        return
    intervals = []
    with open(path) as fh:
        header = fh.readline().rstrip("\n")
        if header != LABELS_HEADER:
            report.problems.append(f"{path.name}: bad header {header!r}")
            return
        for lineno, raw in enumerate(fh, start=2):
            raw = raw.strip()
            if not raw:
                continue
            parts = raw.split(",")
            if len(parts) != 3:
                report.problems.append(f"{path.name}:{lineno}: expected 3 columns")
                return
            try:
                start_s, end_s = float(parts[0]), float(parts[1])
            except ValueError:
                report.problems.append(f"{path.name}:{lineno}: unparseable bounds")
                return
            if parts[2] not in VALID_CONDITIONS:
                report.problems.append(
                    f"{path.name}:{lineno}: unknown condition {parts[2]!r}"
                )
            if not (math.isfinite(start_s) and math.isfinite(end_s)) or start_s >= end_s:
                report.problems.append(
                    f"{path.name}:{lineno}: invalid interval [{parts[0]}, {parts[1]})"
                )
            intervals.append((start_s, end_s))
    if not intervals:
        report.problems.append(f"{path.name}: no intervals")
        return
    report.n_intervals = len(intervals)
    ordered = sorted(intervals)
    for (s0, e0), (s1, e1) in zip(ordered, ordered[1:]):
        if s1 < e0 - 1e-9:
            report.problems.append(
                f"{path.name}: intervals [{s0:g}, {e0:g}) and [{s1:g}, {e1:g}) overlap"
            )


def validate_conversion(out_dir) -> ValidationReport:
    """Validate one converted subject directory."""
    out_dir = Path(out_dir)
    report = ValidationReport(directory=out_dir)
    if not out_dir.is_dir():
        report.problems.append(f"{out_dir}: not a directory")
        return report
    for name, rate in WRIST_RATES_HZ.items():
        _check_signal(out_dir / SIGNAL_FILES[name], rate, report)
    _check_labels(out_dir / LABELS_FILE, report)
    if report.channel_durations_s:
        durations = list(report.channel_durations_s.values())
        if max(durations) - min(durations) > MAX_DURATION_MISMATCH_S:
            report.problems.append(
                "channel durations differ by more than "
                f"{MAX_DURATION_MISMATCH_S:g} s: {report.channel_durations_s}"
            )
    return report
