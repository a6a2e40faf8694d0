"""Synthetic wearable recordings for desk-scale evaluation.

Each subject gets physiologically flavored EDA/BVP/ST traces whose
class-relevant structure survives the real pipeline: stress raises the SCR
event rate (3/min vs 0.5/min), shortens the pulse interval (700 ms vs
900 ms mean RR, with jitter halved), and flips the skin-temperature slope
negative.  Per-subject offsets keep leave-one-subject-out evaluation
non-trivial without erasing the class separation.
"""

from __future__ import annotations

import numpy as np

from .data_model import Condition, ConditionInterval, SubjectRecord, TimeSeries, write_subject
from .eda import bateman_kernel

EDA_RATE_HZ = 4.0
BVP_RATE_HZ = 64.0
ST_RATE_HZ = 4.0

SCR_RATE_STRESS_PER_MIN = 3.0
SCR_RATE_CALM_PER_MIN = 0.5
RR_MEAN_STRESS_MS = 700.0
RR_MEAN_CALM_MS = 900.0
RR_JITTER_CALM_MS = 40.0
ST_SLOPE_STRESS = -0.004  # degC per second
ST_SLOPE_CALM = 0.0008

_DEFAULT_PATTERN = (
    (Condition.BASELINE, 300.0),
    (Condition.STRESS, 300.0),
    (Condition.AMUSEMENT, 180.0),
    (Condition.MEDITATION, 120.0),
    (Condition.BASELINE, 120.0),
    (Condition.STRESS, 180.0),
)


def default_schedule(duration_s: float = 1200.0) -> tuple[ConditionInterval, ...]:
    """The standard six-segment protocol, scaled to ``duration_s``."""
    total = sum(d for _, d in _DEFAULT_PATTERN)
    scale = duration_s / total
    out = []
    t = 0.0
    for cond, seg in _DEFAULT_PATTERN:
        out.append(ConditionInterval(start_s=t, end_s=t + seg * scale, condition=cond))
        t += seg * scale
    return tuple(out)


def _is_stress(cond: Condition) -> bool:
    return cond is Condition.STRESS


def _synth_eda(rng, schedule, duration_s: float) -> np.ndarray:
    n = int(round(duration_s * EDA_RATE_HZ))
    t = np.arange(n) / EDA_RATE_HZ
    base = rng.uniform(2.0, 6.0)
    drift = (
        rng.uniform(0.05, 0.15) * np.sin(2 * np.pi * rng.uniform(0.001, 0.002) * t + rng.uniform(0, 2 * np.pi))
        + rng.uniform(0.02, 0.06) * np.sin(2 * np.pi * rng.uniform(0.003, 0.005) * t + rng.uniform(0, 2 * np.pi))
    )
    impulses = np.zeros(n)
    for seg in schedule:
        rate_per_s = (SCR_RATE_STRESS_PER_MIN if _is_stress(seg.condition) else SCR_RATE_CALM_PER_MIN) / 60.0
        seg_len = seg.end_s - seg.start_s
        # at least one event per segment so the relative SCR threshold has a
        # genuine response to anchor on
        n_events = max(1, rng.poisson(rate_per_s * seg_len))
        times = rng.uniform(seg.start_s, seg.end_s, size=n_events)
        for ev in times:
            k = int(round(ev * EDA_RATE_HZ))
            if 0 <= k < n:
                impulses[k] += rng.uniform(0.5, 1.2)
    kernel = bateman_kernel(EDA_RATE_HZ, 2.0, 0.7, n)
    scrs = np.convolve(impulses, kernel)[:n]
    return base + drift + scrs + rng.normal(0.0, 0.003, size=n)


def _beat_times(rng, schedule, duration_s: float, rr_offset_ms: float) -> np.ndarray:
    bounds = np.array([seg.start_s for seg in schedule] + [duration_s])
    stress_flags = np.array([_is_stress(seg.condition) for seg in schedule])
    beats = []
    t = float(rng.uniform(0.2, 0.6))
    while t < duration_s:
        beats.append(t)
        seg_idx = min(int(np.searchsorted(bounds, t, side="right")) - 1, len(stress_flags) - 1)
        if stress_flags[seg_idx]:
            mean_ms = RR_MEAN_STRESS_MS + rr_offset_ms
            jitter_ms = RR_JITTER_CALM_MS / 2.0
        else:
            mean_ms = RR_MEAN_CALM_MS + rr_offset_ms
            jitter_ms = RR_JITTER_CALM_MS
        rr_s = max(0.35, rng.normal(mean_ms, jitter_ms) / 1000.0)
        t += rr_s
    return np.array(beats)


def _synth_bvp(rng, schedule, duration_s: float) -> np.ndarray:
    n = int(round(duration_s * BVP_RATE_HZ))
    t = np.arange(n) / BVP_RATE_HZ
    x = np.zeros(n)
    rr_offset_ms = rng.uniform(-50.0, 50.0)
    width_s = 0.045
    half_span = int(np.ceil(4 * width_s * BVP_RATE_HZ))
    for beat in _beat_times(rng, schedule, duration_s, rr_offset_ms):
        center = int(round(beat * BVP_RATE_HZ))
        lo = max(0, center - half_span)
        hi = min(n, center + half_span + 1)
        if lo >= hi:
            continue
        amp = rng.uniform(0.9, 1.1)
        x[lo:hi] += amp * np.exp(-0.5 * ((t[lo:hi] - beat) / width_s) ** 2)
    wander = 0.25 * np.sin(2 * np.pi * 0.18 * t + rng.uniform(0, 2 * np.pi))
    return x + wander + rng.normal(0.0, 0.03, size=n)


def _synth_st(rng, schedule, duration_s: float) -> np.ndarray:
    n = int(round(duration_s * ST_RATE_HZ))
    t = np.arange(n) / ST_RATE_HZ
    base = rng.uniform(32.5, 34.5)
    slope = np.full(n, ST_SLOPE_CALM)
    for seg in schedule:
        if _is_stress(seg.condition):
            lo = int(round(seg.start_s * ST_RATE_HZ))
            hi = min(n, int(round(seg.end_s * ST_RATE_HZ)))
            slope[lo:hi] = ST_SLOPE_STRESS
    trend = np.cumsum(slope) / ST_RATE_HZ
    ripple = 0.03 * np.sin(2 * np.pi * 0.004 * t + rng.uniform(0, 2 * np.pi))
    return base + trend + ripple + rng.normal(0.0, 0.01, size=n)


def generate_synthetic_subject(
    subject_id: str,
    seed: int,
    duration_s: float = 1200.0,
    schedule: tuple[ConditionInterval, ...] | None = None,
) -> SubjectRecord:
    """One deterministic synthetic subject; same seed, same record."""
    rng = np.random.default_rng(seed)
    if schedule is None:
        schedule = default_schedule(duration_s)
    return SubjectRecord(
        subject_id=subject_id,
        eda=TimeSeries(_synth_eda(rng, schedule, duration_s), EDA_RATE_HZ),
        bvp=TimeSeries(_synth_bvp(rng, schedule, duration_s), BVP_RATE_HZ),
        st=TimeSeries(_synth_st(rng, schedule, duration_s), ST_RATE_HZ),
        intervals=tuple(schedule),
    )


def generate_dataset(root, n_subjects: int = 6, duration_s: float = 1200.0, seed: int = 0) -> list[str]:
    """Write ``n_subjects`` synthetic subjects under ``root`` in the neutral
    layout; returns the subject ids."""
    import os

    seeds = np.random.SeedSequence(seed).spawn(n_subjects)
    ids = []
    for i, ss in enumerate(seeds):
        sid = f"synth{i + 1:02d}"
        record = generate_synthetic_subject(
            sid, seed=int(ss.generate_state(1)[0]), duration_s=duration_s
        )
        write_subject(record, os.path.join(root, sid))
        ids.append(sid)
    return ids
