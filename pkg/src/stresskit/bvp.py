"""BVP window preprocessing, systolic peak detection, RR-interval cleaning,
and the 30-dimensional HRV feature vector.

Peak detection follows the two-moving-average scheme (squared bandpassed
signal, 111 ms peak window vs 667 ms beat window) with a 300 ms refractory
rule.  Interval cleaning applies a physiological range gate plus a 20 %
relative-difference rule against the last kept interval, then fills dropped
intervals by linear interpolation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import dsp
from .errors import NoBeatsDetected, TooFewValidBeats


@dataclass(frozen=True)
class BvpConfig:
    winsor_lo_pct: float = 2.0
    winsor_hi_pct: float = 98.0
    highpass_hz: float = 0.5
    highpass_order: int = 4
    band_lo_hz: float = 0.5
    band_hi_hz: float = 8.0
    band_order: int = 2
    w_peak_s: float = 0.111
    w_beat_s: float = 0.667
    beta: float = 0.02
    refractory_s: float = 0.3
    rr_min_ms: float = 300.0
    rr_max_ms: float = 2000.0
    malik_frac: float = 0.2
    min_valid_beats: int = 4
    resample_hz: float = 4.0
    psd_segment_s: float = 64.0


@dataclass(frozen=True)
class RrSeries:
    """Raw beat-to-beat intervals; times mark the end of each interval."""

    intervals_ms: np.ndarray
    times_s: np.ndarray

    def __post_init__(self):
        if len(self.intervals_ms) != len(self.times_s):
            raise ValueError("intervals and times must align")

    def __len__(self):
        return len(self.intervals_ms)


@dataclass(frozen=True)
class NnSeries:
    """Cleaned intervals: same grid as the RR series, dropped values
    replaced by interpolation; ``kept`` flags the original survivors."""

    intervals_ms: np.ndarray
    times_s: np.ndarray
    kept: np.ndarray

    def __len__(self):
        return len(self.intervals_ms)


def preprocess_bvp(window, fs_hz: float, cfg: BvpConfig = BvpConfig()) -> np.ndarray:
    """Winsorize, high-pass, and min-max normalize one raw BVP window."""
    x = dsp.winsorize(window, cfg.winsor_lo_pct, cfg.winsor_hi_pct)
    hp = dsp.design_butterworth(cfg.highpass_order, cfg.highpass_hz, fs_hz, "highpass")
    return dsp.minmax_normalize(dsp.filtfilt(hp, x))


def _odd_window(seconds: float, fs_hz: float) -> int:
    w = max(1, int(round(seconds * fs_hz)))
    return w if w % 2 == 1 else w + 1


def _moving_average(x, w: int) -> np.ndarray:
    return np.convolve(x, np.full(w, 1.0 / w), mode="same")


def detect_systolic_peaks(x, fs_hz: float, cfg: BvpConfig = BvpConfig()) -> np.ndarray:
    """Systolic peak indices of a preprocessed BVP window."""
    bp = dsp.design_butterworth(cfg.band_order, (cfg.band_lo_hz, cfg.band_hi_hz), fs_hz, "bandpass")
    y = dsp.filtfilt(bp, np.asarray(x, dtype=float))
    squared = np.maximum(y, 0.0) ** 2
    w_peak = _odd_window(cfg.w_peak_s, fs_hz)
    w_beat = _odd_window(cfg.w_beat_s, fs_hz)
    ma_peak = _moving_average(squared, w_peak)
    ma_beat = _moving_average(squared, w_beat)
    interest = ma_peak > ma_beat + cfg.beta * np.mean(squared)

    edges = np.diff(interest.astype(int))
    starts = np.flatnonzero(edges == 1) + 1
    stops = np.flatnonzero(edges == -1) + 1
    if interest[0]:
        starts = np.concatenate([[0], starts])
    if interest[-1]:
        stops = np.concatenate([stops, [len(interest)]])

    peaks = [
        a + int(np.argmax(y[a:b]))
        for a, b in zip(starts, stops)
        if b - a >= w_peak
    ]
    refractory = cfg.refractory_s * fs_hz
    kept: list[int] = []
    for p in peaks:
        if kept and p - kept[-1] < refractory:
            if y[p] > y[kept[-1]]:
                kept[-1] = p
        else:
            kept.append(p)
    if not kept:
        raise NoBeatsDetected("no systolic peaks found in window")
    return np.array(kept, dtype=int)


def rr_from_peaks(peaks, fs_hz: float) -> RrSeries:
    peaks = np.asarray(peaks, dtype=int)
    if len(peaks) < 2:
        raise TooFewValidBeats(f"need at least 2 peaks for intervals, got {len(peaks)}")
    return RrSeries(intervals_ms=np.diff(peaks) * 1000.0 / fs_hz, times_s=peaks[1:] / fs_hz)


def clean_rr(rr: RrSeries, cfg: BvpConfig = BvpConfig()) -> NnSeries:
    """Range gate + 20 % rule against the last kept interval, then fill
    dropped intervals by linear interpolation (edges clamp to nearest kept)."""
    iv = rr.intervals_ms
    kept = np.zeros(len(iv), dtype=bool)
    last = None
    for i, v in enumerate(iv):
        if not (cfg.rr_min_ms <= v <= cfg.rr_max_ms):
            continue
        if last is not None and abs(v - last) > cfg.malik_frac * last:
            continue
        kept[i] = True
        last = v
    if kept.sum() < cfg.min_valid_beats:
        raise TooFewValidBeats(f"only {int(kept.sum())} intervals survived cleaning")
    idx = np.arange(len(iv), dtype=float)
    filled = iv.copy()
    filled[~kept] = np.interp(idx[~kept], idx[kept], iv[kept])
    return NnSeries(intervals_ms=filled, times_s=rr.times_s.copy(), kept=kept)


# ---------------------------------------------------------------------------
# Features

BVP_FEATURE_NAMES = (
    "hr_mean", "hr_std",
    "nn_mean", "nn_std",
    "nn_kurtosis", "nn_skewness",
    "vlf_power", "lf_power", "hf_power",
    "lf_norm", "hf_norm",
    "lf_hf_ratio",
    "total_power",
    "nn50", "pnn50", "nn20", "pnn20",
    "hti",
    "nn_rms",
    "sd1", "sd2",
    "rmssd",
    "sdsd",
    "sdsd_rmssd_ratio",
    "relrr_mean", "relrr_median", "relrr_std",
    "relrr_rmssd", "relrr_kurtosis", "relrr_skewness",
)

VLF_BAND = (0.003, 0.04)
LF_BAND = (0.04, 0.15)
HF_BAND = (0.15, 0.4)
HTI_BIN_MS = 7.8125


def _band_powers(nn: NnSeries, cfg: BvpConfig):
    """VLF/LF/HF powers of the 4 Hz-resampled, mean-subtracted NN series."""
    t = nn.times_s
    grid = np.arange(t[0], t[-1] + 1e-9, 1.0 / cfg.resample_hz)
    if len(grid) < 2:
        return 0.0, 0.0, 0.0
    resampled = np.interp(grid, t, nn.intervals_ms)
    resampled = resampled - resampled.mean()
    segment_s = min(cfg.psd_segment_s, len(resampled) / cfg.resample_hz)
    spec = dsp.welch_psd(resampled, cfg.resample_hz, segment_s)
    return (
        spec.band_power(*VLF_BAND),
        spec.band_power(*LF_BAND),
        spec.band_power(*HF_BAND),
    )


def hrv_triangular_index(nn_ms) -> float:
    """Count / max histogram bin occupancy, 7.8125 ms bins anchored at 0."""
    bins = np.floor(np.asarray(nn_ms) / HTI_BIN_MS).astype(int)
    counts = np.bincount(bins)
    return float(len(nn_ms) / counts.max())


def features_from_nn(nn: NnSeries, cfg: BvpConfig = BvpConfig()) -> np.ndarray:
    """The 30 HRV features from a cleaned interval series, in fixed order."""
    x = nn.intervals_ms
    if len(x) < cfg.min_valid_beats:
        raise TooFewValidBeats(f"need {cfg.min_valid_beats} intervals, got {len(x)}")
    hr = 60000.0 / x
    d = np.diff(x)
    var_nn = float(np.var(x))
    var_d = float(np.var(d))
    sd1 = float(np.sqrt(0.5 * var_d))
    sd2 = float(np.sqrt(max(2.0 * var_nn - 0.5 * var_d, 0.0)))
    rmssd = float(np.sqrt(np.mean(d**2)))
    sdsd = float(np.std(d))
    nn50 = int(np.sum(np.abs(d) > 50.0))
    nn20 = int(np.sum(np.abs(d) > 20.0))
    vlf, lf, hf = _band_powers(nn, cfg)
    lf_norm = lf / (lf + hf) if lf + hf > 0 else 0.0
    hf_norm = hf / (lf + hf) if lf + hf > 0 else 0.0
    ratio = lf / hf if hf > 0 else 0.0
    rel = 2.0 * d / (x[1:] + x[:-1])
    rel_d = np.diff(rel)
    rel_rmssd = float(np.sqrt(np.mean(rel_d**2))) if len(rel_d) else 0.0

    feats = [
        float(np.mean(hr)), float(np.std(hr)),
        float(np.mean(x)), float(np.std(x)),
        dsp.kurtosis(x), dsp.skewness(x),
        vlf, lf, hf,
        lf_norm, hf_norm,
        ratio,
        vlf + lf + hf,
        float(nn50), 100.0 * nn50 / len(d), float(nn20), 100.0 * nn20 / len(d),
        hrv_triangular_index(x),
        float(np.sqrt(np.mean(x**2))),
        sd1, sd2,
        rmssd,
        sdsd,
        sdsd / rmssd if rmssd > 0 else 0.0,
        float(np.mean(rel)), float(np.median(rel)), float(np.std(rel)),
        rel_rmssd, dsp.kurtosis(rel) if len(rel) >= 4 else 0.0,
        dsp.skewness(rel) if len(rel) >= 2 else 0.0,
    ]
    return np.array(feats)


def extract_bvp_features(window, fs_hz: float, cfg: BvpConfig = BvpConfig()) -> np.ndarray:
    """Preprocess a raw BVP window, detect beats, clean intervals, and
    compute the 30 HRV features.  Raises ``NoBeatsDetected`` or
    ``TooFewValidBeats`` when the window cannot support them."""
    x = preprocess_bvp(window, fs_hz, cfg)
    peaks = detect_systolic_peaks(x, fs_hz, cfg)
    nn = clean_rr(rr_from_peaks(peaks, fs_hz), cfg)
    return features_from_nn(nn, cfg)
