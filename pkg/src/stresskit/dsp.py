"""Shared signal-processing kernels.

IIR filter design and zero-phase application are backed by scipy.signal;
winsorization, normalization, the Haar wavelet denoiser, and the descriptive
statistics are implemented here. All functions are pure.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import signal as sps

from .errors import (
    CutoffOutOfRange,
    EmptyInput,
    FilterOrderOutOfRange,
    SegmentTooLong,
    SignalTooShort,
    TooFewSamples,
    UnstableDesign,
    ZeroVariance,
)

STABILITY_MARGIN = 1e-9


@dataclass(frozen=True)
class IirFilter:
    """Cascade of biquad sections plus the design metadata."""

    sos: np.ndarray  # shape (n_sections, 6), scipy layout [b0 b1 b2 1 a1 a2]
    order: int
    cutoff_hz: float | tuple[float, float]
    kind: str  # lowpass | highpass | bandpass
    fs_hz: float

    def __post_init__(self):
        sos = np.atleast_2d(np.asarray(self.sos, dtype=float))
        object.__setattr__(self, "sos", sos)
        expected = self.order if self.kind == "bandpass" else (self.order + 1) // 2
        if sos.shape != (expected, 6):
            raise UnstableDesign(
                f"section count {sos.shape[0]} inconsistent with order {self.order}"
            )
        if np.any(self.pole_radii() >= 1.0 - STABILITY_MARGIN):
            raise UnstableDesign("filter has poles on or outside the unit circle")

    def pole_radii(self) -> np.ndarray:
        radii = []
        for sec in self.sos:
            radii.extend(np.abs(np.roots([1.0, sec[4], sec[5]])))
        return np.asarray(radii)

    def gain_at(self, freqs_hz) -> np.ndarray:
        """Magnitude of the frequency response at the given frequencies."""
        w = 2.0 * np.pi * np.atleast_1d(np.asarray(freqs_hz, dtype=float)) / self.fs_hz
        _, h = sps.sosfreqz(self.sos, worN=w)
        return np.abs(h)


def design_butterworth(order: int, cutoff_hz, fs_hz: float, kind: str = "lowpass") -> IirFilter:
    """Digital Butterworth filter (bilinear transform with pre-warping)."""
    if not 1 <= order <= 8:
        raise FilterOrderOutOfRange(f"order {order} outside [1, 8]")
    nyq = fs_hz / 2.0
    if kind in ("lowpass", "highpass"):
        fc = float(cutoff_hz)
        if not 0.0 < fc < nyq:
            raise CutoffOutOfRange(f"cutoff {fc} Hz outside (0, {nyq}) for fs={fs_hz}")
        wn = fc
    elif kind == "bandpass":
        lo, hi = (float(c) for c in cutoff_hz)
        if not 0.0 < lo < hi < nyq:
            raise CutoffOutOfRange(f"band ({lo}, {hi}) Hz invalid for fs={fs_hz}")
        wn = (lo, hi)
    else:
        raise ValueError(f"unknown filter kind {kind!r}")
    sos = sps.butter(order, wn, btype=kind, fs=fs_hz, output="sos")
    return IirFilter(sos=sos, order=order, cutoff_hz=cutoff_hz, kind=kind, fs_hz=fs_hz)


def filtfilt(f: IirFilter, x) -> np.ndarray:
    """Zero-phase forward-backward filtering with odd-reflection padding."""
    x = np.asarray(x, dtype=float)
    padlen = 3 * f.order
    if len(x) <= padlen:
        raise SignalTooShort(f"need more than {padlen} samples, got {len(x)}")
    return sps.sosfiltfilt(f.sos, x, padtype="odd", padlen=padlen)


def winsorize(x, lo_pct: float = 2.0, hi_pct: float = 98.0) -> np.ndarray:
    """Clamp samples outside the [lo_pct, hi_pct] percentile range.

    Percentiles use linear interpolation between order statistics, so a
    second application may still move values by a fraction of the local
    inter-order-statistic gap.
    """
    x = np.asarray(x, dtype=float)
    if len(x) < 2:
        raise EmptyInput("winsorize needs at least 2 samples")
    lo, hi = np.percentile(x, [lo_pct, hi_pct])
    return np.clip(x, lo, hi)


def minmax_normalize(x) -> np.ndarray:
    """Scale to [0, 1]; a constant input maps to all zeros."""
    x = np.asarray(x, dtype=float)
    if len(x) == 0:
        raise EmptyInput("cannot normalize an empty signal")
    lo = x.min()
    span = x.max() - lo
    if span == 0.0:
        return np.zeros_like(x)
    return (x - lo) / span


# ---------------------------------------------------------------------------
# Haar wavelet denoising


def _haar_forward(x):
    """One Haar analysis step; odd-length inputs are extended symmetrically."""
    if len(x) % 2:
        x = np.concatenate([x, x[-1:]])
    pairs = x.reshape(-1, 2)
    approx = (pairs[:, 0] + pairs[:, 1]) / np.sqrt(2.0)
    detail = (pairs[:, 0] - pairs[:, 1]) / np.sqrt(2.0)
    return approx, detail


def _haar_inverse(approx, detail):
    even = (approx + detail) / np.sqrt(2.0)
    odd = (approx - detail) / np.sqrt(2.0)
    out = np.empty(2 * len(approx))
    out[0::2] = even
    out[1::2] = odd
    return out


def wavelet_denoise(x, levels: int = 3) -> np.ndarray:
    """Multilevel Haar decomposition with soft universal thresholding.

    The noise scale is estimated from the finest detail level as
    median(|d1|)/0.6745 and the same universal threshold sigma*sqrt(2 ln N)
    is applied to every level.
    """
    x = np.asarray(x, dtype=float)
    n = len(x)
    if n < 2**levels:
        raise TooFewSamples(f"need at least {2**levels} samples for {levels} levels")
    approx = x
    details = []
    lengths = []
    for _ in range(levels):
        lengths.append(len(approx))
        approx, detail = _haar_forward(approx)
        details.append(detail)

    sigma = np.median(np.abs(details[0])) / 0.6745
    thr = sigma * np.sqrt(2.0 * np.log(n))
    details = [np.sign(d) * np.maximum(np.abs(d) - thr, 0.0) for d in details]

    for detail, length in zip(reversed(details), reversed(lengths)):
        approx = _haar_inverse(approx, detail)[:length]
    return approx


# ---------------------------------------------------------------------------
# Spectral estimation


@dataclass(frozen=True)
class PowerSpectrum:
    """One-sided power spectral density on an ascending frequency grid."""

    freqs_hz: np.ndarray
    psd: np.ndarray

    def __post_init__(self):
        if len(self.freqs_hz) != len(self.psd):
            raise ValueError("freqs and psd lengths differ")
        if np.any(self.psd < 0) or (len(self.freqs_hz) and self.freqs_hz[0] < 0):
            raise ValueError("psd must be nonnegative on a nonnegative grid")

    def band_power(self, lo_hz: float, hi_hz: float) -> float:
        """Trapezoid-integrated power in [lo_hz, hi_hz]."""
        mask = (self.freqs_hz >= lo_hz) & (self.freqs_hz <= hi_hz)
        if mask.sum() < 2:
            return 0.0
        return float(np.trapezoid(self.psd[mask], self.freqs_hz[mask]))


def welch_psd(x, fs_hz: float, segment_s: float, overlap_frac: float = 0.5) -> PowerSpectrum:
    """Hann-windowed averaged periodogram with density normalization."""
    x = np.asarray(x, dtype=float)
    nperseg = int(round(segment_s * fs_hz))
    if nperseg > len(x):
        raise SegmentTooLong(f"segment of {nperseg} samples exceeds signal length {len(x)}")
    noverlap = int(nperseg * overlap_frac)
    freqs, psd = sps.welch(
        x, fs=fs_hz, window="hann", nperseg=nperseg, noverlap=noverlap,
        detrend=False, scaling="density",
    )
    return PowerSpectrum(freqs_hz=freqs, psd=np.maximum(psd, 0.0))


# ---------------------------------------------------------------------------
# Descriptive statistics (population conventions throughout)


def _checked(x, min_len=2, name="input"):
    x = np.asarray(x, dtype=float)
    if len(x) < min_len:
        raise TooFewSamples(f"{name} needs at least {min_len} samples, got {len(x)}")
    return x


def mean(x) -> float:
    return float(np.mean(_checked(x)))


def std(x) -> float:
    """Population standard deviation (ddof=0)."""
    return float(np.std(_checked(x)))


def value_range(x) -> float:
    x = _checked(x)
    return float(x.max() - x.min())


def slope(x, fs_hz: float) -> float:
    """Least-squares line slope in units per second."""
    x = _checked(x)
    t = np.arange(len(x)) / fs_hz
    t_c = t - t.mean()
    return float(np.dot(t_c, x - x.mean()) / np.dot(t_c, t_c))


def pearson_corr(x, y) -> float:
    x = _checked(x)
    y = _checked(y)
    if len(x) != len(y):
        raise ValueError("series lengths differ")
    xc = x - x.mean()
    yc = y - y.mean()
    denom = np.sqrt(np.dot(xc, xc) * np.dot(yc, yc))
    if denom == 0.0:
        raise ZeroVariance("correlation undefined for a constant series")
    return float(np.dot(xc, yc) / denom)


def skewness(x) -> float:
    """Bias-uncorrected moment coefficient of skewness; 0 for constant input."""
    x = _checked(x)
    xc = x - x.mean()
    m2 = np.mean(xc**2)
    if m2 == 0.0:
        return 0.0
    return float(np.mean(xc**3) / m2**1.5)


def kurtosis(x) -> float:
    """Fisher (excess) kurtosis, bias-uncorrected; 0 for constant input."""
    x = _checked(x, min_len=4, name="kurtosis")
    xc = x - x.mean()
    m2 = np.mean(xc**2)
    if m2 == 0.0:
        return 0.0
    return float(np.mean(xc**4) / m2**2 - 3.0)
