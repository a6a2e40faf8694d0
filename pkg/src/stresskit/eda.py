"""EDA window preprocessing, tonic/phasic decomposition, SCR events, and the
36-dimensional feature vector.

The convex decomposition models the phasic component as a nonnegative sparse
driver convolved with a Bateman kernel and the tonic component as a cubic
B-spline plus a linear trend, and solves the resulting QP with an ADMM
(operator-splitting) iteration.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import cho_factor, cho_solve, toeplitz

from . import dsp
from .errors import SolverNotConverged, TooShort, DspError

_MIN_DECOMPOSE_SAMPLES = 40


@dataclass(frozen=True)
class EdaConfig:
    """Knobs of the EDA pipeline; defaults follow the published decomposition
    parameters (tau0=2 s, tau1=0.7 s, 10 s knots, alpha=8e-4, gamma=1e-2)."""

    mode: str = "cvxeda"  # cvxeda | simple
    wavelet_levels: int = 3
    lowpass_hz: float = 0.5
    lowpass_order: int = 4
    normalize_per: str = "window"  # window | subject
    tau0_s: float = 2.0
    tau1_s: float = 0.7
    knot_spacing_s: float = 10.0
    alpha: float = 8e-4
    gamma: float = 1e-2
    tonic_lowpass_hz: float = 0.05  # simple mode
    solver_rho: float = 0.1
    solver_relax: float = 1.6
    solver_tol: float = 1e-6
    solver_max_iter: int = 20000
    min_amplitude_frac: float = 0.1


@dataclass(frozen=True)
class EdaDecomposition:
    tonic: np.ndarray
    phasic: np.ndarray
    driver: np.ndarray  # empty in simple mode
    residual: np.ndarray


@dataclass(frozen=True)
class ScrEvents:
    onsets: np.ndarray  # sample indices
    peaks: np.ndarray
    amplitudes: np.ndarray
    durations: np.ndarray  # seconds
    ends: np.ndarray  # end-of-span indices used for area integration

    def __post_init__(self):
        n = len(self.onsets)
        if not (len(self.peaks) == len(self.amplitudes) == len(self.durations) == n):
            raise ValueError("event lists must have equal length")

    def __len__(self):
        return len(self.onsets)


def preprocess_eda(window, fs_hz: float, cfg: EdaConfig = EdaConfig(), bounds=None) -> np.ndarray:
    """Denoise, low-pass, and min-max normalize one raw EDA window.

    ``bounds`` optionally supplies (lo, hi) normalization bounds so callers
    can normalize against whole-subject statistics instead of the window.
    """
    x = dsp.wavelet_denoise(window, levels=cfg.wavelet_levels)
    lp = dsp.design_butterworth(cfg.lowpass_order, cfg.lowpass_hz, fs_hz, "lowpass")
    x = dsp.filtfilt(lp, x)
    if bounds is None:
        return dsp.minmax_normalize(x)
    lo, hi = bounds
    if hi <= lo:
        return np.zeros_like(x)
    return np.clip((x - lo) / (hi - lo), 0.0, 1.0)


def clean_bounds(full_signal, fs_hz: float, cfg: EdaConfig = EdaConfig()):
    """(min, max) of the cleaned full-record signal, for per-subject scaling."""
    x = dsp.wavelet_denoise(full_signal, levels=cfg.wavelet_levels)
    lp = dsp.design_butterworth(cfg.lowpass_order, cfg.lowpass_hz, fs_hz, "lowpass")
    x = dsp.filtfilt(lp, x)
    return float(x.min()), float(x.max())


# ---------------------------------------------------------------------------
# Convex decomposition


def bateman_kernel(fs_hz: float, tau0_s: float, tau1_s: float, max_len: int) -> np.ndarray:
    """Biexponential impulse response exp(-t/tau0) - exp(-t/tau1), truncated."""
    n = min(max_len, int(np.ceil(8.0 * tau0_s * fs_hz)))
    t = np.arange(n) / fs_hz
    return np.exp(-t / tau0_s) - np.exp(-t / tau1_s)


def _cubic_bspline(u):
    u = np.abs(u)
    out = np.zeros_like(u)
    inner = u <= 1.0
    outer = (u > 1.0) & (u <= 2.0)
    out[inner] = (4.0 - 6.0 * u[inner] ** 2 + 3.0 * u[inner] ** 3) / 6.0
    out[outer] = (2.0 - u[outer]) ** 3 / 6.0
    return out


def _spline_basis(n: int, fs_hz: float, knot_spacing_s: float) -> np.ndarray:
    t = np.arange(n) / fs_hz
    duration = (n - 1) / fs_hz
    centers = np.arange(-knot_spacing_s, duration + 2 * knot_spacing_s, knot_spacing_s)
    cols = [_cubic_bspline((t - c) / knot_spacing_s) for c in centers]
    return np.column_stack(cols)


class _QpWorkspace:
    """Per-(length, rate, params) matrices and the cached Cholesky factor."""

    def __init__(self, n: int, fs_hz: float, cfg: EdaConfig):
        kernel = bateman_kernel(fs_hz, cfg.tau0_s, cfg.tau1_s, n)
        col = np.zeros(n)
        col[: len(kernel)] = kernel
        self.conv = toeplitz(col, np.zeros(n))  # lower-triangular convolution
        self.spline = _spline_basis(n, fs_hz, cfg.knot_spacing_s)
        t_norm = np.linspace(0.0, 1.0, n)
        self.trend = np.column_stack([np.ones(n), t_norm])
        self.n_driver = n
        self.n_spline = self.spline.shape[1]
        self.design = np.hstack([self.conv, self.spline, self.trend])
        dim = self.design.shape[1]
        p = self.design.T @ self.design
        sl = slice(n, n + self.n_spline)
        p[sl, sl] += 2.0 * cfg.gamma * np.eye(self.n_spline)
        self.factor = cho_factor(p + cfg.solver_rho * np.eye(dim))
        self.dim = dim


_workspaces: dict[tuple, _QpWorkspace] = {}


def _workspace(n: int, fs_hz: float, cfg: EdaConfig) -> _QpWorkspace:
    key = (n, fs_hz, cfg.tau0_s, cfg.tau1_s, cfg.knot_spacing_s, cfg.gamma, cfg.solver_rho)
    ws = _workspaces.get(key)
    if ws is None:
        ws = _QpWorkspace(n, fs_hz, cfg)
        _workspaces[key] = ws
    return ws


def _solve_qp(x, fs_hz: float, cfg: EdaConfig):
    """ADMM on min 1/2||Gz - x||^2 + alpha*1'd + gamma||l||^2 s.t. d >= 0."""
    n = len(x)
    ws = _workspace(n, fs_hz, cfg)
    q = -(ws.design.T @ x)
    q[:n] += cfg.alpha
    rho, relax = cfg.solver_rho, cfg.solver_relax
    u = np.zeros(ws.dim)
    w = np.zeros(ws.dim)
    residual = np.inf
    for it in range(1, cfg.solver_max_iter + 1):
        z = cho_solve(ws.factor, rho * (u - w) - q)
        z_rel = relax * z + (1.0 - relax) * u
        u = z_rel + w
        u[:n] = np.maximum(u[:n], 0.0)
        w += z_rel - u
        residual = np.max(np.abs(z - u))
        if residual < cfg.solver_tol:
            return u, ws, it
    raise SolverNotConverged(cfg.solver_max_iter, residual)


def decompose_eda(x, fs_hz: float, cfg: EdaConfig = EdaConfig()) -> EdaDecomposition:
    """Split an EDA signal into tonic (SCL) and phasic (SCR) components."""
    x = np.asarray(x, dtype=float)
    if len(x) < _MIN_DECOMPOSE_SAMPLES:
        raise TooShort(f"need at least {_MIN_DECOMPOSE_SAMPLES} samples, got {len(x)}")
    if cfg.mode == "simple":
        lp = dsp.design_butterworth(2, cfg.tonic_lowpass_hz, fs_hz, "lowpass")
        tonic = dsp.filtfilt(lp, x)
        phasic = x - tonic
        return EdaDecomposition(
            tonic=tonic, phasic=phasic, driver=np.empty(0), residual=np.zeros_like(x)
        )
    if cfg.mode != "cvxeda":
        raise ValueError(f"unknown decomposition mode {cfg.mode!r}")
    u, ws, _ = _solve_qp(x, fs_hz, cfg)
    n = len(x)
    driver = u[:n]
    phasic = ws.conv @ driver
    tonic = ws.spline @ u[n : n + ws.n_spline] + ws.trend @ u[n + ws.n_spline :]
    residual = x - tonic - phasic
    return EdaDecomposition(tonic=tonic, phasic=phasic, driver=driver, residual=residual)


# ---------------------------------------------------------------------------
# SCR event detection


def detect_scr_events(phasic, fs_hz: float, min_amplitude_frac: float = 0.1) -> ScrEvents:
    """Threshold-crossing SCR detection on the phasic component.

    Onset = upward crossing of min_amplitude_frac * max(phasic); peak = the
    maximum before the signal falls back below the threshold; duration runs
    from onset to half-recovery or the next onset, whichever comes first.
    """
    phasic = np.asarray(phasic, dtype=float)
    empty = ScrEvents(
        onsets=np.empty(0, dtype=int),
        peaks=np.empty(0, dtype=int),
        amplitudes=np.empty(0),
        durations=np.empty(0),
        ends=np.empty(0, dtype=int),
    )
    if len(phasic) < 2 or phasic.max() <= 0:
        return empty
    thr = min_amplitude_frac * phasic.max()
    above = phasic >= thr
    rises = np.flatnonzero(~above[:-1] & above[1:]) + 1
    if above[0]:
        rises = np.concatenate([[0], rises])
    if len(rises) == 0:
        return empty

    onsets, peaks, amplitudes, durations, ends = [], [], [], [], []
    n = len(phasic)
    for k, onset in enumerate(rises):
        next_onset = rises[k + 1] if k + 1 < len(rises) else n
        below = np.flatnonzero(~above[onset:next_onset])
        segment_end = onset + below[0] if len(below) else next_onset
        if segment_end <= onset + 1:
            continue
        peak = onset + int(np.argmax(phasic[onset:segment_end]))
        if peak <= onset:
            continue
        amplitude = phasic[peak] - phasic[onset]
        half = phasic[onset] + amplitude / 2.0
        rec = np.flatnonzero(phasic[peak:next_onset] <= half)
        end = peak + rec[0] if len(rec) else next_onset - 1
        onsets.append(onset)
        peaks.append(peak)
        amplitudes.append(amplitude)
        durations.append((end - onset) / fs_hz)
        ends.append(end)
    return ScrEvents(
        onsets=np.array(onsets, dtype=int),
        peaks=np.array(peaks, dtype=int),
        amplitudes=np.array(amplitudes),
        durations=np.array(durations),
        ends=np.array(ends, dtype=int),
    )


# ---------------------------------------------------------------------------
# Feature extraction


def arc_length(r) -> float:
    """Sum of sqrt(1 + (r[n]-r[n-1])^2) over successive samples."""
    r = np.asarray(r, dtype=float)
    return float(np.sum(np.sqrt(1.0 + np.diff(r) ** 2)))


def integral_abs(r) -> float:
    return float(np.sum(np.abs(r)))


def average_power(r) -> float:
    r = np.asarray(r, dtype=float)
    return float(np.mean(r**2))


def root_mean_square(r) -> float:
    return float(np.sqrt(average_power(r)))


EDA_FEATURE_NAMES = (
    "eda_mean", "eda_std", "eda_min", "eda_max",
    "eda_slope",
    "eda_range", "scr_range",
    "scl_mean", "scl_std",
    "scl_time_corr",
    "scr_peak_count",
    "scr_amplitude_sum", "scr_duration_sum",
    "scr_auc",
    "scr_mean", "scr_std", "scr_max", "scr_min",
    "scr_d1_mean", "scr_d1_std", "scr_d2_mean", "scr_d2_std",
    "scr_peak_mean", "scr_peak_std", "scr_peak_max", "scr_peak_min",
    "scr_kurtosis", "scr_skewness",
    "scr_onset_mean", "scr_onset_std", "scr_onset_max", "scr_onset_min",
    "scr_alsc", "scr_insc", "scr_apsc", "scr_rmsc",
)


def _finite_or_zero(fn, *args) -> float:
    """Degenerate-window convention: non-computable statistics become 0."""
    try:
        v = fn(*args)
    except DspError:
        return 0.0
    return float(v) if np.isfinite(v) else 0.0


def extract_eda_features(window, fs_hz: float, cfg: EdaConfig = EdaConfig(), bounds=None) -> np.ndarray:
    """The 36 EDA features of one raw window, in the fixed dictionary order."""
    x = preprocess_eda(window, fs_hz, cfg, bounds=bounds)
    decomp = decompose_eda(x, fs_hz, cfg)
    scl, scr = decomp.tonic, decomp.phasic
    events = detect_scr_events(scr, fs_hz, cfg.min_amplitude_frac)

    d1 = np.gradient(scr, 1.0 / fs_hz)
    d2 = np.gradient(d1, 1.0 / fs_hz)

    auc = sum(
        float(np.trapezoid(scr[a : b + 1], dx=1.0 / fs_hz))
        for a, b in zip(events.onsets, events.ends)
    )

    def stats4(vals):
        # mean, std, max, min; all 0 when there are no events
        if len(vals) == 0:
            return [0.0, 0.0, 0.0, 0.0]
        return [float(np.mean(vals)), float(np.std(vals)), float(np.max(vals)), float(np.min(vals))]

    feats = [
        float(np.mean(x)), float(np.std(x)), float(np.min(x)), float(np.max(x)),
        _finite_or_zero(dsp.slope, x, fs_hz),
        float(np.ptp(x)), float(np.ptp(scr)),
        float(np.mean(scl)), float(np.std(scl)),
        _finite_or_zero(dsp.pearson_corr, scl, np.arange(len(scl)) / fs_hz),
        float(len(events)),
        float(np.sum(events.amplitudes)), float(np.sum(events.durations)),
        float(auc),
        float(np.mean(scr)), float(np.std(scr)), float(np.max(scr)), float(np.min(scr)),
        float(np.mean(d1)), float(np.std(d1)), float(np.mean(d2)), float(np.std(d2)),
        *stats4(scr[events.peaks]),
        _finite_or_zero(dsp.kurtosis, scr), _finite_or_zero(dsp.skewness, scr),
        *stats4(scr[events.onsets]),
        arc_length(scr), integral_abs(scr), average_power(scr), root_mean_square(scr),
    ]
    return np.array(feats)
