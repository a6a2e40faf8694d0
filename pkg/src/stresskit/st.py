"""Skin-temperature features.

ST windows are used raw — no filtering or normalization — because the
discriminative content is the absolute level and its drift.
"""

from __future__ import annotations

import numpy as np

from . import dsp

ST_FEATURE_NAMES = (
    "st_mean", "st_std", "st_min", "st_max", "st_range", "st_slope",
)


def extract_st_features(window, fs_hz: float) -> np.ndarray:
    """The 6 ST features of one raw window, in fixed dictionary order."""
    x = np.asarray(window, dtype=float)
    return np.array([
        float(np.mean(x)),
        float(np.std(x)),
        float(np.min(x)),
        float(np.max(x)),
        float(np.ptp(x)),
        dsp.slope(x, fs_hz),
    ])
