"""stresskit: subject-independent stress detection from wearable signals.

Raw EDA/BVP/skin-temperature recordings go through signal-specific
cleaning, sliding-window feature extraction (36 + 30 + 6 = 72 features),
and either a multi-branch neural network or a Random Forest baseline,
evaluated leave-one-subject-out.
"""

__version__ = "0.1.0"

from . import bvp, data_model, dsp, eda, errors, evaluate, forest, nn, st, synth, windows

__all__ = [
    "__version__",
    "bvp",
    "data_model",
    "dsp",
    "eda",
    "errors",
    "evaluate",
    "forest",
    "nn",
    "st",
    "synth",
    "windows",
]
