"""Shared helpers: build small native-format subject pickles in-test."""

import pickle

import numpy as np
import pytest

from wesad_converter.convert import LABEL_RATE_HZ, WRIST_RATES_HZ


def make_native_dict(labels, subject="S2", seed=0):
    """Native in-memory structure for a given 700 Hz label stream.

    Channel lengths follow the label-stream duration so every channel
    spans the same wall-clock time, as in real recordings.  Channels are
    stored as (n, 1) column vectors, matching the native layout.
    """
    labels = np.asarray(labels, dtype=int)
    duration_s = labels.size / LABEL_RATE_HZ
    rng = np.random.default_rng(seed)
    wrist = {}
    for name, rate in WRIST_RATES_HZ.items():
        n = int(round(duration_s * rate))
        wrist[name] = rng.uniform(0.5, 5.0, size=(n, 1))
    return {
        "subject": subject,
        "signal": {"wrist": wrist},
        "label": labels,
        "questionnaire": {"ignored": True},
    }


def write_native(path, native):
    with open(path, "wb") as fh:
        pickle.dump(native, fh)
    return path


def seconds_of(code_and_seconds):
    """Expand [(code, seconds), ...] into a 700 Hz label stream."""
    chunks = [
        np.full(int(round(sec * LABEL_RATE_HZ)), code, dtype=int)
        for code, sec in code_and_seconds
    ]
    return np.concatenate(chunks)


@pytest.fixture
def native_file(tmp_path):
    """A well-formed native file: 2 s idle, 4 s baseline, 3 s stress, 1 s idle."""
    labels = seconds_of([(0, 2.0), (1, 4.0), (2, 3.0), (0, 1.0)])
    native = make_native_dict(labels, subject="S7", seed=3)
    return write_native(tmp_path / "S7.pkl", native)
