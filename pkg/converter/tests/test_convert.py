"""Tests for native-file loading, run compression, and conversion."""

import os
import warnings
from pathlib import Path

import numpy as np
import pytest

from conftest import make_native_dict, seconds_of, write_native
from wesad_converter.code_map import DEFAULT_CODE_MAP
from wesad_converter.convert import (
    LABEL_RATE_HZ,
    LabelRun,
    convert_subject,
    label_runs,
    load_native,
    runs_to_intervals,
)
from wesad_converter.errors import CorruptFile, UnknownCodeWarning

try:
    from stresskit.data_model import load_subject

    HAVE_STRESSKIT = True
except ImportError:
    HAVE_STRESSKIT = False


def read_bytes(directory):
    return {p.name: p.read_bytes() for p in sorted(Path(directory).iterdir())}


class TestLoadNative:
    def test_fields_round_trip(self, tmp_path):
        labels = seconds_of([(1, 2.0), (2, 2.0)])
        native = make_native_dict(labels, subject="S11", seed=5)
        path = write_native(tmp_path / "S11.pkl", native)
        loaded = load_native(path)
        assert loaded["subject_id"] == "S11"
        assert np.array_equal(loaded["labels"], labels)
        # column vectors come back as flat float arrays
        for name in ("EDA", "BVP", "TEMP"):
            channel = loaded["channels"][name]
            assert channel.ndim == 1
            assert np.array_equal(channel, native["signal"]["wrist"][name].ravel())

    def test_missing_file_raises_oserror(self, tmp_path):
        with pytest.raises(OSError):
            load_native(tmp_path / "absent.pkl")

    def test_garbage_bytes(self, tmp_path):
        path = tmp_path / "bad.pkl"
        path.write_bytes(b"this is not a pickle at all")
        with pytest.raises(CorruptFile, match="cannot unpickle"):
            load_native(path)

    def test_missing_wrist_key(self, tmp_path):
        native = make_native_dict(seconds_of([(1, 2.0)]))
        del native["signal"]["wrist"]["BVP"]
        path = write_native(tmp_path / "bad.pkl", native)
        with pytest.raises(CorruptFile, match="unexpected native structure"):
            load_native(path)

    def test_empty_label_stream(self, tmp_path):
        native = make_native_dict(seconds_of([(1, 2.0)]))
        native["label"] = np.array([], dtype=int)
        path = write_native(tmp_path / "bad.pkl", native)
        with pytest.raises(CorruptFile, match="empty"):
            load_native(path)


class TestLabelRuns:
    def test_hand_example(self):
        runs = label_runs(np.array([0, 0, 1, 1, 1, 2]))
        assert runs == [
            LabelRun(0, 0, 2),
            LabelRun(1, 2, 5),
            LabelRun(2, 5, 6),
        ]

    def test_constant_stream_is_one_run(self):
        runs = label_runs(np.full(500, 3))
        assert runs == [LabelRun(3, 0, 500)]

    def test_alternating_stream(self):
        labels = np.tile([0, 1], 10)
        runs = label_runs(labels)
        assert len(runs) == 20
        assert all(r.end_idx - r.start_idx == 1 for r in runs)
        # runs partition the stream in order
        assert runs[0].start_idx == 0
        assert runs[-1].end_idx == labels.size
        for prev, cur in zip(runs, runs[1:]):
            assert cur.start_idx == prev.end_idx


class TestRunsToIntervals:
    def test_exact_boundaries(self):
        # 1400 samples at 700 Hz is exactly 2 s, etc.
        runs = [LabelRun(1, 0, 1400), LabelRun(2, 1400, 3500)]
        intervals, dropped, unknown = runs_to_intervals(runs, DEFAULT_CODE_MAP)
        assert dropped == 0 and unknown == []
        assert [(iv.start_s, iv.end_s, iv.condition) for iv in intervals] == [
            (0.0, 2.0, "baseline"),
            (2.0, 5.0, "stress"),
        ]

    def test_sub_second_run_dropped_not_merged(self):
        # 0.5 s glitch of stress inside baseline: span stays unlabeled,
        # the flanking baseline intervals keep their own boundaries.
        runs = [
            LabelRun(1, 0, 1400),
            LabelRun(2, 1400, 1750),
            LabelRun(1, 1750, 3500),
        ]
        intervals, dropped, unknown = runs_to_intervals(runs, DEFAULT_CODE_MAP)
        assert dropped == 1 and unknown == []
        assert [(iv.start_s, iv.end_s, iv.condition) for iv in intervals] == [
            (0.0, 2.0, "baseline"),
            (2.5, 5.0, "baseline"),
        ]

    def test_unknown_code_maps_to_other_with_warning(self):
        runs = [LabelRun(42, 0, 1400), LabelRun(42, 2100, 3500)]
        with pytest.warns(UnknownCodeWarning, match="label code 42") as record:
            intervals, _, unknown = runs_to_intervals(runs, DEFAULT_CODE_MAP)
        assert unknown == [42]
        assert [iv.condition for iv in intervals] == ["other", "other"]
        # warned once per distinct code, not once per run
        assert len(record) == 1

    def test_duration_conservation(self):
        rng = np.random.default_rng(17)
        codes = rng.integers(0, 8, size=40)
        lengths = rng.integers(100, 3000, size=40)
        edges = np.concatenate([[0], np.cumsum(lengths)])
        runs = [
            LabelRun(int(c), int(s), int(e))
            for c, s, e in zip(codes, edges[:-1], edges[1:])
        ]
        intervals, dropped, _ = runs_to_intervals(runs, DEFAULT_CODE_MAP)
        stream_s = edges[-1] / LABEL_RATE_HZ
        labeled_s = sum(iv.end_s - iv.start_s for iv in intervals)
        dropped_s = sum(
            (r.end_idx - r.start_idx) / LABEL_RATE_HZ
            for r in runs
            if (r.end_idx - r.start_idx) / LABEL_RATE_HZ < 1.0
        )
        assert dropped == sum(
            1 for r in runs if (r.end_idx - r.start_idx) / LABEL_RATE_HZ < 1.0
        )
        assert labeled_s + dropped_s == pytest.approx(stream_s, abs=1e-9)


class TestConvertSubject:
    def test_writes_expected_files(self, native_file, tmp_path):
        out = tmp_path / "out"
        report = convert_subject(native_file, out)
        assert sorted(p.name for p in out.iterdir()) == [
            "bvp.csv",
            "eda.csv",
            "labels.csv",
            "temp.csv",
        ]
        assert report.subject_id == "S7"
        assert report.out_dir == out

    def test_report_accounting(self, native_file, tmp_path):
        report = convert_subject(native_file, tmp_path / "out")
        # fixture: 2 s idle, 4 s baseline, 3 s stress, 1 s idle -> 4 runs kept
        assert report.n_runs == 4
        assert report.n_dropped_runs == 0
        assert report.unknown_codes == []
        assert report.label_stream_s == pytest.approx(10.0)
        assert report.labeled_s == pytest.approx(10.0)
        assert [
            (iv.start_s, iv.end_s, iv.condition) for iv in report.intervals
        ] == [
            (0.0, 2.0, "other"),
            (2.0, 6.0, "baseline"),
            (6.0, 9.0, "stress"),
            (9.0, 10.0, "other"),
        ]

    def test_labels_file_content(self, native_file, tmp_path):
        convert_subject(native_file, tmp_path / "out")
        text = (tmp_path / "out" / "labels.csv").read_text()
        assert text == (
            "start_s,end_s,condition\n"
            "0,2,other\n"
            "2,6,baseline\n"
            "6,9,stress\n"
            "9,10,other\n"
        )

    def test_signal_headers_and_lengths(self, native_file, tmp_path):
        convert_subject(native_file, tmp_path / "out")
        expectations = {"eda.csv": (4, 40), "bvp.csv": (64, 640), "temp.csv": (4, 40)}
        for name, (rate, n) in expectations.items():
            lines = (tmp_path / "out" / name).read_text().splitlines()
            assert lines[0] == f"# sampling_rate_hz={rate}"
            assert len(lines) - 1 == n

    def test_byte_deterministic(self, native_file, tmp_path):
        convert_subject(native_file, tmp_path / "a")
        convert_subject(native_file, tmp_path / "b")
        assert read_bytes(tmp_path / "a") == read_bytes(tmp_path / "b")

    def test_all_zero_stream_is_single_other_interval(self, tmp_path):
        native = make_native_dict(np.zeros(7000, dtype=int), subject="S1")
        path = write_native(tmp_path / "S1.pkl", native)
        report = convert_subject(path, tmp_path / "out")
        assert [
            (iv.start_s, iv.end_s, iv.condition) for iv in report.intervals
        ] == [(0.0, 10.0, "other")]

    def test_custom_code_map(self, native_file, tmp_path):
        report = convert_subject(
            native_file, tmp_path / "out", code_map={0: "other", 1: "amusement", 2: "stress"}
        )
        assert [iv.condition for iv in report.intervals] == [
            "other",
            "amusement",
            "stress",
            "other",
        ]


@pytest.mark.skipif(not HAVE_STRESSKIT, reason="stresskit not importable")
class TestDownstreamRoundTrip:
    """Converted directories must load cleanly in the analysis toolkit."""

    def test_load_subject_round_trip(self, native_file, tmp_path):
        out = tmp_path / "S7"
        report = convert_subject(native_file, out)
        record = load_subject(out)
        assert record.subject_id == "S7"
        assert record.eda.sampling_rate_hz == 4.0
        assert record.bvp.sampling_rate_hz == 64.0
        assert record.st.sampling_rate_hz == 4.0
        assert record.is_trainable  # baseline and stress both present
        assert [
            (iv.start_s, iv.end_s, iv.condition.value) for iv in record.intervals
        ] == [(iv.start_s, iv.end_s, iv.condition) for iv in report.intervals]

    def test_samples_survive_text_round_trip(self, native_file, tmp_path):
        out = tmp_path / "S7"
        convert_subject(native_file, out)
        native = load_native(native_file)
        record = load_subject(out)
        # %.9g keeps 9 significant digits
        for written, channel in [
            (record.eda, "EDA"),
            (record.bvp, "BVP"),
            (record.st, "TEMP"),
        ]:
            np.testing.assert_allclose(
                written.samples, native["channels"][channel], rtol=1e-8
            )

    def test_sub_second_gap_still_loads(self, tmp_path):
        labels = seconds_of([(1, 3.0), (2, 0.5), (1, 3.0), (2, 3.5)])
        path = write_native(tmp_path / "S3.pkl", make_native_dict(labels, subject="S3"))
        report = convert_subject(path, tmp_path / "S3")
        assert report.n_dropped_runs == 1
        record = load_subject(tmp_path / "S3")
        assert len(record.intervals) == len(report.intervals) == 3


@pytest.mark.skipif(
    not os.environ.get("STRESSKIT_WESAD_ROOT"),
    reason="STRESSKIT_WESAD_ROOT not set",
)
class TestRealRecording:
    """Sanity checks against one real native file, when available."""

    def test_first_subject_converts(self, tmp_path):
        root = Path(os.environ["STRESSKIT_WESAD_ROOT"])
        pkls = sorted(root.glob("S*/S*.pkl"))
        assert pkls, f"no native files under {root}"
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UnknownCodeWarning)
            report = convert_subject(pkls[0], tmp_path / "out")
        stress_s = sum(
            iv.end_s - iv.start_s
            for iv in report.intervals
            if iv.condition == "stress"
        )
        # protocol's stress block lasts roughly ten minutes
        assert 8 * 60 <= stress_s <= 12 * 60
        assert report.label_stream_s > 30 * 60
