"""Tests for the command-line interface.

Exit-code contract: 0 success, 2 ingestion problems, 3 training failures,
64 usage errors.  Settings resolve flag > config file > STRESSKIT_SEED
(seed only) > defaults.  The end-to-end flow (synth, extract, train,
evaluate, report) runs against a small deterministic dataset built once
per module.
"""

import json

import numpy as np
import pytest

from stresskit import forest, windows
from stresskit.cli import main
from stresskit.nn import load_checkpoint

# dataset small enough that whole-flow tests stay fast, big enough that
# 30 s windows at 15 s shift leave each subject with both classes
DATASET_ARGS = ["--n-subjects", "3", "--duration-s", "240", "--seed", "5"]
WINDOW_ARGS = ["--window-width-s", "30", "--window-shift-s", "15"]


@pytest.fixture(scope="module")
def flow(tmp_path_factory):
    """Dataset plus populated feature cache shared by the flow tests."""
    root = tmp_path_factory.mktemp("flow")
    data = root / "data"
    cache = root / "cache"
    assert main(["synth", "--out", str(data)] + DATASET_ARGS) == 0
    assert (
        main(["extract", "--dataset", str(data), "--cache", str(cache)] + WINDOW_ARGS)
        == 0
    )
    return {"root": root, "data": data, "cache": cache}


class TestUsageErrors:
    def test_help_exits_zero(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--help"])
        assert exc.value.code == 0
        assert "synth" in capsys.readouterr().out

    def test_version_exits_zero(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0

    def test_unknown_flag_exits_64(self):
        with pytest.raises(SystemExit) as exc:
            main(["synth", "--frobnicate"])
        assert exc.value.code == 64

    def test_missing_subcommand_exits_64(self):
        with pytest.raises(SystemExit) as exc:
            main([])
        assert exc.value.code == 64

    def test_missing_required_setting_exits_64(self, capsys):
        assert main(["synth"]) == 64  # no --out anywhere
        assert "output_dir" in capsys.readouterr().err

    def test_unknown_config_key_exits_64(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("n_subjects = 2\nfrobnicate = 1\n")
        assert main(["synth", "--out", str(tmp_path / "d"), "--config", str(cfg)]) == 64
        assert "frobnicate" in capsys.readouterr().err

    def test_malformed_config_line_exits_64(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("just some words\n")
        assert main(["synth", "--out", str(tmp_path / "d"), "--config", str(cfg)]) == 64
        assert "key=value" in capsys.readouterr().err

    def test_bad_config_value_exits_64(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("n_subjects = lots\n")
        assert main(["synth", "--out", str(tmp_path / "d"), "--config", str(cfg)]) == 64

    def test_bad_env_seed_exits_64(self, tmp_path, monkeypatch):
        monkeypatch.setenv("STRESSKIT_SEED", "not-a-number")
        assert main(["synth", "--out", str(tmp_path / "d"), "--n-subjects", "1",
                     "--duration-s", "60"]) == 64


class TestIngestionErrors:
    def test_extract_missing_dataset_exits_2(self, tmp_path, capsys):
        rc = main(["extract", "--dataset", str(tmp_path / "nope"),
                   "--cache", str(tmp_path / "cache")])
        assert rc == 2
        assert "ingestion error" in capsys.readouterr().err

    def test_extract_empty_dataset_exits_2(self, tmp_path):
        (tmp_path / "empty").mkdir()
        rc = main(["extract", "--dataset", str(tmp_path / "empty"),
                   "--cache", str(tmp_path / "cache")])
        assert rc == 2

    def test_train_missing_cache_exits_2(self, tmp_path, capsys):
        rc = main(["train", "--cache", str(tmp_path / "nope"), "--model", "rf"])
        assert rc == 2
        assert "run extract first" in capsys.readouterr().err

    def test_evaluate_missing_cache_exits_2(self, tmp_path):
        assert main(["evaluate", "--cache", str(tmp_path / "nope")]) == 2


class TestTrainingErrors:
    def test_single_class_cache_exits_3(self, tmp_path, capsys):
        """A cache whose windows are all one class cannot train a classifier."""
        rng = np.random.default_rng(0)
        matrix = windows.FeatureMatrix(
            features=rng.normal(size=(20, 72)),
            labels=np.ones(20, dtype=int),
            subjects=np.array(["s1"] * 10 + ["s2"] * 10, dtype=object),
            starts=np.tile(np.arange(10.0), 2),
        )
        cache = tmp_path / "cache"
        cache.mkdir()
        windows.save_matrix(matrix, cache / "features.csv")
        rc = main(["train", "--cache", str(cache), "--model", "rf",
                   "--n-trees", "5"])
        assert rc == 3
        assert "training error" in capsys.readouterr().err


class TestSeedResolution:
    def _synth_bytes(self, out, extra_args, monkeypatch, env_seed=None):
        if env_seed is None:
            monkeypatch.delenv("STRESSKIT_SEED", raising=False)
        else:
            monkeypatch.setenv("STRESSKIT_SEED", str(env_seed))
        assert main(["synth", "--out", str(out), "--n-subjects", "1",
                     "--duration-s", "60"] + extra_args) == 0
        return (out / "synth01" / "eda.csv").read_bytes()

    def test_env_seed_matches_flag_seed(self, tmp_path, monkeypatch):
        by_flag = self._synth_bytes(tmp_path / "a", ["--seed", "7"], monkeypatch)
        by_env = self._synth_bytes(tmp_path / "b", [], monkeypatch, env_seed=7)
        other_env = self._synth_bytes(tmp_path / "c", [], monkeypatch, env_seed=8)
        assert by_flag == by_env
        assert by_flag != other_env

    def test_flag_overrides_env(self, tmp_path, monkeypatch):
        with_env = self._synth_bytes(
            tmp_path / "a", ["--seed", "7"], monkeypatch, env_seed=8
        )
        no_env = self._synth_bytes(tmp_path / "b", ["--seed", "7"], monkeypatch)
        assert with_env == no_env

    def test_config_seed_overrides_env_and_yields_to_flag(self, tmp_path, monkeypatch):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("seed = 7\n")
        by_cfg = self._synth_bytes(
            tmp_path / "a", ["--config", str(cfg)], monkeypatch, env_seed=8
        )
        by_flag7 = self._synth_bytes(tmp_path / "b", ["--seed", "7"], monkeypatch)
        assert by_cfg == by_flag7
        flag_beats_cfg = self._synth_bytes(
            tmp_path / "c", ["--config", str(cfg), "--seed", "9"], monkeypatch
        )
        by_flag9 = self._synth_bytes(tmp_path / "d", ["--seed", "9"], monkeypatch)
        assert flag_beats_cfg == by_flag9


class TestConfigFile:
    def test_config_supplies_settings(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(
            "# synthetic dataset settings\n"
            "output_dir = {out}\n"
            "n_subjects = 2\n"
            "duration_s = 60  # one minute per subject\n"
            "seed = 3\n".format(out=tmp_path / "data")
        )
        assert main(["synth", "--config", str(cfg)]) == 0
        names = sorted(p.name for p in (tmp_path / "data").iterdir())
        assert names == ["synth01", "synth02"]

    def test_flag_overrides_config(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(f"output_dir = {tmp_path / 'data'}\nn_subjects = 2\n"
                       "duration_s = 60\nseed = 3\n")
        assert main(["synth", "--config", str(cfg), "--n-subjects", "1"]) == 0
        names = sorted(p.name for p in (tmp_path / "data").iterdir())
        assert names == ["synth01"]


class TestFlow:
    def test_extract_writes_cache_artifacts(self, flow):
        cache = flow["cache"]
        for name in ("features.csv", "drops.csv", "feature_dictionary.json",
                     "meta.json"):
            assert (cache / name).exists()
        meta = json.loads((cache / "meta.json").read_text())
        assert meta["version"] == 1
        assert meta["n_rows"] == 24
        matrix = windows.load_matrix(cache / "features.csv")
        assert matrix.features.shape == (24, 72)
        for sid in ("synth01", "synth02", "synth03"):
            mask = matrix.subjects == sid
            assert np.sum(matrix.labels[mask] == 0) == 4
            assert np.sum(matrix.labels[mask] == 1) == 4

    def test_extract_cache_hit_is_a_noop(self, flow, capsys):
        cache = flow["cache"]
        before = (cache / "features.csv").read_bytes()
        rc = main(["extract", "--dataset", str(flow["data"]),
                   "--cache", str(cache)] + WINDOW_ARGS)
        assert rc == 0
        assert "cache up to date" in capsys.readouterr().out
        assert (cache / "features.csv").read_bytes() == before

    def test_extract_force_rebuilds_identically(self, flow, capsys):
        cache = flow["cache"]
        before = (cache / "features.csv").read_bytes()
        rc = main(["extract", "--dataset", str(flow["data"]), "--cache",
                   str(cache), "--force"] + WINDOW_ARGS)
        assert rc == 0
        assert "extracted" in capsys.readouterr().out
        assert (cache / "features.csv").read_bytes() == before

    def test_extract_invalidates_on_window_change(self, flow, tmp_path, capsys):
        cache = tmp_path / "cache2"
        rc = main(["extract", "--dataset", str(flow["data"]), "--cache",
                   str(cache)] + WINDOW_ARGS)
        assert rc == 0
        rc = main(["extract", "--dataset", str(flow["data"]), "--cache",
                   str(cache), "--window-width-s", "30",
                   "--window-shift-s", "30"])
        assert rc == 0
        out = capsys.readouterr().out
        assert "cache up to date" not in out.splitlines()[-1]
        meta = json.loads((cache / "meta.json").read_text())
        assert meta["window"]["shift_s"] == 30.0

    def test_extract_invalidates_on_dataset_change(self, flow, tmp_path, capsys):
        data = tmp_path / "data"
        cache = tmp_path / "cache"
        assert main(["synth", "--out", str(data), "--n-subjects", "1",
                     "--duration-s", "240", "--seed", "1"]) == 0
        assert main(["extract", "--dataset", str(data), "--cache",
                     str(cache)] + WINDOW_ARGS) == 0
        # regenerate the dataset with a different seed: content hash changes
        assert main(["synth", "--out", str(data), "--n-subjects", "1",
                     "--duration-s", "240", "--seed", "2"]) == 0
        rc = main(["extract", "--dataset", str(data), "--cache",
                   str(cache)] + WINDOW_ARGS)
        assert rc == 0
        assert "extracted" in capsys.readouterr().out

    def test_train_rf_writes_loadable_checkpoint(self, flow, capsys):
        cache = flow["cache"]
        rc = main(["train", "--cache", str(cache), "--model", "rf",
                   "--n-trees", "30", "--seed", "1"])
        assert rc == 0
        assert "OOB accuracy" in capsys.readouterr().out
        restored = forest.load_forest(cache / "rf_fusion.npz")
        assert restored.n_features == 72
        assert restored.config.n_trees == 30

    def test_train_nn_writes_checkpoint_and_history(self, flow, capsys):
        cache = flow["cache"]
        rc = main(["train", "--cache", str(cache), "--model", "nn",
                   "--max-epochs", "15", "--patience", "5",
                   "--batch-size", "8", "--seed", "1"])
        assert rc == 0
        assert "best val BA" in capsys.readouterr().out
        params, cfg = load_checkpoint(cache / "nn_fusion.npz")
        assert cfg.active == ("eda", "bvp", "st", "fusion")
        history = json.loads((cache / "nn_fusion_history.json").read_text())
        assert len(history) >= 1
        assert "val_balanced_accuracy" in history[0]

    def test_evaluate_writes_report(self, flow, capsys):
        cache = flow["cache"]
        rc = main(["evaluate", "--cache", str(cache), "--model", "rf",
                   "--n-trees", "30", "--seed", "1"])
        assert rc == 0
        assert "LOSO over 3 subjects" in capsys.readouterr().out
        payload = json.loads((cache / "report_rf_fusion.json").read_text())
        assert payload["aggregate"]["n_subjects"] == 3
        assert payload["aggregate"]["n_windows"] == 24
        assert payload["config"]["model"] == "rf"
        assert (cache / "report_rf_fusion_subjects.csv").exists()

    def test_evaluate_lane_selection(self, flow, tmp_path):
        cache = flow["cache"]
        out = tmp_path / "out"
        rc = main(["evaluate", "--cache", str(cache), "--out", str(out),
                   "--model", "rf", "--signals", "st", "--n-trees", "20",
                   "--seed", "2"])
        assert rc == 0
        assert (out / "report_rf_st.json").exists()

    def test_evaluate_deterministic_across_runs(self, flow, tmp_path):
        cache = flow["cache"]
        outs = []
        for name in ("r1", "r2"):
            out = tmp_path / name
            rc = main(["evaluate", "--cache", str(cache), "--out", str(out),
                       "--model", "rf", "--n-trees", "20", "--seed", "3"])
            assert rc == 0
            outs.append((out / "report_rf_fusion.json").read_bytes())
        assert outs[0] == outs[1]

    def test_report_prints_table(self, flow, capsys):
        cache = flow["cache"]
        assert main(["evaluate", "--cache", str(cache), "--model", "rf",
                     "--n-trees", "20", "--seed", "4"]) == 0
        capsys.readouterr()
        rc = main(["report", str(cache / "report_rf_fusion.json")])
        assert rc == 0
        out = capsys.readouterr().out
        for token in ("synth01", "synth02", "synth03", "std (pop.)", "bal.acc"):
            assert token in out
