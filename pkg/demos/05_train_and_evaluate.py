"""
Training and leave-one-subject-out evaluation
=============================================

Subject-independent evaluation holds each subject out entirely: models
never see the test subject's windows during training, so the score
measures transfer to a new person, not memorization of a person's
idiosyncrasies.  This script builds a small synthetic cohort, runs the
multi-branch network and the random forest through the same harness, and
prints the per-subject reports.

Runtime is about half a minute single-core; the dataset is deliberately
small.  The command-line interface wraps exactly these calls (see
``stresskit --help``) with on-disk caching between the stages.
"""

import time

import numpy as np

from stresskit import eda, evaluate, forest, nn, synth, windows
from stresskit.data_model import list_subject_dirs, load_subject

###############################################################################
# A cohort of four subjects, ten minutes each.  Per-subject offsets in
# the generator (baseline conductance, resting rate, skin temperature)
# make transfer non-trivial.

import tempfile
from pathlib import Path

t0 = time.time()
tmp = tempfile.TemporaryDirectory()
root = Path(tmp.name)
ids = synth.generate_dataset(root, n_subjects=4, duration_s=600.0, seed=3)
records = [load_subject(d) for d in list_subject_dirs(root)]
print(f"generated {len(ids)} subjects: {', '.join(ids)}")

cfg = windows.WindowConfig(width_s=60.0, shift_s=10.0)
matrix, drops = windows.build_feature_matrix(records, cfg, eda.EdaConfig())
print(f"feature matrix: {matrix.features.shape[0]} windows x "
      f"{matrix.features.shape[1]} features, {len(drops)} drops "
      f"({time.time() - t0:.0f} s)")

###############################################################################
# Leave-one-subject-out with the random forest on the fused features.


def show(report):
    agg = report.aggregate()
    print(f"{'subject':<10}{'windows':>8}{'accuracy':>10}{'bal.acc':>9}")
    for s in report.subjects:
        print(f"{s.subject_id:<10}{s.n_windows:>8}{s.accuracy:>10.3f}"
              f"{s.balanced_accuracy:>9.3f}")
    print(f"{'mean ± std':<10}{'':>8}"
          f"{agg['accuracy_mean']:>7.3f} ± {agg['accuracy_std']:.3f}"
          f"{agg['balanced_accuracy_mean']:>6.3f} ± "
          f"{agg['balanced_accuracy_std']:.3f}")


print()
print("=== random forest, fused features ===")
t1 = time.time()
rf_cfg = forest.ForestConfig(n_trees=100)
rf_report = evaluate.run_experiment(matrix, model="rf", signals="fusion",
                                    seed=1, rf_cfg=rf_cfg)
show(rf_report)
print(f"({time.time() - t1:.1f} s)")

###############################################################################
# The same harness drives the network.  Each branch (EDA, BVP, skin
# temperature) embeds its block; the fusion head sees all three
# embeddings; prediction averages the active heads.

print()
print("=== neural network, fused features ===")
t2 = time.time()
nn_cfg = nn.TrainConfig(max_epochs=100, patience=15, batch_size=64)
nn_report = evaluate.run_experiment(matrix, model="nn", signals="fusion",
                                    seed=1, nn_train_cfg=nn_cfg)
show(nn_report)
print(f"({time.time() - t2:.1f} s)")

###############################################################################
# Single-signal lanes quantify what each channel contributes on its own.
# The forest sees only that block's columns; the network activates only
# that branch.

print()
print("=== single-signal lanes (balanced accuracy, forest) ===")
for lane in ("eda", "bvp", "st"):
    report = evaluate.run_experiment(matrix, model="rf", signals=lane,
                                     seed=1, rf_cfg=rf_cfg)
    ba = report.aggregate()["balanced_accuracy_mean"]
    print(f"  {lane:>4}: {ba:.3f}")
fusion_ba = rf_report.aggregate()["balanced_accuracy_mean"]
print(f"fusion: {fusion_ba:.3f}")

tmp.cleanup()
print(f"\ntotal {time.time() - t0:.0f} s")
