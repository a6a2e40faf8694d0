"""Tests for EDA preprocessing, convex decomposition, SCR events, and the
36-dimensional feature vector.

The decomposition is verified against optimality conditions of the QP it
claims to solve (not against a reference solver), plus reconstruction and
impulse-recovery checks with known ground truth.
"""

import numpy as np
import pytest

from stresskit import eda
from stresskit.errors import TooShort

FS = 4.0


def bateman_bump_signal(n=240, onset_s=25.0, height=0.5, noise=0.002, seed=0):
    """Line tonic + one Bateman response at a known onset + small noise."""
    cfg = eda.EdaConfig()
    rng = np.random.default_rng(seed)
    t = np.arange(n) / FS
    x = 0.3 + 0.001 * t
    kernel = eda.bateman_kernel(FS, cfg.tau0_s, cfg.tau1_s, n)
    i0 = int(onset_s * FS)
    x[i0 : i0 + len(kernel)] += height * kernel[: n - i0]
    return x + rng.normal(scale=noise, size=n)


class TestBatemanKernel:
    def test_starts_at_zero(self):
        k = eda.bateman_kernel(4.0, 2.0, 0.7, 100)
        assert k[0] == 0.0

    def test_positive_after_zero(self):
        k = eda.bateman_kernel(64.0, 2.0, 0.7, 2000)
        assert np.all(k[1:] > 0)

    def test_peak_time_analytic(self):
        """argmax_t [exp(-t/a) - exp(-t/b)] = ab/(a-b) * ln(a/b)."""
        fs, a, b = 64.0, 2.0, 0.7
        k = eda.bateman_kernel(fs, a, b, 10_000)
        t_star = a * b / (a - b) * np.log(a / b)
        assert abs(np.argmax(k) / fs - t_star) <= 1.0 / fs

    def test_truncation_length(self):
        """Support is capped at 8 * tau0 or the requested maximum."""
        assert len(eda.bateman_kernel(4.0, 2.0, 0.7, 10_000)) == int(np.ceil(8 * 2.0 * 4.0))
        assert len(eda.bateman_kernel(4.0, 2.0, 0.7, 10)) == 10


class TestCubicBspline:
    def test_knot_values(self):
        """B(0) = 2/3, B(+-1) = 1/6, B(+-2) = 0."""
        u = np.array([0.0, 1.0, -1.0, 2.0, -2.0, 2.5])
        np.testing.assert_allclose(
            eda._cubic_bspline(u), [2 / 3, 1 / 6, 1 / 6, 0.0, 0.0, 0.0], atol=1e-15
        )

    def test_partition_of_unity(self):
        """Integer shifts of the cubic B-spline sum to one everywhere."""
        u = np.linspace(-0.5, 0.5, 101)
        total = sum(eda._cubic_bspline(u - j) for j in range(-3, 4))
        np.testing.assert_allclose(total, 1.0, atol=1e-12)

    def test_basis_rows_sum_to_one(self):
        """The window-spanning basis keeps partition of unity everywhere."""
        basis = eda._spline_basis(240, FS, 10.0)
        np.testing.assert_allclose(basis.sum(axis=1), 1.0, atol=1e-12)


class TestDecomposition:
    def test_exact_reconstruction(self):
        """tonic + phasic + residual equals the input to round-off."""
        x = bateman_bump_signal()
        dec = eda.decompose_eda(x, FS)
        np.testing.assert_allclose(dec.tonic + dec.phasic + dec.residual, x, atol=1e-12)

    def test_driver_nonnegative(self):
        dec = eda.decompose_eda(bateman_bump_signal(), FS)
        assert np.all(dec.driver >= 0.0)

    def test_impulse_recovery(self):
        """The sparse driver localizes a known response onset within 0.5 s."""
        for onset_s in (15.0, 25.0, 40.0):
            dec = eda.decompose_eda(bateman_bump_signal(onset_s=onset_s, seed=3), FS)
            assert abs(np.argmax(dec.driver) / FS - onset_s) <= 0.5

    def test_qp_optimality(self):
        """The returned point satisfies the KKT conditions of the QP.

        With P = G'G + 2*gamma*E and q = -G'x + alpha on the driver block,
        the gradient g = Pz + q must vanish on free coordinates and be
        nonnegative on active (d_i = 0) coordinates.
        """
        cfg = eda.EdaConfig()
        x = bateman_bump_signal()
        n = len(x)
        u, ws, iterations = eda._solve_qp(x, FS, cfg)
        assert iterations < cfg.solver_max_iter

        p = ws.design.T @ ws.design
        sl = slice(n, n + ws.n_spline)
        p[sl, sl] += 2.0 * cfg.gamma * np.eye(ws.n_spline)
        q = -(ws.design.T @ x)
        q[:n] += cfg.alpha
        g = p @ u + q

        d = u[:n]
        free = np.concatenate([g[n:], g[:n][d > 1e-9]])
        assert np.abs(free).max() < 1e-4
        active = g[:n][d <= 1e-9]
        if len(active):
            assert active.min() > -1e-4

    def test_workspace_cached(self):
        """Identical problem shapes reuse one factorized workspace."""
        cfg = eda.EdaConfig()
        assert eda._workspace(240, FS, cfg) is eda._workspace(240, FS, cfg)
        assert eda._workspace(240, FS, cfg) is not eda._workspace(241, FS, cfg)

    def test_simple_mode(self):
        """Lowpass split: tonic + phasic = x, no driver, zero residual."""
        cfg = eda.EdaConfig(mode="simple")
        x = bateman_bump_signal()
        dec = eda.decompose_eda(x, FS, cfg)
        np.testing.assert_allclose(dec.tonic + dec.phasic, x, atol=1e-12)
        assert len(dec.driver) == 0
        np.testing.assert_array_equal(dec.residual, np.zeros_like(x))

    def test_too_short(self):
        with pytest.raises(TooShort):
            eda.decompose_eda(np.zeros(39), FS)

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            eda.decompose_eda(np.zeros(240), FS, eda.EdaConfig(mode="pca"))


class TestScrEventDetection:
    """Threshold-crossing detection on hand-built phasic signals."""

    def test_triangle_hand_computed(self):
        """Rise 0->1 over 1 s, fall at -0.5/s: onset, amplitude, and the
        half-recovery duration all follow from the line equations."""
        fs = 100.0
        x = np.concatenate([
            np.arange(101) / 100.0,                 # 0.00 .. 1.00
            1.0 - 0.5 * np.arange(1, 201) / 100.0,  # down to 0.0 at t=3
        ])
        ev = eda.detect_scr_events(x, fs)
        assert len(ev) == 1
        assert ev.onsets[0] == 10          # first sample >= 0.1 * max
        assert ev.peaks[0] == 100
        np.testing.assert_allclose(ev.amplitudes[0], 0.9)
        # half-recovery level 0.55 is reached at t = 1.9 exactly
        np.testing.assert_allclose(ev.durations[0], 1.8)

    def test_two_separated_events(self):
        """Two bumps with a sub-threshold gap in between are both found."""
        fs = 4.0
        kernel = eda.bateman_kernel(fs, 2.0, 0.7, 200)
        x = np.zeros(240)
        x[40 : 40 + len(kernel)] += kernel
        x[160 : 160 + len(kernel)] += 0.8 * kernel[:80]
        ev = eda.detect_scr_events(x, fs)
        assert len(ev) == 2
        assert abs(ev.onsets[0] - 40) <= 2
        assert abs(ev.onsets[1] - 160) <= 2
        assert np.all(ev.amplitudes > 0)

    def test_never_recovering_event_ends_at_window(self):
        """A ramp that stays above half recovery ends at the last sample."""
        x = np.linspace(0.0, 1.0, 100)
        ev = eda.detect_scr_events(x, 4.0)
        assert len(ev) == 1
        assert ev.ends[0] == 99

    def test_monotone_decay_yields_nothing(self):
        """A signal already past its peak has no onset-to-peak rise."""
        assert len(eda.detect_scr_events(np.linspace(1.0, 0.0, 50), 4.0)) == 0

    def test_flat_and_negative_yield_nothing(self):
        assert len(eda.detect_scr_events(np.zeros(100), 4.0)) == 0
        assert len(eda.detect_scr_events(-np.ones(100), 4.0)) == 0
        assert len(eda.detect_scr_events(np.array([0.5]), 4.0)) == 0

    def test_threshold_scales_with_max(self):
        """The relative threshold ignores bumps below the amplitude floor."""
        fs = 4.0
        x = np.zeros(300)
        kernel = eda.bateman_kernel(fs, 2.0, 0.7, 64)
        x[20 : 20 + 64] += 1.0 * kernel
        x[200 : 200 + 64] += 0.05 * kernel  # 5% of the max: below floor
        ev = eda.detect_scr_events(x, fs, min_amplitude_frac=0.1)
        assert len(ev) == 1


class TestComplexityMeasures:
    """Closed forms for constant and linear inputs."""

    def test_constant_signal(self):
        c, n = 3.0, 50
        r = np.full(n, c)
        np.testing.assert_allclose(eda.arc_length(r), n - 1)
        np.testing.assert_allclose(eda.integral_abs(r), n * c)
        np.testing.assert_allclose(eda.average_power(r), c**2)
        np.testing.assert_allclose(eda.root_mean_square(r), c)

    def test_linear_signal_arc_length(self):
        """r[n] = a*n has arc length (N-1) * sqrt(1 + a^2)."""
        a, n = 0.3, 100
        r = a * np.arange(n)
        np.testing.assert_allclose(eda.arc_length(r), (n - 1) * np.sqrt(1 + a**2))

    def test_rms_is_sqrt_of_power(self):
        rng = np.random.default_rng(8)
        r = rng.normal(size=200)
        np.testing.assert_allclose(eda.root_mean_square(r), np.sqrt(eda.average_power(r)))


class TestPreprocess:
    def test_window_normalization_range(self):
        x = bateman_bump_signal(seed=5)
        out = eda.preprocess_eda(x, FS)
        assert out.min() == 0.0 and out.max() == 1.0

    def test_subject_bounds_clamp(self):
        """Supplied bounds rescale against the whole record and clamp."""
        x = bateman_bump_signal(seed=5)
        out = eda.preprocess_eda(x, FS, bounds=(0.0, 10.0))
        assert out.max() < 0.2  # signal spans ~[0.3, 0.8] of a 10-unit range
        assert out.min() >= 0.0 and out.max() <= 1.0

    def test_degenerate_bounds_map_to_zero(self):
        x = bateman_bump_signal(seed=5)
        np.testing.assert_array_equal(
            eda.preprocess_eda(x, FS, bounds=(2.0, 2.0)), np.zeros(len(x))
        )

    def test_clean_bounds_ordered(self):
        lo, hi = eda.clean_bounds(bateman_bump_signal(seed=6), FS)
        assert lo < hi


class TestFeatureVector:
    def test_names_and_width(self):
        assert len(eda.EDA_FEATURE_NAMES) == 36
        assert len(set(eda.EDA_FEATURE_NAMES)) == 36

    def test_realistic_window(self):
        feats = eda.extract_eda_features(bateman_bump_signal(seed=11), FS)
        assert feats.shape == (36,)
        assert np.all(np.isfinite(feats))
        names = dict(zip(eda.EDA_FEATURE_NAMES, feats))
        assert names["scr_peak_count"] >= 1
        assert names["scr_amplitude_sum"] > 0
        assert 0.0 <= names["eda_min"] <= names["eda_mean"] <= names["eda_max"] <= 1.0

    def test_constant_window_zero_event_convention(self):
        """A flat window normalizes to zeros: every event-derived feature
        is zero and the arc length collapses to its N-1 floor."""
        n = 240
        feats = eda.extract_eda_features(np.full(n, 4.2), FS)
        names = dict(zip(eda.EDA_FEATURE_NAMES, feats))
        for key in (
            "scr_peak_count", "scr_amplitude_sum", "scr_duration_sum", "scr_auc",
            "scr_peak_mean", "scr_peak_std", "scr_peak_max", "scr_peak_min",
            "scr_onset_mean", "scr_onset_std", "scr_onset_max", "scr_onset_min",
            "scr_mean", "scr_std", "scr_max", "scr_min",
            "scr_insc", "scr_apsc", "scr_rmsc",
        ):
            assert names[key] == 0.0, key
        np.testing.assert_allclose(names["scr_alsc"], n - 1)
        assert np.all(np.isfinite(feats))

    def test_deterministic(self):
        x = bateman_bump_signal(seed=13)
        np.testing.assert_array_equal(
            eda.extract_eda_features(x, FS), eda.extract_eda_features(x, FS)
        )

    def test_simple_mode_also_full_width(self):
        cfg = eda.EdaConfig(mode="simple")
        feats = eda.extract_eda_features(bateman_bump_signal(seed=14), FS, cfg)
        assert feats.shape == (36,)
        assert np.all(np.isfinite(feats))
