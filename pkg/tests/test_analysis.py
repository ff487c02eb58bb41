import math
import time
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from einselect import analysis
from einselect.errors import NoDecay, StepTooCoarse
from einselect.spinbath import EnvironmentSpec, EnvQubitSpec, env_random, equal_coupling_env


class TestSeries:
    def test_rows_layout(self):
        env = EnvironmentSpec([EnvQubitSpec(0.6, 0.8, 1.0)])
        rows = list(analysis.sample_series(env, [0.0, 0.5]).rows())
        assert rows[0] == (0.0, 1.0, 0.0, 0.0)
        assert len(rows[1]) == 4

    def test_grid_validation(self):
        env = env_random(3, 0)
        with pytest.raises(ValueError):
            analysis.sample_series(env, [])
        with pytest.raises(ValueError):
            analysis.sample_series(env, [0.0, 1.0, 0.5])

    def test_performance(self):
        env = env_random(1000, 1)
        t = np.linspace(0.0, 100.0, 10_000)
        start = time.perf_counter()
        series = analysis.sample_series(env, t)
        assert time.perf_counter() - start < 1.0
        assert series.values.shape == (10_000,)


class TestAverage:
    @given(st.integers(0, 10_000), st.integers(1, 20))
    def test_closed_form_is_product(self, seed, n):
        env = env_random(n, seed)
        expected = float(np.prod((1 + env.deltas**2) / 2))
        assert analysis.closed_form_average(env) == pytest.approx(expected, rel=1e-12)

    @pytest.mark.parametrize("seed", range(5))
    def test_grid_estimate_within_3_sigma(self, seed):
        env = env_random(8, seed)
        rep = analysis.average_modsq(env, horizon=5000.0, samples=20_000)
        assert abs(rep.estimate - rep.closed_form) <= 3 * rep.stderr

    def test_single_equatorial_qubit(self):
        # |r|^2 = cos^2(2gt), mean 1/2
        env = EnvironmentSpec([EnvQubitSpec(1 / math.sqrt(2), 1j / math.sqrt(2), 1.0)])
        assert analysis.closed_form_average(env) == pytest.approx(0.5)

    def test_short_horizon_warns(self):
        with pytest.warns(RuntimeWarning):
            analysis.average_modsq(env_random(3, 0), horizon=1.0, samples=1000)

    def test_sample_floor(self):
        with pytest.raises(ValueError):
            analysis.average_modsq(env_random(3, 0), horizon=1000.0, samples=10)


class TestGaussianRate:
    def test_n50_matches_theory_and_curvature(self):
        env = env_random(50, 0)
        fit = analysis.gaussian_rate(env)
        assert abs(fit.gamma / fit.gamma_theory - 1) < 0.05
        assert abs(analysis.curvature_rate(env) / fit.gamma_theory - 1) < 0.01
        # window ends where |r|^2 = exp(-1/4)
        assert 2 * analysis.decoherence_factor(env, fit.t_c).log_magnitude == pytest.approx(-0.25, abs=1e-10)

    def test_narrow_window_is_closer(self):
        env = env_random(30, 2)
        wide = analysis.gaussian_rate(env, 1.0)
        narrow = analysis.gaussian_rate(env, 0.2)
        th = wide.gamma_theory
        assert abs(narrow.gamma - th) <= abs(wide.gamma - th) + 1e-12
        assert narrow.window[1] == pytest.approx(0.2 * wide.t_c)

    @given(st.integers(0, 10_000), st.integers(2, 60))
    def test_curvature_oracle(self, seed, n):
        env = env_random(n, seed)
        assert analysis.curvature_rate(env) == pytest.approx(analysis.gamma_theory(env), rel=1e-6)

    def test_no_decay(self):
        env = EnvironmentSpec([EnvQubitSpec(1, 0, 1.0), EnvQubitSpec(0, 1, 2.0)])
        with pytest.raises(NoDecay):
            analysis.gaussian_rate(env)
        assert analysis.gamma_theory(env) == 0.0

    def test_fit_fraction_range(self):
        with pytest.raises(ValueError):
            analysis.gaussian_rate(env_random(5, 0), 0.0)


class TestRecurrence:
    def test_equal_couplings_hit_every_half_period(self):
        g = 1.3
        env = equal_coupling_env([(0.6, 0.8), (0.8, 0.6j), (1 / math.sqrt(2), 1 / math.sqrt(2))], g)
        step = 0.01
        horizon = 10.5 * math.pi / (2 * g)
        rep = analysis.recurrence_scan(env, 0.99, horizon, step)
        hits = [t for t, _ in rep.hits]
        assert len(hits) == 10
        for m, t in enumerate(hits, start=1):
            assert abs(t - m * math.pi / (2 * g)) <= step / 2
        assert not rep.degenerate

    @pytest.mark.parametrize("seed", range(5))
    def test_generic_bath_no_recurrence(self, seed):
        env = env_random(16, seed)
        horizon = 1e3 * 2 * math.pi / env.mean_coupling
        step = math.pi / (8 * float(env.couplings.max()))
        rep = analysis.recurrence_scan(env, 0.9, horizon, step)
        assert rep.hits == []

    def test_step_guard(self):
        env = env_random(4, 0)
        with pytest.raises(StepTooCoarse):
            analysis.recurrence_scan(env, 0.9, 100.0, 1.0)

    def test_degenerate_when_never_decays(self):
        env = EnvironmentSpec([EnvQubitSpec(1, 0, 1.0)])
        rep = analysis.recurrence_scan(env, 0.9, 1.0, 0.1)
        assert rep.degenerate and len(rep.hits) == 11

    def test_initial_peak_excluded(self):
        env = env_random(10, 3)
        rep = analysis.recurrence_scan(env, 0.5, 5.0, 0.01)
        assert all(t > 0.05 for t, _ in rep.hits)


class TestScaling:
    def test_haar_slope_is_log2_two_thirds(self):
        # Haar mean of (1 + D^2)/2 is 2/3, so the expected slope is log2(2/3)
        table = analysis.scaling_study(list(range(4, 17)), 200, base_seed=1)
        assert table.slope_log2 == pytest.approx(math.log2(2 / 3), abs=0.03)

    def test_equatorial_slope_is_minus_one(self):
        table = analysis.scaling_study(list(range(4, 17)), 10, states="equatorial")
        assert table.slope_log2 == pytest.approx(-1.0, abs=1e-9)

    def test_thread_count_does_not_change_results(self):
        a = analysis.scaling_study([4, 6, 8], 12, 2000.0, 1000, threads=1)
        b = analysis.scaling_study([4, 6, 8], 12, 2000.0, 1000, threads=4)
        assert a.to_dict() == b.to_dict()

    def test_estimates_track_closed_form(self):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            table = analysis.scaling_study([3, 5], 20, 5000.0, 5000)
        for est, cf in zip(table.mean_estimate, table.mean_closed_form):
            assert est == pytest.approx(cf, rel=0.1)

    def test_validation(self):
        with pytest.raises(ValueError):
            analysis.scaling_study([], 10)
        with pytest.raises(ValueError):
            analysis.scaling_study([4], 3)
