import math

import numpy as np
import pytest

from occubound.bounds import CoefficientBox, distance_bound
from occubound.controls import (
    FeedbackControl,
    MollificationParams,
    make_extremal_control,
    preset_control,
)
from occubound.engine import (
    OccupationEstimate,
    SimConfig,
    UnderResolvedWindowWarning,
    bias_budget,
    estimate_local_time,
    estimate_occupation_density,
    path_generator,
    path_weight_sums,
    simulate_paths,
    suboptimality_budget,
    zero_noise_factory,
)
from occubound.errors import DomainError

BOX = CoefficientBox(1.0, 2.0, 1.0)


def small_cfg(**kw):
    base = dict(dt=1e-3, n_paths=32, seed=7, n_window=10.0, T=0.5, x0=0.0)
    base.update(kw)
    return SimConfig(**base)


class TestSimConfig:
    def test_invariants(self):
        with pytest.raises(DomainError):
            small_cfg(dt=0.0)
        with pytest.raises(DomainError):
            small_cfg(n_paths=0)
        with pytest.raises(DomainError):
            small_cfg(n_window=0.0)
        with pytest.raises(DomainError):
            small_cfg(T=1e-4)  # 0 < T < dt
        assert small_cfg(T=0.0).n_steps == 0

    def test_step_count(self):
        assert small_cfg(T=0.5, dt=1e-3).n_steps == 500


class TestDeterminism:
    def test_same_seed_same_estimate(self):
        ctrl = preset_control("brownian", BOX)
        a = estimate_occupation_density(ctrl, small_cfg(), 0.0)
        b = estimate_occupation_density(ctrl, small_cfg(), 0.0)
        assert a == b

    def test_thread_count_is_invisible(self):
        ctrl = make_extremal_control(BOX, 0.0, MollificationParams(5))
        cfg = small_cfg(n_paths=300)
        one = estimate_occupation_density(ctrl, cfg, 0.0, threads=1)
        four = estimate_occupation_density(ctrl, cfg, 0.0, threads=4)
        eight = estimate_occupation_density(ctrl, cfg, 0.0, threads=8)
        assert one == four == eight

    def test_different_seed_different_estimate(self):
        ctrl = preset_control("brownian", BOX)
        a = estimate_occupation_density(ctrl, small_cfg(seed=1), 0.0)
        b = estimate_occupation_density(ctrl, small_cfg(seed=2), 0.0)
        assert a.mean != b.mean

    def test_trajectories_match_streamed_sums_exactly(self):
        # the trajectory view and the chunked engine must agree bit for bit
        from occubound.engine import _WindowSum

        ctrl = make_extremal_control(BOX, 0.1, MollificationParams(5))
        cfg = small_cfg(n_paths=5, T=0.25)
        (sums,), _ = path_weight_sums(ctrl, cfg, [_WindowSum(0.1, cfg.n_window)])
        half = 1.0 / cfg.n_window
        for p, (times, xs) in enumerate(simulate_paths(ctrl, cfg)):
            manual = np.sum(np.abs(xs[:-1] - 0.1) <= half) * cfg.dt
            assert manual == sums[p]

    def test_substreams_are_call_partition_invariant(self):
        g1 = path_generator(42, 3)
        a = g1.standard_normal(100)
        g2 = path_generator(42, 3)
        b = np.concatenate([g2.standard_normal(37), g2.standard_normal(63)])
        np.testing.assert_array_equal(a, b)


class TestBrownianStatistics:
    def test_increment_moments(self):
        ctrl = preset_control("brownian", BOX)  # sigma = a = 1
        cfg = small_cfg(n_paths=1, T=0.5, dt=1e-3, seed=3)
        _, xs = next(simulate_paths(ctrl, cfg))
        inc = np.diff(xs)
        assert abs(inc.mean()) < 4 * BOX.a * math.sqrt(cfg.dt / cfg.n_steps)
        assert inc.var() == pytest.approx(BOX.a ** 2 * cfg.dt, rel=0.2)

    def test_window_estimator_hits_brownian_local_time(self):
        box = CoefficientBox(1, 1, 0)
        ctrl = preset_control("brownian", box)
        cfg = SimConfig(dt=1e-4, n_paths=4000, seed=42, n_window=25.0,
                        T=1.0, x0=0.0)
        est = estimate_occupation_density(ctrl, cfg, 0.0)
        oracle = math.sqrt(2 / math.pi)
        assert abs(est.mean - oracle) < 3 * est.std_error + 0.02

    def test_self_similarity(self):
        # at the level, the occupation estimate scales like sqrt(T)
        box = CoefficientBox(1, 1, 0)
        ctrl = preset_control("brownian", box)
        est1 = estimate_occupation_density(
            ctrl, SimConfig(1e-4, 3000, 5, 25.0, 0.5, 0.0), 0.0)
        est2 = estimate_occupation_density(
            ctrl, SimConfig(1e-4, 3000, 5, 25.0, 2.0, 0.0), 0.0)
        assert est2.mean / est1.mean == pytest.approx(2.0, abs=0.15)


class TestEstimators:
    def test_zero_horizon_is_exactly_zero(self):
        ctrl = preset_control("brownian", BOX)
        est = estimate_occupation_density(ctrl, small_cfg(T=0.0), 0.0)
        assert est == OccupationEstimate(0.0, 0.0, 32, "window")

    def test_unreachable_level_is_zero(self):
        ctrl = preset_control("brownian", BOX)
        est = estimate_occupation_density(ctrl, small_cfg(), 50.0)
        assert est.mean == 0.0

    def test_local_time_equals_window_for_constant_sigma(self):
        ctrl = preset_control("drift-up", BOX)
        w = estimate_occupation_density(ctrl, small_cfg(), 0.2)
        lt = estimate_local_time(ctrl, small_cfg(), 0.2)
        assert lt.estimator_kind == "local_time"
        assert lt.mean == pytest.approx(w.mean, rel=1e-12)

    def test_local_time_agrees_with_window_at_the_ramp_foot(self):
        # level placed where the diffusion starts climbing, so sigma varies
        # inside the indicator window: the stress case for the identity
        box = CoefficientBox(1.0, 2.0, 0.0)
        m = MollificationParams(5)
        ctrl = make_extremal_control(box, 0.0, m)
        foot = 1.0 / m.M
        cfg = SimConfig(dt=1e-4, n_paths=3000, seed=9, n_window=20.0,
                        T=1.0, x0=0.0)
        w = estimate_occupation_density(ctrl, cfg, foot)
        lt = estimate_local_time(ctrl, cfg, foot)
        spread = 3.0 * (w.std_error + lt.std_error)
        assert abs(w.mean - lt.mean) <= spread + 0.05

    def test_std_error_shrinks_with_paths(self):
        ctrl = preset_control("brownian", BOX)
        small = estimate_occupation_density(ctrl, small_cfg(n_paths=200), 0.0)
        large = estimate_occupation_density(ctrl, small_cfg(n_paths=3200), 0.0)
        assert large.std_error < 0.6 * small.std_error

    def test_under_resolution_warning(self):
        ctrl = preset_control("drift-up", BOX)  # sigma_max = 2
        with pytest.warns(UnderResolvedWindowWarning):
            estimate_occupation_density(ctrl, small_cfg(n_window=50.0), 0.0)

    def test_nonfinite_paths_abort_with_warning(self):
        bad = FeedbackControl(
            drift=lambda t, x: np.where(np.asarray(x) > 0.02, np.nan, 0.0),
            diffusion=lambda t, x: np.full_like(np.asarray(x, float), 1.0),
            label="explodes")
        with pytest.warns(RuntimeWarning, match="aborted"):
            est = estimate_occupation_density(bad, small_cfg(), 0.0)
        assert est.n_paths < 32


class TestZeroNoiseHook:
    def test_deterministic_descent_at_full_drift(self):
        box = CoefficientBox(1.0, 2.0, 1.0)
        ctrl = make_extremal_control(box, 0.0, MollificationParams(50))
        cfg = SimConfig(dt=1e-3, n_paths=1, seed=0, n_window=10.0,
                        T=0.05, x0=1.0)
        _, xs = next(simulate_paths(ctrl, cfg, noise_factory=zero_noise_factory))
        # above the ramp the drift is exactly -k b^2 = -4
        rate = box.k * box.b ** 2
        expect = 1.0 - rate * cfg.dt * np.arange(cfg.n_steps + 1)
        np.testing.assert_allclose(xs, expect, atol=1e-13)

    def test_streamed_engine_honors_the_hook(self):
        ctrl = preset_control("brownian", BOX)
        est = estimate_occupation_density(ctrl, small_cfg(x0=0.0), 0.0,
                                          noise_factory=zero_noise_factory)
        # path pinned at the level: indicator fires every step
        assert est.mean == pytest.approx(0.5 * small_cfg().n_window
                                         * small_cfg().T, rel=1e-12)
        assert est.std_error == 0.0


class TestBudgets:
    def test_bias_budget_formula(self):
        box = CoefficientBox(1.0, 2.0, 1.0)
        got = bias_budget(box, 1e-4, 50.0)
        assert got == pytest.approx(2 * (50 * 2 * 1e-2 + 4 * 1e-4 * 50))

    def test_suboptimality_example(self):
        box = CoefficientBox(1, 1, 0)
        got = suboptimality_budget(box, 1.0, MollificationParams(1000))
        # 2 * 2^2.5 * H(0,1)^(1/3) / sqrt(pi) / 10 with H(0,1) = sqrt(2/pi)
        h0 = math.sqrt(2 / math.pi)
        want = 2 * 2 ** 2.5 * h0 ** (1 / 3) / math.sqrt(math.pi) / 10.0
        assert got == pytest.approx(want, rel=1e-12)
        assert got == pytest.approx(0.5921, abs=1e-4)

    def test_driftless_budget_uses_gaussian_branch(self):
        box = CoefficientBox(1.0, 2.0, 0.0)
        m = MollificationParams(17)
        h0 = distance_bound(box, 0.0, 2.0).value
        first = 2 ** 2.5 * box.b * 2.0 ** (1 / 6) * h0 ** (1 / 3) / math.sqrt(math.pi)
        assert suboptimality_budget(box, 2.0, m) == \
            pytest.approx(2 * first / 17 ** (1 / 3), rel=1e-12)

    def test_cube_root_scaling(self):
        box = CoefficientBox(1.0, 2.0, 1.5)
        b1 = suboptimality_budget(box, 1.0, MollificationParams(4))
        b8 = suboptimality_budget(box, 1.0, MollificationParams(32))
        assert b8 == pytest.approx(b1 / 2.0, rel=1e-12)

    def test_monotone_in_m(self):
        box = CoefficientBox(0.5, 1.5, 2.0)
        vals = [suboptimality_budget(box, 1.0, MollificationParams(M))
                for M in (1, 3, 9, 81)]
        assert all(x > y for x, y in zip(vals, vals[1:]))

    def test_requires_positive_horizon(self):
        with pytest.raises(DomainError):
            suboptimality_budget(BOX, 0.0, MollificationParams(5))
