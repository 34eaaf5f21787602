import numpy as np
import pytest

from rsenergy.capacity import (
    CapacityContext,
    dual_ascent,
    dual_value,
    solve_f,
    solve_g,
)
from rsenergy.errors import InfeasibleDeadlineError
from rsenergy.validate import (
    capacity_grid_search,
    random_capacity_context,
    run_capacity_suite,
)

KAPPA = 1e-28


class TestSolveF:
    def test_closed_form_no_budget_multiplier(self):
        f, inactive = solve_f(0.2, 0.0, 1e9, KAPPA)
        assert f == pytest.approx(1e9)
        assert not inactive

    def test_cubic_residual(self):
        lam2, lam3, y1 = 0.2, 1e-10, 1e9
        f, _ = solve_f(lam2, lam3, y1, KAPPA)
        residual = 2 * KAPPA * y1 * f ** 3 + lam3 * f ** 2 - lam2 * y1
        assert abs(residual) <= 1e-6 * abs(lam2 * y1)

    def test_cube_root_scaling(self):
        f1, _ = solve_f(0.2, 0.0, 1e9, KAPPA)
        f8, _ = solve_f(1.6, 0.0, 1e9, KAPPA)
        assert f8 == pytest.approx(2 * f1)

    def test_inactive_multiplier(self):
        f, inactive = solve_f(0.0, 0.0, 1e9, KAPPA)
        assert f == 0.0
        assert inactive

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            solve_f(-0.1, 0.0, 1e9, KAPPA)


class TestSolveG:
    def test_closed_form(self):
        assert solve_g(0.2, KAPPA, 2e9) == pytest.approx(1e9)

    def test_clamped(self):
        assert solve_g(100.0, KAPPA, 2e9) == pytest.approx(2e9)

    def test_exact_boundary(self):
        assert solve_g(1.6, KAPPA, 2e9) == pytest.approx(2e9)

    def test_floor_at_zero_multiplier(self):
        assert solve_g(0.0, KAPPA, 2e9) == pytest.approx(2e9 * 1e-6)


class TestContext:
    def test_rejects_fixed_time_beyond_deadline(self):
        with pytest.raises(InfeasibleDeadlineError):
            CapacityContext(y1=[1e9], y2=[1e8], fixed_time=[2.5],
                            deadline=2.0, kappa=KAPPA, f_max=1e10, g_max=[2e9])

    def test_rejects_nonpositive_cycles(self):
        with pytest.raises(ValueError):
            CapacityContext(y1=[0.0], y2=[1e8], fixed_time=[0.1],
                            deadline=2.0, kappa=KAPPA, f_max=1e10, g_max=[2e9])


class TestDualAscent:
    def test_loose_deadline_minimal_energy(self):
        ctx = CapacityContext(y1=[1e9], y2=[1e8], fixed_time=[0.1],
                              deadline=1e5, kappa=KAPPA, f_max=1e10,
                              g_max=[2e9])
        f, g, state = dual_ascent(ctx)
        assert f[0] < 1e6            # essentially idle
        assert g[0] < 1e6
        energy = KAPPA * (1e9 * f[0] ** 2 + 1e8 * g[0] ** 2)
        assert energy < 1e-8

    def test_binding_deadline_matches_grid(self):
        ctx = random_capacity_context(3, num_users=1)
        f, g, _ = dual_ascent(ctx)
        e_solver = float(np.sum(KAPPA * (ctx.y1 * f ** 2 + ctx.y2 * g ** 2)))
        e_grid = capacity_grid_search(ctx)[0]
        assert e_solver == pytest.approx(e_grid, rel=1e-3)

    def test_k3_budget_binding(self):
        # recovery-heavy users with fast CPUs: the unconstrained optimum
        # wants far more BS cycles than the uniform-split minimum, so the
        # pre-check passes while the sum constraint binds
        y1 = np.array([2e9, 2.2e9, 1.8e9])
        y2 = np.array([2e9, 2.4e9, 1.6e9])
        fixed = np.array([0.2, 0.25, 0.3])
        g_max = np.array([4e9, 4e9, 4e9])
        deadline = 2.0
        budget = deadline - fixed
        f_req = y1 / (budget - y2 / g_max)
        f_max = float(3 * np.max(f_req) * 1.02)
        ctx = CapacityContext(y1=y1, y2=y2, fixed_time=fixed, deadline=deadline,
                              kappa=KAPPA, f_max=f_max, g_max=g_max)
        f, g, state = dual_ascent(ctx)
        lat = y1 / f + y2 / g + fixed
        assert np.all(lat <= deadline * (1 + 1e-6))
        assert state.lambda3 > 0
        assert abs(f.sum() - f_max) <= 1e-6 * f_max

    def test_infeasible_at_max_resources(self):
        ctx = CapacityContext(y1=[1e10], y2=[1e8], fixed_time=[0.5],
                              deadline=1.0, kappa=KAPPA, f_max=1e9,
                              g_max=[2e9])
        with pytest.raises(InfeasibleDeadlineError) as exc:
            dual_ascent(ctx)
        assert exc.value.users == (0,)

    def test_stationarity_residuals(self):
        for seed in range(8):
            ctx = random_capacity_context(seed, num_users=2)
            f, g, state = dual_ascent(ctx)
            lam2, lam3 = state.lambda2, state.lambda3
            res_f = 2 * KAPPA * ctx.y1 * f ** 3 + lam3 * f ** 2 - lam2 * ctx.y1
            assert np.all(np.abs(res_f) <= 1e-6 * np.abs(lam2 * ctx.y1) + 1e-30)
            unclamped = g < ctx.g_max * (1 - 1e-9)
            res_g = 2 * KAPPA * ctx.y2 * g ** 3 - lam2 * ctx.y2
            assert np.all(np.abs(res_g[unclamped])
                          <= 1e-6 * np.abs(lam2 * ctx.y2)[unclamped] + 1e-30)

    def test_dual_history_monotone_best(self):
        ctx = random_capacity_context(11, num_users=2)
        _, _, state = dual_ascent(ctx)
        hist = np.asarray(state.dual_history)
        assert hist.size >= 2
        best = np.maximum.accumulate(hist)
        # windowed best-so-far never falls; the final polished dual dominates
        assert np.all(np.diff(best) >= -1e-10 * np.abs(best[:-1]))
        assert hist[-1] >= hist[0] - 1e-10 * abs(hist[0])

    def test_dual_weak_duality(self):
        ctx = random_capacity_context(21, num_users=2)
        f, g, state = dual_ascent(ctx)
        primal = float(np.sum(KAPPA * (ctx.y1 * f ** 2 + ctx.y2 * g ** 2)))
        dual = dual_value(state.lambda2, state.lambda3, ctx)
        assert dual <= primal * (1 + 1e-6) + 1e-12


class TestOracleSuite:
    def test_reduced_suite(self):
        res = run_capacity_suite(num_contexts=12)
        assert res.passed, res.detail
