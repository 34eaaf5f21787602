"""Compute-frequency subproblem: BS extraction rates f and user rates g.

With extraction ratios and the whole transmission block frozen, the energy
in (f, g) is separable and the only coupling is the shared BS cycle budget.
Primal recovery is closed form: f_k is the unique positive root of

    2*kappa*y1*f^3 + lam3*f^2 - lam2*y1 = 0

and g_k = min((lam2/(2*kappa))^(1/3), g_max). The multipliers are driven by
projected gradient ascent with a 1/sqrt(t) step, then polished by exact
per-block bisection (latency pinned to the deadline for lam2, the cycle
budget for lam3) so complementary slackness certifies to tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InfeasibleDeadlineError

__all__ = [
    "CapacityContext",
    "DualState",
    "solve_f",
    "solve_g",
    "dual_value",
    "dual_ascent",
]

G_FLOOR_RATIO = 1e-6       # g floor (relative to g_max) when lam2 == 0
RESIDUAL_RTOL = 1e-6
DUAL_PROGRESS_RTOL = 1e-8
MAX_ITER = 10 ** 5


@dataclass(frozen=True)
class CapacityContext:
    """Per-user cycle counts and the frozen transmission time."""

    y1: np.ndarray          # (K,) extraction cycles at the frozen rho
    y2: np.ndarray          # (K,) recovery cycles
    fixed_time: np.ndarray  # (K,) downlink time max(Z rho/(r+a), K0/a0)
    deadline: float
    kappa: float
    f_max: float
    g_max: np.ndarray       # (K,)

    def __post_init__(self):
        for name in ("y1", "y2", "fixed_time", "g_max"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), float))
        if np.any(self.y1 <= 0) or np.any(self.y2 <= 0):
            raise ValueError("cycle counts must be positive")
        if np.any(self.fixed_time >= self.deadline):
            bad = np.flatnonzero(self.fixed_time >= self.deadline)
            raise InfeasibleDeadlineError(
                f"transmission time alone exceeds the deadline for users {bad.tolist()}",
                users=bad.tolist())

    @property
    def num_users(self) -> int:
        return self.y1.shape[0]

    @property
    def budget(self) -> np.ndarray:
        """Per-user time left for computation."""
        return self.deadline - self.fixed_time


@dataclass
class DualState:
    lambda2: np.ndarray
    lambda3: float
    iterations: int
    residual_history: list = field(default_factory=list)
    dual_history: list = field(default_factory=list)
    deadline_inactive: np.ndarray | None = None


# ---------------------------------------------------------------------------
# Closed-form primal recovery
# ---------------------------------------------------------------------------

def _solve_f_vec(lam2, lam3: float, y1, kappa: float) -> np.ndarray:
    """Positive roots of 2*kappa*y1*f^3 + lam3*f^2 - lam2*y1 = 0, vectorized.

    The cubic has exactly one sign change, and starting Newton from the
    lam3=0 closed form (an upper bound on the root) keeps every iterate
    above the root, so plain Newton is already safeguarded.
    """
    lam2 = np.asarray(lam2, float)
    y1 = np.asarray(y1, float)
    f = np.cbrt(lam2 / (2.0 * kappa))
    if lam3 == 0.0:
        return f
    active = lam2 > 0.0
    x = f[active]
    y = y1[active]
    l2 = lam2[active]
    # Newton on the cubic, with p/p' computed as (p/x^2)/(p'/x^2) so extreme
    # multiplier brackets cannot overflow x^3; starting at the lam3=0 root
    # keeps every iterate above the true root (p convex, p(x0) >= 0)
    for _ in range(100):
        q = 2.0 * kappa * y * x + lam3 - l2 * (y / x ** 2)
        step = q / (6.0 * kappa * y + 2.0 * lam3 / x)
        x = x - step
        if np.all(np.abs(step) <= 1e-12 * np.maximum(x, 1.0)):
            break
    out = np.zeros_like(f)
    out[active] = x
    return out


def solve_f(lambda2: float, lambda3: float, y1: float,
            kappa: float) -> tuple[float, bool]:
    """One user's BS frequency and a flag for an inactive deadline multiplier.

    lambda2 == 0 means the latency constraint exerts no pull: the energy
    minimizer is f = 0, returned with the flag set.
    """
    if lambda2 < 0 or lambda3 < 0:
        raise ValueError("multipliers must be nonnegative")
    if lambda2 == 0.0:
        return 0.0, True
    f = float(_solve_f_vec(np.array([lambda2]), lambda3, np.array([y1]), kappa)[0])
    return f, False


def _solve_g_vec(lam2, kappa: float, g_max) -> np.ndarray:
    lam2 = np.asarray(lam2, float)
    g_max = np.asarray(g_max, float)
    g = np.minimum(np.cbrt(lam2 / (2.0 * kappa)), g_max)
    return np.where(lam2 > 0.0, g, g_max * G_FLOOR_RATIO)


def solve_g(lambda2: float, kappa: float, g_max: float) -> float:
    """User frequency: cube-root stationary point clamped to g_max.

    At lambda2 == 0 the infimum g -> 0 would blow up the recovery time, so a
    small positive floor keeps downstream evaluation total.
    """
    if lambda2 < 0:
        raise ValueError("lambda2 must be nonnegative")
    return float(_solve_g_vec(np.array([lambda2]), kappa, np.array([g_max]))[0])


# ---------------------------------------------------------------------------
# Dual machinery
# ---------------------------------------------------------------------------

def dual_value(lam2, lam3: float, ctx: CapacityContext) -> float:
    """Lagrange dual at (lam2, lam3): separable infima plus the constants."""
    lam2 = np.asarray(lam2, float)
    k = ctx.kappa
    val = -lam3 * ctx.f_max + float(np.dot(lam2, -ctx.budget))
    f = _solve_f_vec(lam2, lam3, ctx.y1, k)
    g = np.minimum(np.cbrt(lam2 / (2.0 * k)), ctx.g_max)
    active = lam2 > 0.0
    # inactive multipliers: both bracket infima are 0 at f,g -> 0
    fa, ga = f[active], g[active]
    y1a, y2a, l2a = ctx.y1[active], ctx.y2[active], lam2[active]
    val += float(np.sum(k * y1a * fa ** 2 + l2a * y1a / fa + lam3 * fa))
    val += float(np.sum(k * y2a * ga ** 2 + l2a * y2a / ga))
    return val


def _latencies(f, g, ctx: CapacityContext) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return ctx.y1 / f + ctx.y2 / g


def _lambda2_for_budget(lam3: float, ctx: CapacityContext,
                        rtol: float = 1e-10) -> np.ndarray:
    """Per-user lam2 pinning y1/f + y2/g to the per-user time budget.

    The latency is strictly decreasing in lam2, so a lockstep vector
    bisection over all users converges unconditionally.
    """
    budget = ctx.budget
    guess = 2.0 * ctx.kappa * ((ctx.y1 + ctx.y2) / budget) ** 3
    lo = guess.copy()
    hi = guess.copy()
    for _ in range(200):
        lat = _latencies(_solve_f_vec(lo, lam3, ctx.y1, ctx.kappa),
                         _solve_g_vec(lo, ctx.kappa, ctx.g_max), ctx)
        need_lower = lat < budget
        if not np.any(need_lower):
            break
        lo[need_lower] /= 4.0
    for _ in range(200):
        lat = _latencies(_solve_f_vec(hi, lam3, ctx.y1, ctx.kappa),
                         _solve_g_vec(hi, ctx.kappa, ctx.g_max), ctx)
        need_higher = (lat > budget) & (hi < 1e250)
        if not np.any(need_higher):
            break
        hi[need_higher] *= 4.0
    for _ in range(90):
        mid = np.sqrt(lo * hi)  # geometric: brackets span orders of magnitude
        lat = _latencies(_solve_f_vec(mid, lam3, ctx.y1, ctx.kappa),
                         _solve_g_vec(mid, ctx.kappa, ctx.g_max), ctx)
        above = lat > budget
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
        if np.all((hi - lo) <= rtol * np.maximum(hi, 1e-300)):
            break
    return hi  # feasible side: latency <= budget


def _refine(ctx: CapacityContext) -> tuple[np.ndarray, float]:
    """Exact dual solve: lam3 by bisection on the cycle budget."""
    lam2 = _lambda2_for_budget(0.0, ctx)
    f = _solve_f_vec(lam2, 0.0, ctx.y1, ctx.kappa)
    if f.sum() <= ctx.f_max:
        return lam2, 0.0
    # bracket lam3 starting from its stationarity scale at the budget split
    f_split = ctx.f_max / ctx.num_users
    hi = float(np.max(lam2 * ctx.y1 / f_split ** 2)) * 2.0
    lo = 0.0
    while _solve_f_vec(_lambda2_for_budget(hi, ctx), hi, ctx.y1,
                       ctx.kappa).sum() > ctx.f_max:
        lo = hi
        hi *= 8.0
        if hi > 1e12:
            raise InfeasibleDeadlineError(
                "cycle budget cannot be met at any multiplier")
    for _ in range(120):
        mid = 0.5 * (lo + hi)
        total = _solve_f_vec(_lambda2_for_budget(mid, ctx), mid, ctx.y1,
                             ctx.kappa).sum()
        if total > ctx.f_max:
            lo = mid
        else:
            hi = mid
        if abs(total - ctx.f_max) <= 1e-9 * ctx.f_max:
            break
    lam3 = hi
    return _lambda2_for_budget(lam3, ctx), lam3


def dual_ascent(ctx: CapacityContext, max_iter: int = MAX_ITER,
                ascent_iters: int = 2000) -> tuple[np.ndarray, np.ndarray, DualState]:
    """Optimal (f, g) and the dual state for one capacity subproblem.

    Checks first that the maximal resources (uniform budget split, g at its
    cap) meet every deadline; runs the normalized 1/sqrt(t) projected ascent
    until residuals and dual progress stall; then polishes with the exact
    bisection refinement and applies the feasibility repair.
    """
    k = ctx.num_users
    budget = ctx.budget
    f_uniform = np.full(k, ctx.f_max / k)
    lat_best = _latencies(f_uniform, ctx.g_max, ctx)
    if np.any(lat_best > budget):
        bad = np.flatnonzero(lat_best > budget)
        raise InfeasibleDeadlineError(
            f"deadline unreachable even at maximal resources for users "
            f"{bad.tolist()}", users=bad.tolist())

    lam2 = 2.0 * ctx.kappa * ((ctx.y1 + ctx.y2) / budget) ** 3
    lam3 = 0.0
    state = DualState(lambda2=lam2.copy(), lambda3=lam3, iterations=0)

    # step normalization: the first step moves each multiplier by its own scale
    f = _solve_f_vec(lam2, lam3, ctx.y1, ctx.kappa)
    g = _solve_g_vec(lam2, ctx.kappa, ctx.g_max)
    r2 = np.clip(_latencies(f, g, ctx) - budget, -10 * ctx.deadline,
                 10 * ctx.deadline)
    r3 = f.sum() - ctx.f_max
    # floor the normalizing residuals so a near-feasible start cannot turn
    # into an unbounded step scale
    nu2 = lam2 / np.maximum(np.abs(r2), 0.01 * ctx.deadline)
    lam3_scale = 2.0 * ctx.kappa * (ctx.f_max / k) * float(np.median(ctx.y1))
    nu3 = lam3_scale / max(abs(r3), 0.01 * ctx.f_max)

    best_dual = -np.inf
    stall = 0
    for it in range(1, min(ascent_iters, max_iter) + 1):
        f = _solve_f_vec(lam2, lam3, ctx.y1, ctx.kappa)
        g = _solve_g_vec(lam2, ctx.kappa, ctx.g_max)
        r2 = np.clip(_latencies(f, g, ctx) - budget,
                     -10 * ctx.deadline, 10 * ctx.deadline)
        r3 = f.sum() - ctx.f_max
        q = dual_value(lam2, lam3, ctx)
        state.dual_history.append(q)
        state.residual_history.append((float(np.max(np.abs(r2))), float(r3)))
        state.iterations = it

        resid_ok = (np.all(r2 <= RESIDUAL_RTOL * ctx.deadline)
                    and r3 <= RESIDUAL_RTOL * ctx.f_max
                    and np.all(np.abs(lam2 * r2) <= RESIDUAL_RTOL
                               * np.maximum(1.0, lam2 * ctx.deadline))
                    and abs(lam3 * r3) <= RESIDUAL_RTOL * max(1.0, lam3 * ctx.f_max))
        if q > best_dual + DUAL_PROGRESS_RTOL * max(abs(best_dual), 1e-300):
            best_dual = max(best_dual, q)
            stall = 0
        else:
            stall += 1
        if resid_ok and stall >= 1:
            break
        if stall >= 50:
            break

        step = 1.0 / math.sqrt(it)
        lam2 = np.minimum(np.maximum(lam2 + step * nu2 * r2, 0.0), 1e200)
        lam3 = min(max(lam3 + step * nu3 * r3, 0.0), 1e200)

    # exact polish: pins each latency to its budget and the f-sum to the
    # budget multiplier, certifying complementary slackness
    lam2, lam3 = _refine(ctx)
    f = _solve_f_vec(lam2, lam3, ctx.y1, ctx.kappa)
    g = _solve_g_vec(lam2, ctx.kappa, ctx.g_max)
    state.lambda2 = lam2
    state.lambda3 = float(lam3)
    state.dual_history.append(dual_value(lam2, lam3, ctx))
    state.deadline_inactive = lam2 <= 0.0
    state.iterations += 1

    # feasibility repair (rarely needed after the polish)
    lat = _latencies(f, g, ctx)
    if f.sum() > ctx.f_max:
        f *= ctx.f_max / f.sum()
        lat = _latencies(f, g, ctx)
    if np.any(lat > budget):
        if f.sum() < ctx.f_max:
            f *= ctx.f_max / f.sum()
            lat = _latencies(f, g, ctx)
        over = lat > budget
        if np.any(over):
            slack = budget - ctx.y1 / f
            g = np.where(over & (slack > 0),
                         np.minimum(ctx.y2 / np.maximum(slack, 1e-300), ctx.g_max),
                         g)
    return f, g, state
