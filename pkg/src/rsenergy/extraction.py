"""Per-user extraction-ratio subproblem, solved in closed form.

With the outer iterate (compute frequencies, powers, rates, beams) frozen,
each user's energy is convex in its extraction ratio rho and the deadline
constraint splits into two regimes at the threshold where the payload
transmission time overtakes the knowledge-broadcast time:

  branch A (transmission-limited): downlink time = Z*rho / (r + a)
  branch B (knowledge-limited):    downlink time = K0 / a0

On each branch the Lagrangian derivative is strictly increasing in rho, so
the stationary ratio comes from bisection, and the deadline multiplier from
an outer bisection that pins the latency to the deadline when it binds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleDeadlineError
from .model import UserProfile

__all__ = [
    "ExtractionContext",
    "ExtractionSolution",
    "BranchNotApplicableError",
    "branch_threshold",
    "objective",
    "latency",
    "branch_latency",
    "stationarity",
    "solve_rho_given_lambda",
    "solve_lambda",
    "solve_extraction",
]

RHO_TOL = 1e-8          # bisection tolerance on rho
LAMBDA_MAX = 1e12       # past this, the deadline is declared unreachable


class BranchNotApplicableError(ValueError):
    """The branch region does not intersect [gamma_min, 1]."""


@dataclass(frozen=True)
class ExtractionContext:
    """Frozen per-user quantities from the current outer iterate."""

    f: float                 # BS cycles/s for this user's extraction
    g: float                 # user-side cycles/s
    p: float                 # private transmit power
    p0: float                # common transmit power
    a: float                 # common-stream rate share of this user
    a0: float                # knowledge-update rate
    r: float                 # private rate at the frozen beams/powers
    profile: UserProfile
    deadline: float
    kappa: float
    knowledge_bits: float

    def __post_init__(self):
        if self.f <= 0 or self.g <= 0 or self.a0 <= 0:
            raise ValueError("f, g and a0 must be positive")
        if self.r + self.a <= 0:
            raise ValueError("r + a must be positive")


@dataclass(frozen=True)
class ExtractionSolution:
    rho: float
    lam: float               # deadline multiplier
    branch: str              # "A" transmission-limited, "B" knowledge-limited
    objective: float
    latency: float


def branch_threshold(ctx: ExtractionContext) -> float:
    """Ratio above which payload transmission dominates the broadcast time.

    May exceed 1 (branch B covers all of [gamma, 1]) or fall below gamma
    (branch A covers all of it).
    """
    z = ctx.profile.graph_bits
    return ctx.knowledge_bits * (ctx.a + ctx.r) / (ctx.a0 * z)


def _cycles(rho, ctx: ExtractionContext):
    pr = ctx.profile
    y1 = pr.base_cycles + pr.c1 * (rho - pr.c2) ** pr.c3
    y2 = pr.c4 * rho ** (-pr.c5)
    return y1, y2


def objective(rho, ctx: ExtractionContext):
    """This user's share of the total energy as a function of rho."""
    y1, y2 = _cycles(np.asarray(rho, dtype=float), ctx)
    z = ctx.profile.graph_bits
    out = (ctx.kappa * ctx.f ** 2 * y1
           + z * rho * ctx.p / (ctx.r + ctx.a)
           + ctx.kappa * y2 * ctx.g ** 2)
    return float(out) if np.isscalar(rho) else out


def latency(rho, ctx: ExtractionContext):
    """True completion time: the downlink term takes the max of both branches."""
    y1, y2 = _cycles(np.asarray(rho, dtype=float), ctx)
    z = ctx.profile.graph_bits
    tx = np.maximum(z * np.asarray(rho, dtype=float) / (ctx.r + ctx.a),
                    ctx.knowledge_bits / ctx.a0)
    out = y1 / ctx.f + tx + y2 / ctx.g
    return float(out) if np.isscalar(rho) else out


def branch_latency(rho: float, branch: str, ctx: ExtractionContext) -> float:
    y1, y2 = _cycles(rho, ctx)
    if branch == "A":
        tx = ctx.profile.graph_bits * rho / (ctx.r + ctx.a)
    else:
        tx = ctx.knowledge_bits / ctx.a0
    return y1 / ctx.f + tx + y2 / ctx.g


def _region(branch: str, ctx: ExtractionContext) -> tuple[float, float]:
    gamma = ctx.profile.gamma_min
    rho_bar = branch_threshold(ctx)
    if branch == "A":
        lo, hi = max(gamma, rho_bar), 1.0
    elif branch == "B":
        lo, hi = gamma, min(rho_bar, 1.0)
    else:
        raise ValueError(f"unknown branch {branch!r}")
    if lo > hi:
        raise BranchNotApplicableError(
            f"branch {branch} region empty (threshold {rho_bar:.4g}, "
            f"gamma {gamma:.4g})")
    return lo, hi


def stationarity(rho: float, lam: float, branch: str,
                 ctx: ExtractionContext) -> float:
    """Derivative of the per-user Lagrangian in rho; strictly increasing.

    Branch A carries the lam * Z/(r+a) transmission-latency slope; branch B
    has a constant broadcast time, so that slope drops out.
    """
    lo, hi = _region(branch, ctx)
    if rho < lo - 1e-12 or rho > hi + 1e-12:
        raise ValueError(f"rho={rho} outside branch {branch} region [{lo}, {hi}]")
    pr = ctx.profile
    z = pr.graph_bits
    d_y1 = pr.c1 * pr.c3 * (rho - pr.c2) ** (pr.c3 - 1)
    d_y2 = -pr.c4 * pr.c5 * rho ** (-pr.c5 - 1)
    val = (ctx.kappa * ctx.f ** 2 * d_y1
           + z * ctx.p / (ctx.r + ctx.a)
           + ctx.kappa * d_y2 * ctx.g ** 2)
    lat_slope = d_y1 / ctx.f + d_y2 / ctx.g
    if branch == "A":
        lat_slope += z / (ctx.r + ctx.a)
    return val + lam * lat_slope


def solve_rho_given_lambda(lam: float, branch: str,
                           ctx: ExtractionContext) -> float:
    """Stationary rho on the branch region, clamped to its endpoints."""
    lo, hi = _region(branch, ctx)
    if stationarity(lo, lam, branch, ctx) >= 0.0:
        return lo
    if stationarity(hi, lam, branch, ctx) <= 0.0:
        return hi
    while hi - lo > RHO_TOL:
        mid = 0.5 * (lo + hi)
        if stationarity(mid, lam, branch, ctx) >= 0.0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def solve_lambda(branch: str, ctx: ExtractionContext,
                 rtol: float = 1e-6) -> tuple[float, float]:
    """Deadline multiplier and its stationary rho for one branch.

    Screens lam=0 first (slack deadline); otherwise doubles an upper bracket
    and bisects until the branch latency sits within rtol*T of the deadline.
    """
    t_max = ctx.deadline
    rho0 = solve_rho_given_lambda(0.0, branch, ctx)
    if branch_latency(rho0, branch, ctx) <= t_max * (1.0 + rtol):
        return 0.0, rho0

    lo, hi = 0.0, 1.0
    rho_hi = solve_rho_given_lambda(hi, branch, ctx)
    while branch_latency(rho_hi, branch, ctx) > t_max:
        lo = hi
        hi *= 2.0
        if hi > LAMBDA_MAX:
            raise InfeasibleDeadlineError(
                f"branch {branch}: no multiplier below {LAMBDA_MAX:g} meets "
                f"the {t_max:g} s deadline")
        rho_hi = solve_rho_given_lambda(hi, branch, ctx)

    lam, rho = hi, rho_hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        rho_mid = solve_rho_given_lambda(mid, branch, ctx)
        lat = branch_latency(rho_mid, branch, ctx)
        if lat > t_max:
            lo = mid
        else:
            hi, lam, rho = mid, mid, rho_mid
        if abs(lat - t_max) <= rtol * t_max:
            return mid, rho_mid
    return lam, rho


def solve_extraction(ctx: ExtractionContext) -> ExtractionSolution:
    """Optimal extraction ratio for one user at the frozen outer iterate.

    Solves both branches where applicable and applies the branch-consistency
    test (the transmission-limited solution must sit at or above the
    threshold, the knowledge-limited one strictly below). If that leaves an
    ambiguity, falls back to evaluating the true objective at the branch
    solutions, the threshold and the interval endpoints, keeping the
    deadline-feasible minimizer; the objective is piecewise convex with a
    single breakpoint, so these points cover the optimum.
    """
    gamma = ctx.profile.gamma_min
    rho_bar = branch_threshold(ctx)
    t_max = ctx.deadline

    candidates = []
    for branch in ("A", "B"):
        try:
            lam, rho = solve_lambda(branch, ctx)
        except BranchNotApplicableError:
            continue
        except InfeasibleDeadlineError:
            continue
        candidates.append((rho, lam, branch))

    if not candidates:
        raise InfeasibleDeadlineError(
            f"extraction: no rho in [{gamma:g}, 1] meets the deadline {t_max:g} s")

    consistent = []
    for rho, lam, branch in candidates:
        if branch == "A" and rho >= rho_bar - 1e-12:
            consistent.append((rho, lam, branch))
        elif branch == "B" and rho < rho_bar:
            consistent.append((rho, lam, branch))

    if len(consistent) == 1:
        rho, lam, branch = consistent[0]
    else:
        # both or neither branch passed: exhaustive check over the closed set
        pool = list(candidates)
        for extra in (min(max(rho_bar, gamma), 1.0), gamma, 1.0):
            pool.append((extra, 0.0, "A" if extra >= rho_bar else "B"))
        feasible = [(objective(r, ctx), r, l, b) for (r, l, b) in pool
                    if latency(r, ctx) <= t_max * (1.0 + 1e-6)]
        if not feasible:
            raise InfeasibleDeadlineError(
                f"extraction: no candidate meets the deadline {t_max:g} s")
        _, rho, lam, branch = min(feasible)

    return ExtractionSolution(rho=float(rho), lam=float(lam), branch=branch,
                              objective=objective(float(rho), ctx),
                              latency=latency(float(rho), ctx))
