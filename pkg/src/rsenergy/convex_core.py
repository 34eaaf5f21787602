"""Log-barrier interior-point solver for smooth convex programs.

Programs are given by oracles: an objective returning (value, gradient,
Hessian) and inequality constraints g_i(x) <= 0 grouped into blocks. A block
evaluates several constraints of the same family at once (values, Jacobian,
and a weighted Hessian sum), which keeps the Newton assembly vectorized; a
single-constraint oracle is just a block of size one.

The solver minimizes t*f0(x) - sum(log(-g_i(x))) by damped Newton with an
Armijo backtracking line search and a stay-strictly-feasible safeguard,
multiplying t by 10 per stage until the surrogate duality gap m/t clears the
tolerance. Every iterate is strictly feasible by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ConvexProgram",
    "SolveReport",
    "KktResiduals",
    "LinearBlock",
    "ScalarConstraint",
    "solve",
    "check_kkt",
]

BARRIER_MU = 10.0
ARMIJO_ALPHA = 0.25
MAX_NEWTON_PER_STAGE = 200
MAX_STAGES = 60


class LinearBlock:
    """Rows G x - d <= 0."""

    def __init__(self, G, d):
        self.G = np.asarray(G, float)
        self.d = np.asarray(d, float)
        self.m = self.G.shape[0]

    def values(self, x):
        return self.G @ x - self.d

    def jacobian(self, x):
        return self.G

    def add_weighted_hessian(self, x, w, out):
        pass  # linear: no curvature


class ScalarConstraint:
    """Single smooth constraint from (value, gradient, Hessian) callables."""

    m = 1

    def __init__(self, value, grad, hess):
        self._value = value
        self._grad = grad
        self._hess = hess

    def values(self, x):
        return np.array([self._value(x)])

    def jacobian(self, x):
        return self._grad(x)[None, :]

    def add_weighted_hessian(self, x, w, out):
        out += w[0] * self._hess(x)


@dataclass
class ConvexProgram:
    """Smooth convex program: objective oracle, constraint blocks, start."""

    n: int
    objective: object           # callable x -> (value, grad, hess)
    constraints: list
    x0: np.ndarray
    bounds: tuple | None = None  # optional (lo, hi) arrays, np.inf allowed

    def __post_init__(self):
        self.x0 = np.asarray(self.x0, float)
        if self.x0.shape != (self.n,):
            raise ValueError("x0 must have length n")
        self.constraints = list(self.constraints)
        if self.bounds is not None:
            lo, hi = (np.asarray(b, float) for b in self.bounds)
            rows, rhs = [], []
            for i in range(self.n):
                if np.isfinite(lo[i]):
                    e = np.zeros(self.n); e[i] = -1.0
                    rows.append(e); rhs.append(-lo[i])
                if np.isfinite(hi[i]):
                    e = np.zeros(self.n); e[i] = 1.0
                    rows.append(e); rhs.append(hi[i])
            if rows:
                self.constraints.append(LinearBlock(np.array(rows), np.array(rhs)))
            self.bounds = None

    @property
    def num_constraints(self) -> int:
        return sum(b.m for b in self.constraints)

    def constraint_values(self, x) -> np.ndarray:
        if not self.constraints:
            return np.empty(0)
        return np.concatenate([b.values(x) for b in self.constraints])


@dataclass
class SolveReport:
    x: np.ndarray
    objective: float
    max_violation: float
    barrier_stages: int
    newton_steps: int
    status: str                  # optimal | max-iter | numerical-failure
    t_final: float
    gap: float
    psi_trace: list = field(default_factory=list)  # per-stage merit values


@dataclass
class KktResiduals:
    stationarity: float
    complementarity: np.ndarray


def _merit(program, x, t):
    """t*f0 + barrier, or +inf outside the strict interior."""
    g = program.constraint_values(x)
    if g.size and np.max(g) >= 0.0:
        return np.inf, None
    f, _, _ = program.objective(x)
    return t * f + (-np.sum(np.log(-g)) if g.size else 0.0), g


def _newton_system(program, x, t):
    f, grad_f, hess_f = program.objective(x)
    grad = t * grad_f
    hess = t * hess_f.copy()
    for block in program.constraints:
        g = block.values(x)
        J = block.jacobian(x)
        s = -g  # slacks, strictly positive
        grad += J.T @ (1.0 / s)
        hess += (J / (s ** 2)[:, None]).T @ J
        block.add_weighted_hessian(x, 1.0 / s, hess)
    return f, grad, hess


def _solve_spd(hess, rhs):
    """Cholesky solve with a Levenberg-style diagonal boost on failure."""
    boost = 0.0
    scale = max(float(np.trace(hess)) / hess.shape[0], 1e-300)
    for _ in range(25):
        try:
            L = np.linalg.cholesky(hess + boost * np.eye(hess.shape[0]))
        except np.linalg.LinAlgError:
            boost = 1e-12 * scale if boost == 0.0 else boost * 100.0
            continue
        y = np.linalg.solve(L, rhs)
        return np.linalg.solve(L.T, y), True
    return None, False


def solve(program: ConvexProgram, tolerance: float = 1e-7) -> SolveReport:
    """Barrier solve to a surrogate duality gap of m/t <= tolerance."""
    x = program.x0.copy()
    m = program.num_constraints
    g0 = program.constraint_values(x)
    if g0.size and np.max(g0) >= 0.0:
        raise ValueError(
            f"start point not strictly feasible: max g = {np.max(g0):.3e}")

    f0, _, _ = program.objective(x)
    t = max(1.0, m / max(abs(f0), 1e-12)) if m else 1.0
    stages = 0
    steps = 0
    status = "max-iter"
    trace = []

    while stages < MAX_STAGES:
        stages += 1
        stage_trace = []
        psi, _ = _merit(program, x, t)
        prev_decrement = np.inf
        for _ in range(MAX_NEWTON_PER_STAGE):
            fval, grad, hess = _newton_system(program, x, t)
            d, ok = _solve_spd(hess, -grad)
            if not ok:
                return SolveReport(x=x, objective=fval,
                                   max_violation=_violation(program, x),
                                   barrier_stages=stages, newton_steps=steps,
                                   status="numerical-failure", t_final=t,
                                   gap=m / t if m else 0.0, psi_trace=trace)
            decrement = -float(grad @ d)
            if decrement / 2.0 <= 1e-12:
                break
            if decrement <= 1e-2 and decrement > 0.5 * prev_decrement:
                break  # float-noise floor: quadratic progress has stalled
            prev_decrement = decrement
            if decrement <= 1e-2:
                # quadratic-convergence region: full Newton steps; the merit
                # improvement here is below float noise, so Armijo would stall
                s = 1.0
                for _ in range(60):
                    g_cand = program.constraint_values(x + s * d)
                    if not g_cand.size or np.max(g_cand) < 0.0:
                        break
                    s *= 0.5
                x = x + s * d
                psi, _ = _merit(program, x, t)
            else:
                # damped phase: stay strictly feasible, then Armijo
                s = 1.0
                for _ in range(80):
                    cand_psi, _ = _merit(program, x + s * d, t)
                    if np.isfinite(cand_psi) and \
                            cand_psi <= psi - ARMIJO_ALPHA * s * decrement:
                        break
                    s *= 0.5
                else:
                    break
                x = x + s * d
                psi = cand_psi
            steps += 1
            stage_trace.append(psi)
        trace.append(stage_trace)

        fval, _, _ = program.objective(x)
        gap = m / t if m else 0.0
        if gap <= tolerance and gap <= 1e-7 * (1.0 + abs(fval)):
            status = "optimal"
            break
        t *= BARRIER_MU

    fval, _, _ = program.objective(x)
    return SolveReport(x=x, objective=float(fval),
                       max_violation=_violation(program, x),
                       barrier_stages=stages, newton_steps=steps,
                       status=status, t_final=t, gap=m / t if m else 0.0,
                       psi_trace=trace)


def _violation(program, x) -> float:
    g = program.constraint_values(x)
    return float(max(0.0, np.max(g))) if g.size else 0.0


def check_kkt(program: ConvexProgram, point, barrier_t: float) -> KktResiduals:
    """Stationarity and complementarity with the barrier multipliers.

    mu_i = 1 / (t * (-g_i)) are the interior-point estimates; at the solution
    each complementarity product equals 1/t.
    """
    x = np.asarray(point, float)
    _, grad_f, _ = program.objective(x)
    r = grad_f.copy()
    comps = []
    for block in program.constraints:
        g = block.values(x)
        J = block.jacobian(x)
        mu = 1.0 / (barrier_t * (-g))
        r += J.T @ mu
        comps.append(mu * (-g))
    comp = np.concatenate(comps) if comps else np.empty(0)
    return KktResiduals(stationarity=float(np.linalg.norm(r)),
                        complementarity=comp)
