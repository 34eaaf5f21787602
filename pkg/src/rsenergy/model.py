"""System model for a multi-antenna downlink doing rate-split semantic delivery.

One base station with N antennas serves K single-antenna users. Each user's
payload is a semantically extracted fraction of a large source; the shared
knowledge update rides on the common (rate-split) stream while per-user
payloads go out on private streams. This module holds the domain types and
every closed-form physical quantity: Shannon-type rates, per-user timing,
communication + computation energies, and constraint residuals.

All quantities are SI: Hz, W, s, bits, CPU cycles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "UserProfile",
    "SystemConfig",
    "ChannelSet",
    "Allocation",
    "TimingBreakdown",
    "EnergyBreakdown",
    "FeasibilityReport",
    "extraction_cycles",
    "recovery_cycles",
    "common_rate_per_user",
    "common_rate",
    "private_rate",
    "rates",
    "timing",
    "energy",
    "feasibility",
    "generate_channels",
    "pathloss_db",
]

# Relative tolerance used by the feasibility verdict.
FEAS_RTOL = 1e-6


@dataclass(frozen=True)
class UserProfile:
    """Static per-user parameters: geometry, semantic workload, cost curves.

    The extraction cost in cycles is ``base_cycles + c1*(rho - c2)**c3`` and
    the recovery cost is ``c4 * rho**(-c5)``; ``gamma_min`` is the smallest
    extraction ratio that still meets the user's accuracy floor.
    """

    distance_km: float
    graph_bits: float          # total extractable semantic payload Z
    base_cycles: float         # rho-independent graph computation cycles
    c1: float
    c2: float
    c3: int                    # even integer >= 2, keeps the cost convex
    c4: float
    c5: float
    gamma_min: float
    g_max_hz: float

    def __post_init__(self):
        if not (0.0 < self.c2 < 1.0):
            raise ValueError(f"c2 must lie in (0,1), got {self.c2}")
        if self.c3 < 2 or self.c3 % 2 != 0:
            raise ValueError(f"c3 must be an even integer >= 2, got {self.c3}")
        for name in ("distance_km", "graph_bits", "base_cycles", "c1", "c4",
                     "c5", "g_max_hz"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not (0.0 < self.gamma_min <= 1.0):
            raise ValueError(f"gamma_min must lie in (0,1], got {self.gamma_min}")


@dataclass(frozen=True)
class SystemConfig:
    """Network-wide constants plus the per-user semantic profiles."""

    num_users: int
    num_antennas: int
    bandwidth_hz: float
    noise_density_dbm_hz: float
    p_max_w: float              # total transmit power budget
    f_max_hz: float             # BS compute budget (cycles/s), shared by users
    kappa: float                # effective switched capacitance
    deadline_s: float
    knowledge_bits: float       # size K0 of the common-knowledge update
    users: tuple[UserProfile, ...]

    def __post_init__(self):
        if self.num_users < 1 or self.num_antennas < 1:
            raise ValueError("num_users and num_antennas must be >= 1")
        for name in ("bandwidth_hz", "p_max_w", "f_max_hz", "kappa",
                     "deadline_s", "knowledge_bits"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if len(self.users) != self.num_users:
            raise ValueError(
                f"expected {self.num_users} user profiles, got {len(self.users)}")

    @property
    def noise_power_w(self) -> float:
        """Receiver noise power over the full band: density (dBm/Hz) x B."""
        return 10.0 ** ((self.noise_density_dbm_hz - 30.0) / 10.0) * self.bandwidth_hz

    # Convenience views used throughout the solvers.
    @property
    def graph_bits(self) -> np.ndarray:
        return np.array([u.graph_bits for u in self.users])

    @property
    def gamma_min(self) -> np.ndarray:
        return np.array([u.gamma_min for u in self.users])

    @property
    def g_max_hz(self) -> np.ndarray:
        return np.array([u.g_max_hz for u in self.users])


@dataclass(frozen=True, eq=False)
class ChannelSet:
    """Complex downlink channel vectors, one length-N row per user."""

    h: np.ndarray  # (K, N) complex128

    def __post_init__(self):
        h = np.asarray(self.h, dtype=np.complex128)
        object.__setattr__(self, "h", h)
        if h.ndim != 2:
            raise ValueError("h must be a (K, N) matrix")
        if not np.all(np.isfinite(h.real)) or not np.all(np.isfinite(h.imag)):
            raise ValueError("channel entries must be finite")
        if np.any(np.all(h == 0, axis=1)):
            raise ValueError("all-zero channel vector")

    @property
    def num_users(self) -> int:
        return self.h.shape[0]


@dataclass(eq=False)
class Allocation:
    """One full decision point of the optimizer.

    Index 0 of ``p``, ``a`` and ``w`` belongs to the common stream; indices
    1..K are the private streams. Beamformers are unit-norm rows.
    """

    rho: np.ndarray   # (K,)   extraction ratios in (0, 1]
    f: np.ndarray     # (K,)   BS cycles/s assigned to user extraction
    g: np.ndarray     # (K,)   user-side cycles/s
    p: np.ndarray     # (K+1,) transmit powers, p[0] = common
    a: np.ndarray     # (K+1,) a[0] = knowledge rate, a[1:] = common split
    w: np.ndarray     # (K+1, N) complex beamformers, unit norm

    def __post_init__(self):
        self.rho = np.asarray(self.rho, dtype=float)
        self.f = np.asarray(self.f, dtype=float)
        self.g = np.asarray(self.g, dtype=float)
        self.p = np.asarray(self.p, dtype=float)
        self.a = np.asarray(self.a, dtype=float)
        self.w = np.asarray(self.w, dtype=np.complex128)
        k = self.rho.shape[0]
        if self.f.shape != (k,) or self.g.shape != (k,):
            raise ValueError("rho, f, g must share length K")
        if self.p.shape != (k + 1,) or self.a.shape != (k + 1,):
            raise ValueError("p and a must have length K+1")
        if self.w.ndim != 2 or self.w.shape[0] != k + 1:
            raise ValueError("w must be (K+1, N)")

    def copy(self) -> "Allocation":
        return Allocation(self.rho.copy(), self.f.copy(), self.g.copy(),
                          self.p.copy(), self.a.copy(), self.w.copy())


@dataclass(frozen=True, eq=False)
class TimingBreakdown:
    t1: np.ndarray      # extraction time at the BS
    t21: np.ndarray     # private payload transmission time
    t0: float           # knowledge broadcast time K0/a0
    t2: np.ndarray      # downlink time max(t21, t0)
    t3: np.ndarray      # recovery time at the user
    total: np.ndarray   # t1 + t2 + t3


@dataclass(frozen=True, eq=False)
class EnergyBreakdown:
    e1: np.ndarray      # BS computation energy kappa*y1*f^2
    e2: np.ndarray      # private transmission energy t21*p_k
    e20: float          # knowledge broadcast energy t0*p0
    e3: np.ndarray      # user computation energy kappa*y2*g^2
    total: float


@dataclass(frozen=True, eq=False)
class FeasibilityReport:
    """Signed residuals, one entry per constraint; <= 0 means satisfied."""

    deadline: np.ndarray      # t_k - T
    common_rate: float        # a0 + sum(a_k) - min_k c_k
    compute: float            # sum(f) - F_max
    power: float              # sum(p) - P_max
    beam_norm: np.ndarray     # | ||w_k|| - 1 |
    rho_low: np.ndarray       # gamma_k - rho_k
    rho_high: np.ndarray      # rho_k - 1
    g_low: np.ndarray         # -g_k
    g_high: np.ndarray        # g_k - g_max
    f_low: np.ndarray         # -f_k
    p_low: np.ndarray         # -p_k
    a_low: np.ndarray         # -a_k
    feasible: bool


# ---------------------------------------------------------------------------
# Semantic computation cost curves
# ---------------------------------------------------------------------------

def extraction_cycles(rho, profile: UserProfile):
    """Cycles to extract the rho-fraction payload: y3 + c1*(rho - c2)**c3."""
    r = np.asarray(rho, dtype=float)
    if np.any(r <= 0.0) or np.any(r > 1.0):
        raise ValueError(f"rho must lie in (0,1], got {rho}")
    out = profile.base_cycles + profile.c1 * (r - profile.c2) ** profile.c3
    return float(out) if np.isscalar(rho) else out


def recovery_cycles(rho, profile: UserProfile):
    """Cycles for the user to rebuild the source: c4 * rho**(-c5)."""
    r = np.asarray(rho, dtype=float)
    if np.any(r <= 0.0):
        raise ValueError(f"rho must be positive, got {rho}")
    out = profile.c4 * r ** (-profile.c5)
    return float(out) if np.isscalar(rho) else out


# ---------------------------------------------------------------------------
# Rates
# ---------------------------------------------------------------------------

def _gains(alloc: Allocation, channels: ChannelSet) -> np.ndarray:
    """|h_k^H w_j|^2 for all users k (rows) and streams j (columns, 0..K)."""
    return np.abs(channels.h.conj() @ alloc.w.T) ** 2


def common_rate_per_user(alloc: Allocation, channels: ChannelSet,
                         cfg: SystemConfig, k: int) -> float:
    """Rate at which user k (0-based) can decode the common stream.

    Every private stream counts as interference: the common message is
    decoded first, before any cancellation.
    """
    gains = _gains(alloc, channels)[k]
    sig = alloc.p[0] * gains[0]
    interf = float(np.dot(alloc.p[1:], gains[1:]))
    return cfg.bandwidth_hz * math.log2(1.0 + sig / (interf + cfg.noise_power_w))


def common_rate(alloc: Allocation, channels: ChannelSet, cfg: SystemConfig) -> float:
    """Decodable-by-all common rate: the minimum over users."""
    return min(common_rate_per_user(alloc, channels, cfg, k)
               for k in range(cfg.num_users))


def private_rate(alloc: Allocation, channels: ChannelSet,
                 cfg: SystemConfig, k: int) -> float:
    """Private-stream rate of user k after the common stream is removed."""
    gains = _gains(alloc, channels)[k]
    sig = alloc.p[1 + k] * gains[1 + k]
    interf = float(np.dot(alloc.p[1:], gains[1:])) - sig
    return cfg.bandwidth_hz * math.log2(1.0 + sig / (interf + cfg.noise_power_w))


def rates(alloc: Allocation, channels: ChannelSet,
          cfg: SystemConfig) -> tuple[np.ndarray, float, np.ndarray]:
    """All rates at once: (per-user common c_k, min common c0, private r_k)."""
    gains = _gains(alloc, channels)
    sig0 = alloc.p[0] * gains[:, 0]
    interf_all = gains[:, 1:] @ alloc.p[1:]
    c = cfg.bandwidth_hz * np.log2(1.0 + sig0 / (interf_all + cfg.noise_power_w))
    sig_k = alloc.p[1:] * np.diag(gains[:, 1:])
    r = cfg.bandwidth_hz * np.log2(
        1.0 + sig_k / (interf_all - sig_k + cfg.noise_power_w))
    return c, float(c.min()), r


# ---------------------------------------------------------------------------
# Timing and energy
# ---------------------------------------------------------------------------

def _semantic_cycles(alloc: Allocation, cfg: SystemConfig):
    y1 = np.array([extraction_cycles(alloc.rho[k], u)
                   for k, u in enumerate(cfg.users)])
    y2 = np.array([recovery_cycles(alloc.rho[k], u)
                   for k, u in enumerate(cfg.users)])
    return y1, y2


def timing(alloc: Allocation, channels: ChannelSet, cfg: SystemConfig) -> TimingBreakdown:
    """Per-user completion times: extract, transmit (incl. broadcast), recover."""
    for name, arr in (("f", alloc.f), ("g", alloc.g)):
        if np.any(arr == 0.0):
            k = int(np.argmax(arr == 0.0))
            raise ZeroDivisionError(f"{name}[{k}] is zero; time would diverge")
    if alloc.a[0] == 0.0:
        raise ZeroDivisionError("a[0] is zero; knowledge broadcast never completes")

    y1, y2 = _semantic_cycles(alloc, cfg)
    _, _, r = rates(alloc, channels, cfg)
    payload_rate = r + alloc.a[1:]
    if np.any(payload_rate == 0.0):
        k = int(np.argmax(payload_rate == 0.0))
        raise ZeroDivisionError(f"r[{k}] + a[{k+1}] is zero; payload never sent")

    t1 = y1 / alloc.f
    t21 = alloc.rho * cfg.graph_bits / payload_rate
    t0 = cfg.knowledge_bits / alloc.a[0]
    t2 = np.maximum(t21, t0)
    t3 = y2 / alloc.g
    return TimingBreakdown(t1=t1, t21=t21, t0=float(t0), t2=t2, t3=t3,
                           total=t1 + t2 + t3)


def energy(alloc: Allocation, channels: ChannelSet, cfg: SystemConfig) -> EnergyBreakdown:
    """Total communication + computation energy and its breakdown."""
    t = timing(alloc, channels, cfg)
    y1, y2 = _semantic_cycles(alloc, cfg)
    e1 = cfg.kappa * y1 * alloc.f ** 2
    e2 = t.t21 * alloc.p[1:]
    e20 = t.t0 * alloc.p[0]
    e3 = cfg.kappa * y2 * alloc.g ** 2
    total = float(np.sum(e1 + e2 + e3) + e20)
    return EnergyBreakdown(e1=e1, e2=e2, e20=float(e20), e3=e3, total=total)


def feasibility(alloc: Allocation, channels: ChannelSet,
                cfg: SystemConfig) -> FeasibilityReport:
    """Signed constraint residuals; infeasibility is reported, never raised."""
    c, c0, _ = rates(alloc, channels, cfg)
    try:
        t = timing(alloc, channels, cfg)
        deadline = t.total - cfg.deadline_s
    except ZeroDivisionError:
        deadline = np.full(cfg.num_users, np.inf)

    common = float(alloc.a.sum() - c0)
    compute = float(alloc.f.sum() - cfg.f_max_hz)
    power = float(alloc.p.sum() - cfg.p_max_w)
    beam_norm = np.abs(np.linalg.norm(alloc.w, axis=1) - 1.0)
    rep = FeasibilityReport(
        deadline=deadline,
        common_rate=common,
        compute=compute,
        power=power,
        beam_norm=beam_norm,
        rho_low=cfg.gamma_min - alloc.rho,
        rho_high=alloc.rho - 1.0,
        g_low=-alloc.g,
        g_high=alloc.g - cfg.g_max_hz,
        f_low=-alloc.f,
        p_low=-alloc.p,
        a_low=-alloc.a,
        feasible=False,
    )
    tol = FEAS_RTOL
    ok = (
        np.all(deadline <= tol * cfg.deadline_s)
        and common <= tol * max(1.0, c0)
        and compute <= tol * cfg.f_max_hz
        and power <= tol * cfg.p_max_w
        and np.all(beam_norm <= tol)
        and np.all(rep.rho_low <= tol) and np.all(rep.rho_high <= tol)
        and np.all(rep.g_low < 0) and np.all(rep.g_high <= tol * cfg.g_max_hz)
        and np.all(rep.f_low <= 0) and np.all(rep.p_low <= 0)
        and np.all(rep.a_low <= 0)
    )
    object.__setattr__(rep, "feasible", bool(ok))
    return rep


# ---------------------------------------------------------------------------
# Channel generation
# ---------------------------------------------------------------------------

def pathloss_db(distance_km) -> np.ndarray:
    """Urban macro pathloss in dB, distance in km."""
    d = np.asarray(distance_km, dtype=float)
    if np.any(d <= 0):
        raise ValueError("distances must be positive")
    return 128.1 + 37.6 * np.log10(d)


def generate_channels(cfg: SystemConfig, distances_km=None, seed: int = 0,
                      shadowing_std_db: float = 4.0) -> ChannelSet:
    """Draw one channel realization: pathloss, log-normal shadowing, Rayleigh.

    h_k = sqrt(10^(-(PL_dB + X_k)/10)) * u_k with X_k ~ N(0, shadowing_std_db)
    and u_k i.i.d. standard circularly-symmetric complex Gaussian. Fully
    deterministic for a given seed; pass shadowing_std_db=0 to disable
    shadowing.
    """
    if distances_km is None:
        distances_km = np.array([u.distance_km for u in cfg.users])
    d = np.asarray(distances_km, dtype=float)
    pl = pathloss_db(d)
    rng = np.random.default_rng(seed)
    shadow = rng.normal(0.0, shadowing_std_db, size=d.shape) if shadowing_std_db > 0 \
        else np.zeros_like(d)
    gain = 10.0 ** (-(pl + shadow) / 10.0)
    n = cfg.num_antennas
    u = (rng.standard_normal((d.shape[0], n))
         + 1j * rng.standard_normal((d.shape[0], n))) / math.sqrt(2.0)
    return ChannelSet(h=np.sqrt(gain)[:, None] * u)
