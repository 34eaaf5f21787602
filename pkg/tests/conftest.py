import math

import numpy as np
import pytest

from rsenergy.model import Allocation, ChannelSet, SystemConfig, UserProfile


def make_profile(**overrides) -> UserProfile:
    base = dict(distance_km=0.1, graph_bits=1e7, base_cycles=1e9,
                c1=1e8, c2=0.5, c3=2, c4=1e8, c5=1.0,
                gamma_min=0.3, g_max_hz=2e9)
    base.update(overrides)
    return UserProfile(**base)


def make_config(num_users=1, num_antennas=2, bandwidth_hz=2e7,
                sigma2_w=None, profiles=None, **overrides) -> SystemConfig:
    """Small hand-built config; sigma2_w sets the full-band noise power."""
    if sigma2_w is None:
        density = -174.0
    else:
        density = 10.0 * math.log10(sigma2_w / bandwidth_hz) + 30.0
    if profiles is None:
        profiles = tuple(make_profile() for _ in range(num_users))
    base = dict(num_users=num_users, num_antennas=num_antennas,
                bandwidth_hz=bandwidth_hz, noise_density_dbm_hz=density,
                p_max_w=1.0, f_max_hz=20e9, kappa=1e-28, deadline_s=2.0,
                knowledge_bits=5e5, users=tuple(profiles))
    base.update(overrides)
    return SystemConfig(**base)


def make_allocation(cfg: SystemConfig, w, p, a, rho=None, f=None, g=None) -> Allocation:
    k = cfg.num_users
    return Allocation(
        rho=np.full(k, 0.5) if rho is None else np.asarray(rho, float),
        f=np.full(k, 1e9) if f is None else np.asarray(f, float),
        g=np.full(k, 1e9) if g is None else np.asarray(g, float),
        p=np.asarray(p, float),
        a=np.asarray(a, float),
        w=np.asarray(w, complex),
    )


@pytest.fixture
def default_cfg():
    from rsenergy.harness import default_config
    return default_config(seed=0)
