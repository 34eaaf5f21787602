"""Experiment layer: default scenario, config files, sweeps, CSV/plot output.

Configs are YAML with field names mirroring SystemConfig/UserProfile exactly
(units in the suffixes). Powers given in dBm by sweep grids are converted at
this boundary; everything below runs in SI units.
"""

from __future__ import annotations

import csv
import io
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
import yaml

from .model import SystemConfig, UserProfile, generate_channels

__all__ = [
    "SweepSpec",
    "ResultRow",
    "default_config",
    "load_config",
    "save_config",
    "load_sweep_spec",
    "dbm_to_w",
    "apply_sweep_value",
    "run_sweep",
    "emit_outputs",
    "CSV_HEADER",
]

SWEEP_PARAMS = ("p_max_dbm", "bandwidth_hz", "data_bits", "g_max_hz")

CSV_HEADER = ("scheme,seed,param,value,total_energy_j,e1_j,e2_j,e20_j,e3_j,"
              "outer_iters,feasible,wall_ms")


def dbm_to_w(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def default_config(seed: int = 0, num_users: int = 5, num_antennas: int = 4,
                   **overrides) -> SystemConfig:
    """Representative scenario: 20 MHz cell, 5 users at 50-500 m, 10 Mbit graphs.

    User distances are drawn uniformly in [0.05, 0.5] km from ``seed``;
    graph sizes and base cycle counts spread +-20% across users so the users
    are not interchangeable. Field overrides are applied on top.
    """
    rng = np.random.default_rng(seed)
    distances = rng.uniform(0.05, 0.5, size=num_users)
    spread = np.linspace(0.8, 1.2, num_users) if num_users > 1 else np.array([1.0])
    users = tuple(
        UserProfile(
            distance_km=float(distances[k]),
            graph_bits=1e7 * float(spread[k]),
            base_cycles=1e9 * float(spread[k]),
            c1=1e8, c2=0.5, c3=2, c4=1e8, c5=1.0,
            gamma_min=0.3,
            g_max_hz=2e9,
        )
        for k in range(num_users)
    )
    cfg = SystemConfig(
        num_users=num_users,
        num_antennas=num_antennas,
        bandwidth_hz=20e6,
        noise_density_dbm_hz=-174.0,
        p_max_w=dbm_to_w(30.0),
        f_max_hz=20e9,
        kappa=1e-28,
        deadline_s=2.0,
        knowledge_bits=5e5,
        users=users,
    )
    if overrides:
        cfg = replace(cfg, **overrides)
    return cfg


# ---------------------------------------------------------------------------
# Config file round trip
# ---------------------------------------------------------------------------

_USER_FIELDS = ("distance_km", "graph_bits", "base_cycles", "c1", "c2", "c3",
                "c4", "c5", "gamma_min", "g_max_hz")
_CFG_FIELDS = ("num_users", "num_antennas", "bandwidth_hz",
               "noise_density_dbm_hz", "p_max_w", "f_max_hz", "kappa",
               "deadline_s", "knowledge_bits")


def config_to_dict(cfg: SystemConfig) -> dict:
    d = {name: getattr(cfg, name) for name in _CFG_FIELDS}
    d["users"] = [{f: getattr(u, f) for f in _USER_FIELDS} for u in cfg.users]
    return d


def config_from_dict(d: dict) -> SystemConfig:
    users = tuple(UserProfile(**{f: u[f] for f in _USER_FIELDS})
                  for u in d["users"])
    kwargs = {name: d[name] for name in _CFG_FIELDS}
    return SystemConfig(users=users, **kwargs)


def save_config(cfg: SystemConfig, path: str) -> None:
    with open(path, "w") as fh:
        yaml.safe_dump(config_to_dict(cfg), fh, sort_keys=False)


def load_config(path: str) -> SystemConfig:
    with open(path) as fh:
        return config_from_dict(yaml.safe_load(fh))
