"""Energy-minimizing resource allocation for rate-splitting semantic downlinks.

A numpy library plus experiment harness: closed-form extraction-ratio and
compute-frequency solvers, a log-barrier convex core driving successive
convex approximation for power/rate/beamforming, and an alternating outer
loop with FDMA/SDMA comparators and sweep tooling.
"""

from .errors import (
    DegenerateIterateError,
    InfeasibleDeadlineError,
    InfeasibleStartError,
)
from .model import (
    Allocation,
    ChannelSet,
    EnergyBreakdown,
    FeasibilityReport,
    SystemConfig,
    TimingBreakdown,
    UserProfile,
    common_rate,
    common_rate_per_user,
    energy,
    extraction_cycles,
    feasibility,
    generate_channels,
    private_rate,
    rates,
    recovery_cycles,
    timing,
)

__version__ = "0.1.0"
