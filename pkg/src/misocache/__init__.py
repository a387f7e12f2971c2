"""Cache-aided MISO broadcast toolkit.

Closed-form delivery times and degrees of freedom for K-user broadcast with
per-user caches and mixed (imperfect-current plus delayed) CSIT, converse
bounds and gap audits, a concrete placement/XOR/phase-schedule construction,
and a bit-exact delivery simulator. A FastAPI service exposes everything over
HTTP and the ``misocache`` CLI is a thin client of that service.
"""

__version__ = "0.1.0"

from .core import SystemParams, harmonic, harmonic_general, validate_params
from .analysis import (
    Regime,
    alpha_breakpoint,
    achievable_time,
    achievable_time_large,
    achievable_time_small,
    csit_savings_closed,
    csit_savings_oracle,
    gap,
    lower_bound_time,
    performance_point,
    select_regime,
)

__all__ = [
    "Regime",
    "SystemParams",
    "achievable_time",
    "achievable_time_large",
    "achievable_time_small",
    "alpha_breakpoint",
    "csit_savings_closed",
    "csit_savings_oracle",
    "gap",
    "harmonic",
    "harmonic_general",
    "lower_bound_time",
    "performance_point",
    "select_regime",
    "validate_params",
]
