"""Request and response bodies for the HTTP service.

Exact rationals travel as ``{"num", "den"}`` objects and floating-point
values as plain JSON numbers, so a client can tell the two apart. Numeric
parameters are accepted as strings (``"1/2"``, ``"0.05"``) or ints and are
parsed exactly on the server; sending a JSON float opts into the inexact
float path.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Any, Optional, Union

from pydantic import BaseModel

from ..sweeps import (
    DEFAULT_ALPHA_SPEC,
    DEFAULT_K_SPEC,
    DEFAULT_M_SPEC,
    DEFAULT_N_SPEC,
)

NumberIn = Union[int, float, str]


class Rat(BaseModel):
    """An exact rational on the wire."""

    num: int
    den: int


Wire = Union[Rat, float, int, None]


def wire(value: Any) -> Any:
    """Convert a computed value to its wire form."""
    if isinstance(value, Fraction):
        return Rat(num=value.numerator, den=value.denominator)
    return value


def wire_row(row: dict) -> dict:
    return {key: wire(value) for key, value in row.items()}


class HealthResponse(BaseModel):
    status: str
    version: str


class ComputeRequest(BaseModel):
    k: int
    n: int
    m: NumberIn
    alpha: NumberIn


class ComputeResponse(BaseModel):
    k: int
    n: int
    m: Wire
    gamma: Wire
    cum_gamma: Wire
    alpha: Wire
    regime: str
    eta: Optional[int]
    time: Wire
    dof: Wire
    lower_bound: Wire
    argmax_s: int
    gap: Wire
    delta: Wire  # closed-form CSIT savings; null when Gamma > 1


class SweepRequest(BaseModel):
    k_spec: str
    n_spec: str = DEFAULT_N_SPEC
    m_spec: str = DEFAULT_M_SPEC
    alpha_spec: str = DEFAULT_ALPHA_SPEC
    threads: int = 1


class SweepResponse(BaseModel):
    header: list[str]
    count: int
    rows: list[dict[str, Any]]
    csv: str


class GapAuditRequest(BaseModel):
    k_spec: str = DEFAULT_K_SPEC
    n_spec: str = DEFAULT_N_SPEC
    m_spec: str = DEFAULT_M_SPEC
    alpha_spec: str = DEFAULT_ALPHA_SPEC
    threads: int = 1
    large_k: bool = False


class GapAuditResponse(BaseModel):
    points: int
    max_gap: Wire
    max_gap_decimal: float
    argmax: dict[str, Any]
    passed: bool  # max gap < 4
    large_k: Optional[list[dict[str, Any]]] = None


class DeltaRequest(BaseModel):
    k: int
    n: int
    m: NumberIn
    alpha_spec: str = DEFAULT_ALPHA_SPEC
    tol: float = 1e-9


class DeltaResponse(BaseModel):
    rows: list[dict[str, Any]]
    disagreements: int
    note: str


class SuggestFRequest(BaseModel):
    k: int
    n: int
    m: NumberIn
    alpha: NumberIn


class SuggestFResponse(BaseModel):
    f: int


class SimulateRequest(BaseModel):
    k: int
    n: int
    m: NumberIn
    alpha: NumberIn
    f: Optional[int] = None
    seed: int = 0
    requests: Optional[list[int]] = None
    trace: bool = False


class SimulateResponse(BaseModel):
    k: int
    n: int
    m: Wire
    f: int
    alpha: Wire
    seed: int
    requests: list[int]
    airtime: Wire
    expected_time: Wire
    airtime_matches: bool
    decoded_ok: bool
    unit_counts: dict[str, int]
    coverage: dict[str, int]
    durations: list[Wire]
    trace: Optional[list[str]] = None


class ScheduleRequest(BaseModel):
    k: int
    n: int
    m: NumberIn
    alpha: NumberIn
    f: Optional[int] = None


class UnitModel(BaseModel):
    phase: int
    kind: str
    users: list[int]
    bits: int
    offset: int


class ScheduleResponse(BaseModel):
    k: int
    n: int
    m: Wire
    f: int
    alpha: Wire
    subfile_bits: int
    cached_bits_per_user: int
    zf_bits_per_user: int
    common_bits_per_user: int
    durations: list[Wire]
    total: Wire
    units: list[UnitModel]
