"""Grid parsing, parameter sweeps, CSV assembly, and audit drivers.

Grid axes are given as compact text specs so the same strings travel
unchanged from the command line through the service API:

* integer specs: ``"4"``, ``"2,5,9"``, ``"2:50"``, ``"2:50:4"`` (inclusive);
* library-size specs: integers or multiples of K such as ``"K,2K,4K"``;
* cache-size specs: rationals or fractions of N/K such as
  ``"0,N/4K,N/2K,3N/4K,N/K"`` (i.e. Gamma in {0, 1/4, 1/2, 3/4, 1});
* alpha specs: rationals, lists, or progressions ``"start:stop:step"``
  evaluated exactly, so ``"0:1:1/20"`` is the 21-point grid {0, 1/20, .., 1}.

Sweep rows are ordered lexicographically by (K, N, M, alpha) and rendered
to a fixed 14-column CSV whose cells are exact ``p/q`` strings whenever the
underlying value is rational, making repeated runs byte-identical.
"""

from __future__ import annotations

import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from .analysis import csit_savings_oracle, performance_point
from .core import Num, ParameterError, SystemParams, validate_params

__all__ = [
    "DEFAULT_ALPHA_SPEC",
    "DEFAULT_K_SPEC",
    "DEFAULT_M_SPEC",
    "DEFAULT_N_SPEC",
    "GapAudit",
    "LARGE_K_VALUES",
    "SWEEP_HEADER",
    "delta_rows",
    "format_cell",
    "gap_audit",
    "large_k_audit",
    "parse_alpha_spec",
    "parse_int_spec",
    "parse_library_spec",
    "parse_cache_spec",
    "rows_to_csv",
    "run_sweep",
]

SWEEP_HEADER = (
    "K", "N", "M", "gamma", "Gamma", "alpha", "regime", "eta",
    "T", "dof", "T_lb", "argmax_s", "gap", "delta",
)

DEFAULT_K_SPEC = "2:50"
DEFAULT_N_SPEC = "K,2K,4K"
DEFAULT_M_SPEC = "0,N/4K,N/2K,3N/4K,N/K"
DEFAULT_ALPHA_SPEC = "0:1:1/20"
LARGE_K_VALUES = (10**3, 10**4, 10**5, 10**6)

_K_MULTIPLE = re.compile(r"^(\d*)[Kk]$")
_N_OVER_K = re.compile(r"^(\d*)[Nn]/(\d*)[Kk]$")


def _tokens(spec: str, what: str) -> list[str]:
    tokens = [t.strip() for t in spec.split(",") if t.strip()]
    if not tokens:
        raise ParameterError(f"{what} spec {spec!r} yields no values")
    return tokens


def _rational(text: str, what: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ParameterError(f"bad {what} value {text!r}") from exc


def parse_int_spec(spec: str, what: str = "integer") -> list[int]:
    """Parse ``"4"``, ``"2,5,9"``, ``"2:50"``, or ``"2:50:4"`` into sorted ints."""
    values: set[int] = set()
    for token in _tokens(spec, what):
        parts = token.split(":")
        try:
            if len(parts) == 1:
                values.add(int(parts[0]))
            elif len(parts) in (2, 3):
                start, stop = int(parts[0]), int(parts[1])
                step = int(parts[2]) if len(parts) == 3 else 1
                if step < 1 or stop < start:
                    raise ValueError
                values.update(range(start, stop + 1, step))
            else:
                raise ValueError
        except ValueError as exc:
            raise ParameterError(f"bad {what} token {token!r}") from exc
    return sorted(values)


def parse_library_spec(spec: str, k: int) -> list[int]:
    """Parse a library-size spec: ints and multiples of K like ``"2K"``."""
    values = set()
    for token in _tokens(spec, "library size"):
        match = _K_MULTIPLE.match(token)
        if match:
            values.add((int(match.group(1)) if match.group(1) else 1) * k)
            continue
        try:
            values.add(int(token))
        except ValueError as exc:
            raise ParameterError(f"bad library size token {token!r}") from exc
    return sorted(values)


def parse_cache_spec(spec: str, k: int, n: int) -> list[Fraction]:
    """Parse a cache-size spec: rationals and N/K fractions like ``"3N/4K"``."""
    values = set()
    for token in _tokens(spec, "cache size"):
        match = _N_OVER_K.match(token)
        if match:
            a = int(match.group(1)) if match.group(1) else 1
            b = int(match.group(2)) if match.group(2) else 1
            if b == 0:
                raise ParameterError(f"bad cache size token {token!r}")
            values.add(Fraction(a * n, b * k))
            continue
        values.add(_rational(token, "cache size"))
    return sorted(values)


def parse_alpha_spec(spec: str) -> list[Fraction]:
    """Parse an alpha spec into sorted exact rationals in [0, 1]."""
    values: set[Fraction] = set()
    for token in _tokens(spec, "alpha"):
        parts = token.split(":")
        if len(parts) == 1:
            values.add(_rational(parts[0], "alpha"))
        elif len(parts) == 3:
            start = _rational(parts[0], "alpha")
            stop = _rational(parts[1], "alpha")
            step = _rational(parts[2], "alpha")
            if step <= 0 or stop < start:
                raise ParameterError(f"bad alpha progression {token!r}")
            value = start
            while value <= stop:
                values.add(value)
                value += step
        else:
            raise ParameterError(
                f"bad alpha token {token!r}; use a value or start:stop:step"
            )
    for value in values:
        if not 0 <= value <= 1:
            raise ParameterError(f"alpha {value} outside [0, 1]")
    return sorted(values)


def format_cell(value) -> str:
    """Render one CSV cell: rationals as p/q, floats via repr, None empty."""
    if value is None:
        return ""
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _point_row(params: SystemParams, alpha: Num) -> dict:
    point = performance_point(params, alpha)
    return {
        "K": params.k,
        "N": params.n,
        "M": params.m,
        "gamma": params.gamma,
        "Gamma": params.cum_gamma,
        "alpha": point.alpha,
        "regime": point.regime.kind,
        "eta": point.regime.eta,
        "T": point.time,
        "dof": point.dof,
        "T_lb": point.lower_bound,
        "argmax_s": point.argmax_s,
        "gap": point.gap,
        "delta": point.savings,
    }


def _grid(k_spec: str, n_spec: str, m_spec: str, alpha_spec: str):
    alphas = parse_alpha_spec(alpha_spec)
    for k in parse_int_spec(k_spec, "K"):
        for n in parse_library_spec(n_spec, k):
            for m in parse_cache_spec(m_spec, k, n):
                params = validate_params(k, n, m)
                for alpha in alphas:
                    yield params, alpha


def _evaluate(
    grid: Iterable[tuple[SystemParams, Num]],
    worker: Callable[[tuple[SystemParams, Num]], dict],
    threads: int,
) -> list[dict]:
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(worker, grid))
    return [worker(item) for item in grid]


def run_sweep(
    k_spec: str,
    n_spec: str = DEFAULT_N_SPEC,
    m_spec: str = DEFAULT_M_SPEC,
    alpha_spec: str = DEFAULT_ALPHA_SPEC,
    threads: int = 1,
) -> list[dict]:
    """Evaluate the full grid; rows come back sorted by (K, N, M, alpha)."""
    return _evaluate(
        _grid(k_spec, n_spec, m_spec, alpha_spec),
        lambda item: _point_row(*item),
        threads,
    )


def rows_to_csv(rows: Sequence[dict]) -> str:
    """Render sweep rows to the fixed-header CSV text (trailing newline)."""
    lines = [",".join(SWEEP_HEADER)]
    for row in rows:
        lines.append(",".join(format_cell(row[col]) for col in SWEEP_HEADER))
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class GapAudit:
    """Scan result: the worst achievable/lower-bound ratio over a grid."""

    points: int
    max_gap: Num
    argmax: dict
    passed: bool  # max gap < 4


def gap_audit(
    k_spec: str = DEFAULT_K_SPEC,
    n_spec: str = DEFAULT_N_SPEC,
    m_spec: str = DEFAULT_M_SPEC,
    alpha_spec: str = DEFAULT_ALPHA_SPEC,
    threads: int = 1,
) -> GapAudit:
    """Scan the grid for the maximum optimality gap.

    The default grid is K in 2..50, N in {K, 2K, 4K}, cumulative cache
    size Gamma in {0, 1/4, 1/2, 3/4, 1}, and alpha on the 1/20 ladder.
    """
    rows = _evaluate(
        _grid(k_spec, n_spec, m_spec, alpha_spec),
        lambda item: _point_row(*item),
        threads,
    )
    if not rows:
        raise ParameterError("gap audit grid is empty")
    worst = max(rows, key=lambda row: row["gap"])
    return GapAudit(
        points=len(rows),
        max_gap=worst["gap"],
        argmax={key: worst[key] for key in ("K", "N", "M", "alpha", "gap")},
        passed=worst["gap"] < 4,
    )


def large_k_audit(ks: Sequence[int] = LARGE_K_VALUES) -> list[dict]:
    """Gap trend at K in {10^3..10^6} with gamma = K^(-1/2), alpha = 0.

    The cumulative cache size is sqrt(K), so the large-cache formula and
    the generalized harmonic apply; values are floating point.
    """
    rows = []
    for k in ks:
        gamma = float(k) ** -0.5
        params = validate_params(k, k, gamma * k)
        row = _point_row(params, 0.0)
        rows.append(
            {
                "K": k,
                "gamma": gamma,
                "T": float(row["T"]),
                "T_lb": float(row["T_lb"]),
                "argmax_s": row["argmax_s"],
                "gap": float(row["gap"]),
            }
        )
    return rows


def delta_rows(
    params: SystemParams,
    alpha_spec: str = DEFAULT_ALPHA_SPEC,
    tol: float = 1e-9,
) -> list[dict]:
    """Closed-form vs oracle CSIT savings across an alpha grid.

    The ``agree`` flag compares at ``tol``; disagreements are expected on
    the middle (eta) branches, where the bisection oracle is authoritative.
    """
    if params.cum_gamma > 1:
        raise ParameterError("CSIT savings are defined for K*M/N <= 1 only")
    rows = []
    for alpha in parse_alpha_spec(alpha_spec):
        point = performance_point(params, alpha)
        closed = point.savings
        oracle = csit_savings_oracle(params, alpha)
        diff = abs(float(closed) - oracle)
        rows.append(
            {
                "alpha": alpha,
                "regime": point.regime.kind,
                "eta": point.regime.eta,
                "closed": closed,
                "oracle": oracle,
                "abs_diff": diff,
                "agree": diff <= tol,
            }
        )
    return rows
