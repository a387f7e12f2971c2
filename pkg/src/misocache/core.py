"""System parameters and harmonic-number arithmetic.

Every closed form in this package is driven by harmonic numbers and by the
normalized cache sizes gamma = M/N and Gamma = K*M/N. Computations stay in
exact rational arithmetic (``fractions.Fraction``) whenever the user count is
at most ``EXACT_LIMIT`` and the inputs are rational; past that, or for
irrational cache sizes, they fall back to IEEE doubles with a documented
relative tolerance of 1e-9.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from numbers import Rational
from typing import Union

import numpy as np
from scipy.special import digamma

__all__ = [
    "EXACT_LIMIT",
    "EULER_MASCHERONI",
    "Num",
    "ParameterError",
    "SystemParams",
    "as_fraction",
    "harmonic",
    "harmonic_general",
    "harmonic_value",
    "validate_params",
]

# Euler-Mascheroni constant, the n -> infinity limit of H_n - ln(n).
EULER_MASCHERONI = float(np.euler_gamma)

# Largest index for which the analysis layer keeps harmonic numbers exact.
# Beyond it everything is evaluated in floats (relative tolerance 1e-9).
EXACT_LIMIT = 10_000

Num = Union[Fraction, float]


class ParameterError(ValueError):
    """Raised for structurally invalid system parameters."""


_harmonic_cache: list[Fraction] = [Fraction(0)]


def harmonic(n: int) -> Fraction:
    """Exact n-th harmonic number H_n = 1 + 1/2 + ... + 1/n, with H_0 = 0."""
    if not isinstance(n, int) or isinstance(n, bool):
        raise ParameterError(f"harmonic index must be an integer, got {n!r}")
    if n < 0:
        raise ParameterError(f"harmonic index must be non-negative, got {n}")
    while len(_harmonic_cache) <= n:
        m = len(_harmonic_cache)
        _harmonic_cache.append(_harmonic_cache[-1] + Fraction(1, m))
    return _harmonic_cache[n]


def harmonic_general(x: float) -> float:
    """Harmonic number extended to positive real index.

    Uses the digamma identity H_x = psi(x + 1) + euler_gamma, which agrees
    with ``harmonic`` at integer x and behaves like ln(x) + euler_gamma for
    large x.
    """
    x = float(x)
    if not math.isfinite(x) or x <= 0.0:
        raise ParameterError(f"harmonic_general needs a positive finite index, got {x}")
    return float(digamma(x + 1.0)) + EULER_MASCHERONI


def harmonic_value(x: Num | int) -> Num:
    """Harmonic number of x, exact when x is a small integer, float otherwise."""
    if isinstance(x, Rational):
        if x == 0:
            return Fraction(0)
        if x.denominator == 1 and x <= EXACT_LIMIT:
            return harmonic(int(x))
    return harmonic_general(float(x))


def as_fraction(value: Num | int | str) -> Num:
    """Coerce a number to Fraction when it is exactly representable.

    Strings are parsed at decimal or p/q face value ("0.05" -> 1/20,
    "12/25" -> 12/25). Floats are kept as floats; callers that need exact
    arithmetic must supply rationals or strings.
    """
    if isinstance(value, bool):
        raise ParameterError(f"expected a number, got {value!r}")
    if isinstance(value, Rational):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ParameterError(f"cannot parse number {value!r}") from exc
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ParameterError(f"number must be finite, got {value}")
        return value
    raise ParameterError(f"expected a number, got {value!r}")


@dataclass(frozen=True)
class SystemParams:
    """A validated instance of the K-user cache-aided broadcast system.

    k is the number of users (equal to the number of transmit antennas),
    n the number of equally sized library files, m the per-user cache size
    in files (rational, 0 <= m <= n), and f the file size in bits when a
    concrete simulation is wanted (None for pure analysis).
    """

    k: int
    n: int
    m: Num
    f: int | None = None

    @property
    def gamma(self) -> Num:
        """Normalized per-user cache size M/N."""
        return self.m / self.n

    @property
    def cum_gamma(self) -> Num:
        """Cumulative normalized cache size K*M/N across all users."""
        return self.k * self.m / self.n

    @property
    def exact(self) -> bool:
        """True when rational arithmetic is used throughout."""
        return isinstance(self.m, Fraction) and self.k <= EXACT_LIMIT

    def with_f(self, f: int | None) -> "SystemParams":
        return replace(self, f=f)


def validate_params(k: int, n: int, m: Num | int | str, f: int | None = None) -> SystemParams:
    """Validate and normalize system parameters.

    Checks k >= 2 (at least two users), n >= k (every user can request a
    distinct file), 0 <= m <= n, and positive integer f when given.
    Idempotent: feeding a SystemParams' own fields back reproduces it.
    """
    if not isinstance(k, int) or isinstance(k, bool) or k < 2:
        raise ParameterError(f"user count K must be an integer >= 2, got {k!r}")
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise ParameterError(f"library size N must be a positive integer, got {n!r}")
    if n < k:
        raise ParameterError(
            f"library must hold at least one file per user (N < K: N={n}, K={k})"
        )
    m_num = as_fraction(m)
    if m_num < 0 or m_num > n:
        raise ParameterError(f"cache size M must satisfy 0 <= M <= N, got M={m_num}")
    if f is not None:
        if not isinstance(f, int) or isinstance(f, bool) or f < 1:
            raise ParameterError(f"file size f must be a positive integer, got {f!r}")
    return SystemParams(k=k, n=n, m=m_num, f=f)


def check_alpha(alpha: Num | int | str) -> Num:
    """Validate a CSIT quality exponent, returning Fraction or float in [0, 1]."""
    value = as_fraction(alpha)
    if value < 0 or value > 1:
        raise ParameterError(f"alpha must lie in [0, 1], got {value}")
    return value
