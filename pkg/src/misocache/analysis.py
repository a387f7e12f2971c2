"""Delivery-time formulas, CSIT breakpoints, converse bounds, and audits.

The achievable normalized delivery time T(gamma, alpha) for the K-user
cache-aided broadcast with mixed CSIT is piecewise in the CSIT quality
exponent alpha. For cumulative cache size Gamma <= 1 the pieces are a
delayed-CSIT-heavy first branch, a family of redundancy branches indexed by
eta, and a zero-forcing branch equal to 1 - gamma; the pieces switch at the
breakpoints computed here. For Gamma >= 1 a single large-cache formula
applies. A cut-set style lower bound, the multiplicative optimality gap, the
CSIT savings delta(gamma, alpha), and monotonicity audits round out the
module. All results are exact rationals whenever the inputs are rational and
K is small enough (see ``core.EXACT_LIMIT``).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .core import (
    Num,
    ParameterError,
    SystemParams,
    check_alpha,
    harmonic,
    harmonic_general,
    harmonic_value,
)

__all__ = [
    "PerformancePoint",
    "Regime",
    "RegimeMonotonicityReport",
    "achievable_time",
    "achievable_time_large",
    "achievable_time_small",
    "alpha_breakpoint",
    "asymptotic_caching_ratio",
    "audit_regime_monotonicity",
    "csit_savings_closed",
    "csit_savings_oracle",
    "eta_branch_time",
    "first_branch_time",
    "full_csit_threshold",
    "gap",
    "local_caching_ratio",
    "lower_bound_time",
    "performance_point",
    "select_regime",
]

FIRST_BRANCH = "FirstBranch"
ETA_BRANCH = "EtaBranch"
FULL_CSIT_BRANCH = "FullCsitBranch"
LARGE_GAMMA = "LargeGamma"


@dataclass(frozen=True)
class Regime:
    """Which piece of the delivery-time curve applies at a given alpha."""

    kind: str
    eta: Optional[int] = None

    def label(self) -> str:
        if self.kind == ETA_BRANCH:
            return f"{ETA_BRANCH}({self.eta})"
        return self.kind


def _require_small_cache(params: SystemParams) -> None:
    if params.cum_gamma > 1:
        raise ParameterError(
            f"small-cache regime needs K*M/N <= 1, got Gamma={params.cum_gamma}"
        )


def alpha_breakpoint(params: SystemParams, eta: int) -> Num:
    """CSIT quality threshold at which the redundancy-eta scheme activates.

    alpha_b(eta) = (eta - Gamma) / (Gamma*(H_K - H_eta - 1) + eta) for
    eta in [1, K-1]. Strictly increasing in eta when Gamma > 0, and
    alpha_b(K-1) coincides with the full-CSIT threshold.
    """
    _require_small_cache(params)
    if not isinstance(eta, int) or eta < 1 or eta > params.k - 1:
        raise ParameterError(f"eta must be an integer in [1, K-1], got {eta!r}")
    big_gamma = params.cum_gamma
    h_k = harmonic_value(params.k)
    h_eta = harmonic_value(eta)
    return (eta - big_gamma) / (big_gamma * (h_k - h_eta - 1) + eta)


def full_csit_threshold(params: SystemParams) -> Num:
    """Smallest alpha at which pure zero-forcing delivery (T = 1 - gamma) wins."""
    _require_small_cache(params)
    k = params.k
    return (k - 1 - params.cum_gamma) / ((k - 1) * (1 - params.gamma))


def select_regime(params: SystemParams, alpha: Num | int | str) -> Regime:
    """Pick the active branch at a given alpha (small-cache systems).

    At a breakpoint the higher branch is selected: exactly at alpha_b(eta)
    the redundancy-eta branch applies, and exactly at the full-CSIT
    threshold the 1 - gamma branch applies.
    """
    alpha = check_alpha(alpha)
    _require_small_cache(params)
    if alpha >= full_csit_threshold(params):
        return Regime(FULL_CSIT_BRANCH)
    if alpha < alpha_breakpoint(params, 1):
        return Regime(FIRST_BRANCH)
    # Largest eta in [1, K-2] whose breakpoint is <= alpha. Breakpoints are
    # non-decreasing in eta, so a binary search suffices.
    lo, hi = 1, params.k - 2
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if alpha_breakpoint(params, mid) <= alpha:
            lo = mid
        else:
            hi = mid - 1
    return Regime(ETA_BRANCH, lo)


def first_branch_time(params: SystemParams, alpha: Num) -> Num:
    """Delivery time of the delayed-CSIT-heavy scheme, (H_K - Gamma)/(1 - alpha + alpha*H_K)."""
    h_k = harmonic_value(params.k)
    return (h_k - params.cum_gamma) / (1 - alpha + alpha * h_k)


def eta_branch_time(params: SystemParams, alpha: Num, eta: int) -> Num:
    """Delivery time of the redundancy-eta scheme at quality alpha.

    (K - Gamma)(H_K - H_eta) / ((K - eta) + alpha*(eta + K*(H_K - H_eta - 1))).
    Valid as a formula for any eta in [1, K-1]; the scheme itself is only
    feasible for alpha >= alpha_breakpoint(eta).
    """
    k = params.k
    if not isinstance(eta, int) or eta < 1 or eta > k - 1:
        raise ParameterError(f"eta must be an integer in [1, K-1], got {eta!r}")
    h_k = harmonic_value(k)
    h_eta = harmonic_value(eta)
    num = (k - params.cum_gamma) * (h_k - h_eta)
    den = (k - eta) + alpha * (eta + k * (h_k - h_eta - 1))
    return num / den


def achievable_time_small(params: SystemParams, alpha: Num | int | str) -> tuple[Num, Regime]:
    """Achievable delivery time for Gamma <= 1, with the branch that produced it.

    Piecewise in alpha: first branch below alpha_b(1), the redundancy-eta
    branch on [alpha_b(eta), alpha_b(eta+1)), and 1 - gamma from the
    full-CSIT threshold on. Non-increasing in alpha. The first and eta=1
    branches agree exactly at alpha_b(1); at higher breakpoints the newly
    feasible branch is strictly better, so the curve steps down.
    """
    alpha = check_alpha(alpha)
    regime = select_regime(params, alpha)
    if regime.kind == FULL_CSIT_BRANCH:
        return 1 - params.gamma, regime
    if regime.kind == FIRST_BRANCH:
        return first_branch_time(params, alpha), regime
    return eta_branch_time(params, alpha, regime.eta), regime


def achievable_time_large(params: SystemParams, alpha: Num | int | str) -> Num:
    """Achievable delivery time for Gamma >= 1.

    (1 - gamma)(H_K - H_Gamma) / (alpha*(H_K - H_Gamma) + (1 - alpha)(1 - gamma)),
    with H_Gamma through the digamma extension when Gamma is not an integer.
    """
    alpha = check_alpha(alpha)
    if params.cum_gamma < 1:
        raise ParameterError(
            f"large-cache regime needs K*M/N >= 1, got Gamma={params.cum_gamma}"
        )
    gamma = params.gamma
    if gamma == 1:
        # The whole library is cached; nothing needs the channel.
        return Fraction(0) if params.exact else 0.0
    h_k = harmonic_value(params.k)
    h_gamma = harmonic_value(params.cum_gamma)
    spread = h_k - h_gamma
    return (1 - gamma) * spread / (alpha * spread + (1 - alpha) * (1 - gamma))


def achievable_time(params: SystemParams, alpha: Num | int | str) -> tuple[Num, Num, Regime]:
    """Delivery time, per-user degrees of freedom, and active regime.

    Routes on the cumulative cache size: Gamma <= 1 uses the piecewise
    small-cache result, Gamma > 1 the large-cache formula. The DoF is the
    conversion d = (1 - gamma)/T.
    """
    if params.cum_gamma <= 1:
        t, regime = achievable_time_small(params, alpha)
    else:
        t = achievable_time_large(params, alpha)
        regime = Regime(LARGE_GAMMA)
    if t == 0:
        raise ParameterError("delivery time is zero (M=N); DoF is undefined")
    dof = (1 - params.gamma) / t
    return t, dof, regime


def lower_bound_time(params: SystemParams, alpha: Num | int | str) -> tuple[Num, int]:
    """Converse bound on the optimal delivery time, with its maximizing s.

    T_opt >= max_s (H_s - M*s/floor(N/s)) / (H_s*alpha + 1 - alpha), where s
    counts users in a cut and runs over 1..min(K, floor(N/M)) (1..K when
    M = 0; the cap also keeps floor(N/s) positive). Ties break to the
    smallest s.
    """
    alpha = check_alpha(alpha)
    k, n, m = params.k, params.n, params.m
    if m == 0:
        s_max = k
    else:
        s_max = min(k, int(n / m))
    s_max = max(s_max, 1)
    exact = params.exact and isinstance(alpha, Fraction)
    h: Num = Fraction(0) if exact else 0.0
    one = Fraction(1) if exact else 1.0
    best: Num | None = None
    best_s = 1
    for s in range(1, s_max + 1):
        h = h + one / s
        value = (h - m * s / (n // s)) / (h * alpha + 1 - alpha)
        if best is None or value > best:
            best = value
            best_s = s
    return best, best_s


def gap(params: SystemParams, alpha: Num | int | str) -> Num:
    """Multiplicative gap between the achievable time and the converse bound."""
    t, _, _ = achievable_time(params, alpha)
    t_lb, _ = lower_bound_time(params, alpha)
    if t_lb <= 0:
        raise ParameterError("lower bound is not positive; gap undefined")
    return t / t_lb


def local_caching_ratio(params: SystemParams) -> Num:
    """Delivery-time ratio achieved by caching alone (no coding): 1 - gamma."""
    return 1 - params.gamma


def _cacheless_reference(k: int, alpha_prime: float) -> float:
    """Delivery time of the cacheless delayed-CSIT scheme at quality alpha_prime.

    H_K / (1 - alpha' + alpha'*H_K). Exactly optimal at alpha' = 0; used as
    the comparison baseline for the CSIT-savings measure.
    """
    h_k = float(harmonic_value(k))
    return h_k / (1.0 - alpha_prime + alpha_prime * h_k)


def csit_savings_closed(params: SystemParams, alpha: Num | int | str) -> Num:
    """Closed-form CSIT quality saved by caching, delta(gamma, alpha).

    Piecewise along the same branches as the delivery time:
    first branch   gamma*(K - H_K)/(H_K - K*gamma) * (alpha + 1/(H_K - 1)),
    eta branch     (1 - alpha)(K*H_eta - eta*H_K)/(K*H_(eta+1)*(H_K - 1)),
    full CSIT      1 - alpha.
    The eta-branch line is reproduced as printed in its source; the
    bisection oracle is authoritative where the two disagree (they are
    known to differ on that branch; see csit_savings_oracle).
    """
    alpha = check_alpha(alpha)
    regime = select_regime(params, alpha)
    k = params.k
    gamma = params.gamma
    h_k = harmonic_value(k)
    if regime.kind == FULL_CSIT_BRANCH:
        return 1 - alpha
    if regime.kind == FIRST_BRANCH:
        return gamma * (k - h_k) / (h_k - k * gamma) * (alpha + 1 / (h_k - 1))
    eta = regime.eta
    h_eta = harmonic_value(eta)
    h_eta1 = harmonic_value(eta + 1)
    return (1 - alpha) * (k * h_eta - eta * h_k) / (k * h_eta1 * (h_k - 1))


def csit_savings_oracle(
    params: SystemParams, alpha: Num | int | str, tol: float = 1e-12
) -> float:
    """CSIT savings from the defining comparison, solved numerically.

    delta is the extra quality alpha' - alpha a cacheless system would need
    for (1 - gamma) * T_cacheless(alpha') <= T(gamma, alpha), found by
    bisection on alpha' to within ``tol``. Authoritative over the closed
    form wherever the two differ.
    """
    alpha = check_alpha(alpha)
    _require_small_cache(params)
    t_target = float(achievable_time_small(params, alpha)[0])
    k = params.k
    one_minus_gamma = 1.0 - float(params.gamma)

    def excess(a_prime: float) -> float:
        return one_minus_gamma * _cacheless_reference(k, a_prime) - t_target

    if excess(0.0) <= 0.0:
        return 0.0 - float(alpha)
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = (lo + hi) / 2.0
        if excess(mid) <= 0.0:
            hi = mid
        else:
            lo = mid
    return hi - float(alpha)


def asymptotic_caching_ratio(k: int, zeta: float) -> float:
    """Delivery-time reduction from a vanishing cache fraction gamma = K^-(1-zeta).

    Returns T(gamma, 0) / T_cacheless(0) = (H_K - H_(K^zeta)) / H_K, which
    tends to 1 - zeta as K grows. Requires zeta in [0, 1) so the cumulative
    cache size K^zeta stays >= 1.
    """
    if not isinstance(k, int) or k < 2:
        raise ParameterError(f"user count K must be an integer >= 2, got {k!r}")
    zeta = float(zeta)
    if not 0.0 <= zeta < 1.0:
        raise ParameterError(f"zeta must lie in [0, 1), got {zeta}")
    big_gamma = float(k) ** zeta
    if big_gamma < 1.0:
        raise ParameterError("cumulative cache size K^zeta must be at least 1")
    from .core import validate_params  # local to avoid import cycle at module load

    params = validate_params(k, k, big_gamma)
    t = achievable_time_large(params, 0)
    return float(t) / float(harmonic_value(k))


@dataclass(frozen=True)
class RegimeMonotonicityReport:
    """Result of auditing breakpoint ordering and eta-branch dominance."""

    k: int
    cum_gamma: Num
    breakpoints: tuple[Num, ...]
    breakpoints_strictly_increasing: bool
    # One entry per (eta, alpha) pair: times of the eta and eta+1 branches
    # and whether the eta+1 branch is strictly faster.
    comparisons: tuple[tuple[int, Num, Num, Num, bool], ...]
    passed: bool


def audit_regime_monotonicity(
    params: SystemParams, alphas: Optional[Sequence[Num]] = None
) -> RegimeMonotonicityReport:
    """Check that breakpoints increase in eta and eta-branch times decrease.

    For every eta in [1, K-2] and every audited alpha < 1, the
    redundancy-(eta+1) formula must be strictly faster than the
    redundancy-eta one (the two coincide at alpha = 1, so alphas should
    stay below 1 for strict comparisons). Vacuously passes for K = 2.
    """
    _require_small_cache(params)
    if alphas is None:
        alphas = tuple(Fraction(j, 10) for j in range(10))
    alphas = tuple(check_alpha(a) for a in alphas)
    k = params.k
    breakpoints = tuple(alpha_breakpoint(params, eta) for eta in range(1, k))
    increasing = all(b2 > b1 for b1, b2 in zip(breakpoints, breakpoints[1:]))
    comparisons = []
    ok = True
    for eta in range(1, k - 1):
        for alpha in alphas:
            t_eta = eta_branch_time(params, alpha, eta)
            t_next = eta_branch_time(params, alpha, eta + 1)
            strict = t_eta > t_next
            ok = ok and strict
            comparisons.append((eta, alpha, t_eta, t_next, strict))
    return RegimeMonotonicityReport(
        k=k,
        cum_gamma=params.cum_gamma,
        breakpoints=breakpoints,
        breakpoints_strictly_increasing=increasing,
        comparisons=tuple(comparisons),
        passed=increasing and ok,
    )


@dataclass(frozen=True)
class PerformancePoint:
    """Everything the compute surface reports for one (params, alpha) point."""

    params: SystemParams
    alpha: Num
    time: Num
    dof: Num
    regime: Regime
    lower_bound: Num
    argmax_s: int
    gap: Num
    savings: Optional[Num]  # closed-form delta; None when Gamma > 1


def performance_point(params: SystemParams, alpha: Num | int | str) -> PerformancePoint:
    """Assemble the full performance summary at one operating point."""
    alpha = check_alpha(alpha)
    t, dof, regime = achievable_time(params, alpha)
    t_lb, s_star = lower_bound_time(params, alpha)
    savings = csit_savings_closed(params, alpha) if params.cum_gamma <= 1 else None
    return PerformancePoint(
        params=params,
        alpha=alpha,
        time=t,
        dof=dof,
        regime=regime,
        lower_bound=t_lb,
        argmax_s=s_star,
        gap=t / t_lb,
        savings=savings,
    )
