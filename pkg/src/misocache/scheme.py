"""Constructive delivery scheme for the first branch (redundancy eta = 1).

Placement splits every file into K equal subfiles of gamma*f bits; user k
caches subfile k of every file. Delivery for CSIT quality
alpha <= alpha_breakpoint(1) runs 2K - 1 phases. The uncached part of each
requested file is split into a zero-forced part of alpha*f*T bits, spread
over all phases, and a delayed-CSIT common part of f*(1 - Gamma - alpha*T)
bits sent in phase K. Order-2 XORs of cached subfiles are sent in phase 1;
phases 2..K-1 and K+1..2K-1 carry the retransmissions that let every user
resolve the phase-1 and phase-K signals, and contribute airtime but no new
payload units. All bookkeeping is exact: the schedule refuses inexact
parameters or file sizes that do not make every payload an integer number
of bits, and the phase durations reproduce the first-branch delivery time
exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .analysis import alpha_breakpoint, first_branch_time
from .core import Num, ParameterError, SystemParams, as_fraction, harmonic

__all__ = [
    "Placement",
    "PhaseSchedule",
    "ScheduleUnit",
    "XorSpec",
    "UncachedSplit",
    "build_phase_schedule",
    "build_placement",
    "build_xor_set",
    "coverage_ledger",
    "split_uncached",
    "suggest_f",
]

XOR_KIND = "Xor"
ZF_KIND = "ZeroForce"
COMMON_KIND = "MatCommon"


def _exact_alpha(alpha) -> Fraction:
    alpha = as_fraction(alpha)
    if not isinstance(alpha, Fraction):
        raise ParameterError(
            "scheme construction requires an exact rational alpha; "
            "pass a Fraction, an int, or a string like '12/25'"
        )
    if not 0 <= alpha <= 1:
        raise ParameterError(f"alpha must lie in [0, 1], got {alpha}")
    return alpha


def _require_exact(params: SystemParams) -> None:
    if not params.exact:
        raise ParameterError("scheme construction requires exact rational parameters")
    if params.cum_gamma > 1:
        raise ParameterError(
            f"first-branch scheme needs K*M/N <= 1, got Gamma={params.cum_gamma}"
        )


def _check_branch(params: SystemParams, alpha: Fraction) -> None:
    limit = alpha_breakpoint(params, 1)
    if alpha > limit:
        raise ParameterError(
            f"alpha {alpha} is above first-branch breakpoint {limit}; "
            "the constructive scheme covers only the first branch"
        )
    if alpha == 1:
        raise ParameterError(
            "alpha = 1 degenerates to pure zero-forcing; the multiphase "
            "scheme requires alpha < 1"
        )


def suggest_f(params: SystemParams, alpha) -> int:
    """Smallest file size making every payload an integer number of bits.

    Needs gamma*f (subfile and XOR size) and alpha*T*f (zero-forced part)
    integral; the common part f*(1 - Gamma - alpha*T) is then integral too.
    """
    _require_exact(params)
    alpha = _exact_alpha(alpha)
    _check_branch(params, alpha)
    gamma = params.gamma
    zf_share = alpha * first_branch_time(params, alpha)
    return math.lcm(gamma.denominator, zf_share.denominator)


@dataclass(frozen=True)
class Placement:
    """Cache contents layout: subfile k of every file sits at user k."""

    params: SystemParams
    f: int
    subfile_bits: int  # gamma * f
    cached_bits_per_user: int  # N * gamma * f = M * f

    def subfile_span(self, subfile: int) -> tuple[int, int]:
        """Bit range [start, stop) of a 1-based subfile index within a file."""
        if not 1 <= subfile <= self.params.k:
            raise ParameterError(f"subfile index must be in [1, K], got {subfile}")
        start = (subfile - 1) * self.subfile_bits
        return start, start + self.subfile_bits


def build_placement(params: SystemParams) -> Placement:
    """Lay out the caches for a system whose file size f is fixed."""
    _require_exact(params)
    if params.f is None:
        raise ParameterError("placement needs a file size; call params.with_f(...)")
    f = params.f
    sub = params.gamma * f
    if sub.denominator != 1:
        raise ParameterError(
            f"file size {f} does not split into K equal cached subfiles; "
            f"gamma*f = {sub} must be an integer"
        )
    sub_bits = int(sub)
    return Placement(
        params=params,
        f=f,
        subfile_bits=sub_bits,
        cached_bits_per_user=params.n * sub_bits,
    )


@dataclass(frozen=True)
class XorSpec:
    """Order-2 multicast codeword for a user pair (a < b, 1-based).

    Carries subfile b of a's request XORed with subfile a of b's request;
    each side cancels the half it caches.
    """

    user_a: int
    user_b: int
    bits: int


def build_xor_set(placement: Placement) -> tuple[XorSpec, ...]:
    """All C(K, 2) pair codewords in lexicographic pair order."""
    k = placement.params.k
    s = placement.subfile_bits
    return tuple(
        XorSpec(a, b, s) for a in range(1, k + 1) for b in range(a + 1, k + 1)
    )


@dataclass(frozen=True)
class UncachedSplit:
    """Per-user byte budget of the uncached (1 - Gamma) * f bits."""

    f: int
    uncached_bits: int
    zf_bits: int  # alpha * f * T, zero-forced across all phases
    common_bits: int  # f * (1 - Gamma - alpha * T), sent in phase K


def split_uncached(params: SystemParams, alpha) -> UncachedSplit:
    """Split each requested file's uncached bits into ZF and common parts."""
    _require_exact(params)
    alpha = _exact_alpha(alpha)
    _check_branch(params, alpha)
    if params.f is None:
        raise ParameterError("splitting needs a file size; call params.with_f(...)")
    f = params.f
    t = first_branch_time(params, alpha)
    zf = alpha * t * f
    uncached = (1 - params.cum_gamma) * f
    if zf.denominator != 1 or uncached.denominator != 1:
        raise ParameterError(
            f"file size {f} does not split exactly at alpha={alpha}; "
            f"smallest valid size is {suggest_f(params, alpha)}"
        )
    zf_bits = int(zf)
    uncached_bits = int(uncached)
    # zf <= uncached holds exactly on the first branch, with equality at
    # the breakpoint where the common part vanishes.
    assert zf_bits <= uncached_bits
    return UncachedSplit(
        f=f,
        uncached_bits=uncached_bits,
        zf_bits=zf_bits,
        common_bits=uncached_bits - zf_bits,
    )


@dataclass(frozen=True)
class ScheduleUnit:
    """One logged payload unit.

    ``offset`` is the bit offset of the unit inside its source stream: the
    pair codeword for XOR units, the user's zero-forced part for ZF units,
    and the user's common part for common units.
    """

    phase: int
    kind: str
    users: tuple[int, ...]
    bits: int
    offset: int


@dataclass(frozen=True)
class PhaseSchedule:
    """Durations and payload units of the 2K - 1 delivery phases."""

    params: SystemParams
    alpha: Fraction
    f: int
    durations: tuple[Num, ...]
    total: Num  # equals the first-branch delivery time exactly
    zf_bits_per_user: int
    common_bits_per_user: int
    units: tuple[ScheduleUnit, ...]

    def units_in_phase(self, phase: int) -> tuple[ScheduleUnit, ...]:
        return tuple(u for u in self.units if u.phase == phase)


def _zf_chunks(total_bits: int, durations, total) -> list[tuple[int, int]]:
    """Cut a per-user ZF budget into per-phase bit ranges.

    Cumulative-floor chunking: the range boundary after phase j is
    floor(total_bits * C_j / total) with C_j the elapsed time, so chunk
    sizes track phase durations while summing to the budget exactly.
    """
    ranges = []
    elapsed = Fraction(0)
    lo = 0
    for d in durations:
        elapsed += d
        hi = int(total_bits * elapsed / total)
        ranges.append((lo, hi))
        lo = hi
    assert lo == total_bits
    return ranges


def build_phase_schedule(params: SystemParams, alpha) -> PhaseSchedule:
    """Build the full 2K - 1 phase delivery schedule.

    Phase 1 carries every pair codeword back to back at the order-2
    multicast rate (K - 1)(1 - alpha) files per slot; phase K carries each
    user's common part at the broadcast rate K(1 - alpha); zero-forced
    chunks ride along in every phase. Every budget identity is checked
    exactly before the schedule is returned.
    """
    _require_exact(params)
    alpha = _exact_alpha(alpha)
    _check_branch(params, alpha)
    placement = build_placement(params)
    split = split_uncached(params, alpha)
    k, f = params.k, placement.f
    s = placement.subfile_bits
    gamma = params.gamma
    big_gamma = params.cum_gamma
    t = first_branch_time(params, alpha)
    pairs = k * (k - 1) // 2

    t1 = gamma * pairs / ((k - 1) * (1 - alpha))
    tk = (1 - big_gamma - alpha * t) / (1 - alpha)
    durations = tuple(
        t1 * 2 / (j + 1) if j < k else tk / (j - k + 1) for j in range(1, 2 * k)
    )

    # Exact timing identities for the two blocks and the grand total.
    h_k = harmonic(k)
    assert sum(durations[: k - 1]) == big_gamma * (h_k - 1) / (1 - alpha)
    assert sum(durations[k - 1 :]) == h_k * (1 - big_gamma - alpha * t) / (1 - alpha)
    assert sum(durations) == t
    # Rate budgets: phase 1 fits the XOR payload exactly, phase K the
    # common payload exactly.
    assert t1 * (k - 1) * (1 - alpha) * f == pairs * s
    assert durations[k - 1] * k * (1 - alpha) * f == k * split.common_bits

    units: list[ScheduleUnit] = []
    if s > 0:
        for spec in build_xor_set(placement):
            units.append(
                ScheduleUnit(1, XOR_KIND, (spec.user_a, spec.user_b), spec.bits, 0)
            )

    zf_ranges = _zf_chunks(split.zf_bits, durations, t) if split.zf_bits else []
    for phase0, (lo, hi) in enumerate(zf_ranges):
        if hi == lo:
            continue
        for user in range(1, k + 1):
            units.append(ScheduleUnit(phase0 + 1, ZF_KIND, (user,), hi - lo, lo))

    if split.common_bits > 0:
        for user in range(1, k + 1):
            units.append(ScheduleUnit(k, COMMON_KIND, (user,), split.common_bits, 0))

    per_user_zf = [0] * (k + 1)
    for u in units:
        if u.kind == ZF_KIND:
            per_user_zf[u.users[0]] += u.bits
    assert all(v == split.zf_bits for v in per_user_zf[1:])

    units.sort(key=lambda u: (u.phase, 0 if u.kind != ZF_KIND else 1, u.offset, u.users))
    return PhaseSchedule(
        params=params,
        alpha=alpha,
        f=f,
        durations=durations,
        total=t,
        zf_bits_per_user=split.zf_bits,
        common_bits_per_user=split.common_bits,
        units=tuple(units),
    )


def coverage_ledger(params: SystemParams, alpha) -> dict[str, int]:
    """Account for every bit of one requested file by delivery mechanism.

    Returns the per-user tallies {cached, xor, zf, common, total}; the
    total always equals the file size f.
    """
    placement = build_placement(params)
    split = split_uncached(params, alpha)
    s = placement.subfile_bits
    k = params.k
    ledger = {
        "cached": s,
        "xor": (k - 1) * s,
        "zf": split.zf_bits,
        "common": split.common_bits,
    }
    ledger["total"] = sum(ledger.values())
    assert ledger["total"] == placement.f
    return ledger
