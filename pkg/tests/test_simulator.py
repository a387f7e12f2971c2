"""Tests for the bit-exact delivery simulator.

PRNG reference vectors are the published SplitMix64 outputs for seed 0
and seed 42; everything downstream (library bits, default requests,
payloads) is frozen against those streams.
"""

import dataclasses
import random
from fractions import Fraction

import pytest

from misocache.analysis import alpha_breakpoint, first_branch_time
from misocache.core import ParameterError, harmonic, validate_params
from misocache.scheme import (
    COMMON_KIND,
    XOR_KIND,
    ZF_KIND,
    build_phase_schedule,
    build_placement,
)
from misocache.simulator import (
    REQUEST_STREAM_SALT,
    MissingUnitError,
    SplitMix64,
    decode_user,
    default_requests,
    fill_caches,
    generate_library,
    run_delivery,
    simulate,
)


@pytest.fixture
def worked():
    return validate_params(4, 8, 1)


def test_splitmix64_reference_vectors():
    assert SplitMix64(0).words(4) == [
        0xE220A8397B1DCDAF,
        0x6E789E6AA1B965F4,
        0x06C45D188009454F,
        0xF88BB8A8724C81EC,
    ]
    assert SplitMix64(42).words(3) == [
        13679457532755275413,
        2949826092126892291,
        5139283748462763858,
    ]


def test_splitmix64_seed_wraps_to_64_bits():
    assert SplitMix64(1 << 64).words(3) == SplitMix64(0).words(3)


def test_generate_library_matches_stream():
    library = generate_library(3, 96, seed=7)
    stream = SplitMix64(7)
    expected = []
    for _ in range(3):
        hi, lo = stream.next_word(), stream.next_word()
        expected.append(((hi << 64) | lo) >> 32)
    assert list(library.files) == expected
    assert all(0 <= x < (1 << 96) for x in library.files)
    assert library.file(1) == library.files[0]
    with pytest.raises(ParameterError, match="file id"):
        library.file(4)


def test_generate_library_determinism_and_divergence():
    assert generate_library(5, 64, seed=1) == generate_library(5, 64, seed=1)
    assert generate_library(5, 64, seed=1) != generate_library(5, 64, seed=2)
    with pytest.raises(ParameterError):
        generate_library(0, 64, seed=1)
    with pytest.raises(ParameterError):
        generate_library(5, 0, seed=1)


def test_default_requests_salted_stream():
    stream = SplitMix64(9 ^ REQUEST_STREAM_SALT)
    expected = tuple(stream.next_word() % 8 + 1 for _ in range(4))
    assert default_requests(4, 8, seed=9) == expected
    assert all(1 <= r <= 8 for r in default_requests(4, 8, seed=0))
    assert len(default_requests(6, 3, seed=0)) == 6


def test_fill_caches_slices_subfiles(worked):
    library = generate_library(8, 96, seed=0)
    placement = build_placement(worked.with_f(96))
    caches = fill_caches(library, placement)
    assert len(caches) == 4 and all(len(c) == 8 for c in caches)
    for user in (1, 4):
        start, stop = placement.subfile_span(user)
        for file_id in (1, 8):
            whole = library.file(file_id)
            piece = (whole >> (96 - stop)) & ((1 << 12) - 1)
            assert caches[user - 1][file_id] == piece


def test_simulate_worked_alpha_zero(worked):
    report, log = simulate(worked, 0, f=96, seed=0)
    assert report.airtime == Fraction(19, 12) == report.expected_time
    assert report.decoded_ok
    assert report.f == 96
    assert report.requests == default_requests(4, 8, 0)
    assert report.unit_counts == {XOR_KIND: 6, ZF_KIND: 0, COMMON_KIND: 4}
    assert report.coverage == {
        "cached": 12, "xor": 36, "zf": 0, "common": 48, "total": 96,
    }
    assert len(log.payloads) == len(log.schedule.units) == 10
    assert all(0 <= p < (1 << u.bits) for p, u in zip(log.payloads, log.schedule.units))


def test_simulate_worked_at_breakpoint(worked):
    report, _ = simulate(worked, Fraction(12, 25), f=96, seed=3)
    assert report.airtime == Fraction(25, 24)
    assert report.unit_counts == {XOR_KIND: 6, ZF_KIND: 12, COMMON_KIND: 0}
    assert report.coverage["zf"] == 48 and report.coverage["common"] == 0


def test_simulate_defaults_to_smallest_file_size(worked):
    report, _ = simulate(worked, 0)
    assert report.f == 8
    report, _ = simulate(worked, Fraction(12, 25))
    assert report.f == 8


def test_simulate_rejects_bad_file_sizes(worked):
    for bad in (100, -8, 0, True, "96"):
        with pytest.raises(ParameterError, match="smallest\\s+valid size 8"):
            simulate(worked, 0, f=bad)


def test_simulate_rejects_bad_requests(worked):
    with pytest.raises(ParameterError, match="exactly K=4"):
        simulate(worked, 0, f=96, requests=(1, 2, 3))
    with pytest.raises(ParameterError, match="file ids"):
        simulate(worked, 0, f=96, requests=(1, 2, 3, 9))


def test_simulate_identical_requests_decode(worked):
    report, _ = simulate(worked, 0, f=96, requests=(5, 5, 5, 5))
    assert report.decoded_ok and report.requests == (5, 5, 5, 5)


def test_simulate_two_users_and_cacheless():
    report, _ = simulate(validate_params(2, 2, 1), 0)
    assert report.airtime == Fraction(1, 2)
    assert report.unit_counts == {XOR_KIND: 1, ZF_KIND: 0, COMMON_KIND: 0}

    report, _ = simulate(validate_params(4, 8, 0), 0)
    assert report.f == 1
    assert report.airtime == harmonic(4)
    assert report.unit_counts == {XOR_KIND: 0, ZF_KIND: 0, COMMON_KIND: 4}


def test_simulate_is_deterministic(worked):
    first = simulate(worked, Fraction(12, 25), f=96, seed=11)
    second = simulate(worked, Fraction(12, 25), f=96, seed=11)
    assert first[1].payloads == second[1].payloads
    assert first[0] == second[0]
    other = simulate(worked, Fraction(12, 25), f=96, seed=12)
    assert other[1].payloads != first[1].payloads


def test_trace_lines_format(worked):
    _, log = simulate(worked, 0, f=96, seed=0)
    lines = log.to_trace_lines()
    assert lines[0] == "1 Xor 1,2 12 0"
    assert lines[-1] == "4 MatCommon 4 48 0"
    assert all(len(line.split(" ")) == 5 for line in lines)


def _drop_unit(log, index):
    schedule = log.schedule
    units = schedule.units[:index] + schedule.units[index + 1 :]
    payloads = log.payloads[:index] + log.payloads[index + 1 :]
    degraded = dataclasses.replace(schedule, units=units)
    return dataclasses.replace(log, schedule=degraded, payloads=payloads)


def test_decode_missing_xor_unit(worked):
    _, log = simulate(worked, 0, f=96, seed=0)
    library = generate_library(8, 96, seed=0)
    caches = fill_caches(library, build_placement(worked.with_f(96)))
    degraded = _drop_unit(log, 0)  # the (1, 2) pair codeword
    with pytest.raises(MissingUnitError, match=r"user 1 is missing pair codewords for partners \[2\]"):
        decode_user(1, degraded, caches[0])
    # User 3 never needed that codeword and still decodes.
    assert decode_user(3, degraded, caches[2]) == library.file(log.requests[2])


def test_decode_missing_common_unit(worked):
    _, log = simulate(worked, 0, f=96, seed=0)
    library = generate_library(8, 96, seed=0)
    caches = fill_caches(library, build_placement(worked.with_f(96)))
    index = next(
        i for i, u in enumerate(log.schedule.units)
        if u.kind == COMMON_KIND and u.users == (2,)
    )
    with pytest.raises(MissingUnitError, match=r"user 2 is missing common bits \[0, 48\)"):
        decode_user(2, _drop_unit(log, index), caches[1])


def test_decode_missing_zf_unit(worked):
    params = worked.with_f(96)
    _, log = simulate(params, Fraction(12, 25), f=96, seed=0)
    library = generate_library(8, 96, seed=0)
    caches = fill_caches(library, build_placement(params))
    index = next(
        i for i, u in enumerate(log.schedule.units)
        if u.kind == ZF_KIND and u.users == (4,) and u.offset == 22
    )
    with pytest.raises(MissingUnitError, match=r"user 4 is missing zero-forced bits \[22, 36\)"):
        decode_user(4, _drop_unit(log, index), caches[3])


def test_run_delivery_rejects_mismatched_library(worked):
    schedule = build_phase_schedule(worked.with_f(96), 0)
    library = generate_library(8, 192, seed=0)
    with pytest.raises(ParameterError, match="does not match schedule file size"):
        run_delivery(library, schedule, (1, 2, 3, 4))


def test_simulate_random_grid():
    rng = random.Random(31)
    for _ in range(15):
        k = rng.randrange(2, 6)
        n = k * rng.choice((1, 2, 4))
        cum = Fraction(rng.randrange(0, 9), 8)
        params = validate_params(k, n, cum * n / k)
        limit = alpha_breakpoint(params, 1)
        alpha = limit * rng.randrange(0, 4) / 4
        report, _ = simulate(params, alpha, seed=rng.randrange(1 << 32))
        assert report.decoded_ok
        assert report.airtime == first_branch_time(params.with_f(report.f), alpha)
