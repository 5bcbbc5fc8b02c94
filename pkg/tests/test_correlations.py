import numpy as np
import pytest

from arwaves import correlations
from arwaves.correlations import (
    correlation_counts,
    pair_sum_table,
    report,
    scan_well_separated,
    separation_sum,
    split_degenerate,
    two_squares_lower_bound,
)
from arwaves.lattice import admissible, enumerate_frequencies, representable

from oracles import (
    brute_correlation_count,
    brute_degenerate_count,
    brute_separation_sum,
    r2_representations,
)


def test_m1_counts():
    freqs = enumerate_frequencies(1)
    assert correlation_counts(freqs, 2) == 6
    assert correlation_counts(freqs, 4) == 90
    assert split_degenerate(freqs) == (0, 90)


def test_pair_sum_table_total():
    freqs = enumerate_frequencies(3)
    sums, counts = pair_sum_table(freqs)
    assert counts.sum() == freqs.n ** 2


@pytest.mark.parametrize("m", [m for m in range(1, 31) if representable(m)])
def test_counts_match_brute_force(m):
    freqs = enumerate_frequencies(m)
    assert correlation_counts(freqs, 2) == brute_correlation_count(freqs.points, 2)
    assert correlation_counts(freqs, 2) == freqs.n
    c4 = correlation_counts(freqs, 4)
    assert c4 == brute_correlation_count(freqs.points, 4)
    x4, d4 = split_degenerate(freqs)
    assert x4 + d4 == c4
    assert d4 == 3 * freqs.n ** 2 - 3 * freqs.n


@pytest.mark.parametrize("m", [1, 2, 3, 5])
def test_degenerate_split_brute(m):
    freqs = enumerate_frequencies(m)
    _, d4 = split_degenerate(freqs)
    assert d4 == brute_degenerate_count(freqs.points)


@pytest.mark.parametrize("m", [1, 2, 3, 4, 5])
def test_c6_matches_brute_force(m):
    freqs = enumerate_frequencies(m)
    c6 = correlation_counts(freqs, 6)
    assert c6 == brute_correlation_count(freqs.points, 6)
    assert c6 == correlations._c6_fft(freqs)


def test_s2_m1_closed_form():
    # 6 coincident pairs contribute 1/4 each, 24 orthogonal pairs 1/2 each
    freqs = enumerate_frequencies(1)
    assert separation_sum(freqs, 2) == pytest.approx(13.5 / 36, rel=1e-15)
    assert separation_sum(freqs, 2) == pytest.approx(0.375, rel=1e-15)


@pytest.mark.parametrize("m", [m for m in range(1, 11) if representable(m)])
def test_separation_sums_small_m(m):
    freqs = enumerate_frequencies(m)
    assert separation_sum(freqs, 2) == pytest.approx(
        brute_separation_sum(freqs.points, 2), rel=1e-9)
    assert separation_sum(freqs, 4) == pytest.approx(
        brute_separation_sum(freqs.points, 4), rel=1e-9)


@pytest.mark.parametrize("m", [1, 2, 3, 5])
def test_separation_sum_six(m):
    freqs = enumerate_frequencies(m)
    assert separation_sum(freqs, 6) == pytest.approx(
        brute_separation_sum(freqs.points, 6), rel=1e-9)


def test_unsupported_order():
    freqs = enumerate_frequencies(2)
    with pytest.raises(ValueError):
        correlation_counts(freqs, 3)
    with pytest.raises(ValueError):
        separation_sum(freqs, 8)


def test_report_consistency():
    rep = report(enumerate_frequencies(5))
    assert rep.c2 == rep.n
    assert rep.x4 + rep.d4 == rep.c4
    norm = rep.normalized
    assert norm["n2s2"] == pytest.approx(rep.n ** 2 * rep.s2)
    assert norm["n2s4"] == pytest.approx(rep.n ** 2 * rep.s4)
    assert norm["n2s6"] == pytest.approx(rep.n ** 2 * rep.s6)


def test_scan_admissible_filter_and_rank(tmp_path):
    reports = scan_well_separated(1, 10, budget=3, cache_dir=tmp_path)
    assert {r.m for r in reports} == {1, 2, 3, 5, 6, 9, 10}
    done = [r for r in reports if r.s6 is not None]
    assert len(done) == 3
    keys = [r.rank_key for r in done]
    assert keys == sorted(keys)
    # cache round-trip gives identical stage-B values
    again = scan_well_separated(1, 10, budget=3, cache_dir=tmp_path)
    for a, b in zip(reports, again):
        assert (a.m, a.s4, a.s6, a.c6) == (b.m, b.s4, b.s6, b.c6)


def test_x4_density_trend():
    # weak echo of the sub-N^2 growth of |X(4)|: the density at the top of
    # the scan window sits below its value at the bottom (the function
    # fluctuates arithmetically in between, so this is ends-only)
    ms = [m for m in range(5, 1001) if admissible(m)]
    assert len(ms) >= 20
    first = enumerate_frequencies(ms[0])
    last = enumerate_frequencies(ms[-1])
    x4_first, _ = split_degenerate(first)
    x4_last, _ = split_degenerate(last)
    assert x4_first > 0
    assert x4_last / last.n ** 2 < x4_first / first.n ** 2


def test_two_squares_lower_bound():
    lhs, rhs, holds = two_squares_lower_bound(2)
    assert rhs == pytest.approx(r2_representations(1) / 4)
    assert rhs == pytest.approx(1.0)
    assert holds
    lhs5, rhs5, holds5 = two_squares_lower_bound(5)
    assert rhs5 == pytest.approx(1.0)
    assert holds5
    # m - 1 = 3 is a prime = 3 mod 4: not a sum of two squares
    with pytest.raises(ValueError, match="construction inapplicable"):
        two_squares_lower_bound(4)


def test_lower_bound_matches_separation_sum():
    # the pair sum over mu != mu' equals N^2 S_2 after mu' -> -mu'
    freqs = enumerate_frequencies(10)
    lhs, _, _ = two_squares_lower_bound(10)
    assert lhs == pytest.approx(freqs.n ** 2 * separation_sum(freqs, 2), rel=1e-12)
