from fractions import Fraction
from math import isqrt

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from arwaves import lattice
from arwaves.lattice import (
    SIGNED_PERMUTATIONS,
    admissible,
    enumerate_frequencies,
    orbit_measure,
    r3_table,
    representable,
    spectral_measure,
    spectral_moments,
)

from oracles import uniform_sphere_moment


def test_representable_examples():
    assert not representable(7)
    assert representable(1)
    assert not representable(28)  # 4 * 7, confirmed by the scan below
    r = isqrt(28)
    found = any(
        x * x + y * y + z * z == 28
        for x in range(r + 1) for y in range(r + 1) for z in range(r + 1)
    )
    assert not found


def test_admissible_examples():
    assert admissible(2)
    assert not admissible(12)
    assert not admissible(15)


def test_representable_matches_enumeration_histogram():
    limit = 10_000
    r3 = r3_table(limit)
    for m in range(1, limit + 1):
        assert (r3[m] > 0) == representable(m), m


def test_enumerate_small_sets():
    e1 = enumerate_frequencies(1)
    assert e1.n == 6
    assert len(e1.half) == 3
    e2 = enumerate_frequencies(2)
    assert e2.n == 12
    assert len(e2.half) == 6
    e26 = enumerate_frequencies(26)
    assert e26.n == 72


def test_half_set_partition():
    for m in (1, 2, 3, 5, 9, 11, 25, 26):
        freqs = enumerate_frequencies(m)
        pts = {tuple(p) for p in freqs.points}
        half = {tuple(p) for p in freqs.half}
        neg = {tuple(-p) for p in freqs.half}
        assert len(half) == freqs.n // 2
        assert half | neg == pts
        assert not (half & neg)


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=1, max_value=400))
def test_signed_permutation_closure(m):
    freqs = enumerate_frequencies(m)
    if freqs.n == 0:
        return
    pts = {tuple(int(v) for v in p) for p in freqs.points}
    for perm, signs in SIGNED_PERMUTATIONS:
        mapped = {
            (signs[0] * p[perm[0]], signs[1] * p[perm[1]], signs[2] * p[perm[2]])
            for p in pts
        }
        assert mapped == pts


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=1, max_value=600))
def test_coordinate_square_sums(m):
    freqs = enumerate_frequencies(m)
    if freqs.n == 0:
        return
    pts = freqs.points.astype(np.int64)
    for i in range(3):
        assert int((pts[:, i] ** 2).sum()) * 3 == m * freqs.n


def test_spectral_moments_m2():
    out = spectral_moments(enumerate_frequencies(2))
    assert out["psi"] == Fraction(2, 3)
    assert out["phi"] == Fraction(1, 3)
    assert out["moments"][(2, 0, 0)] == pytest.approx(1 / 3, abs=0)


def test_moment_identity_exact_many_m():
    for m in range(1, 300):
        freqs = enumerate_frequencies(m)
        if freqs.n == 0:
            continue
        out = spectral_moments(freqs, max_degree=4)
        assert out["phi"] == Fraction(m * m, 6) - out["psi"] / 2


def test_fourth_moment_equidistribution_trend():
    # (1/N) sum (mu_1/|mu|)^4 approaches the uniform-sphere value 1/5
    target = uniform_sphere_moment(4, 0, 0)
    assert target == pytest.approx(0.2)
    small = spectral_moments(enumerate_frequencies(2))["moments"][(4, 0, 0)]
    big_ms = [m for m in range(2000, 2200) if admissible(m)][:5]
    vals = [spectral_moments(enumerate_frequencies(m))["moments"][(4, 0, 0)]
            for m in big_ms]
    assert abs(np.mean(vals) - target) < abs(small - target)
    assert abs(np.mean(vals) - target) < 0.02


def test_moments_empty_set_errors():
    freqs = enumerate_frequencies(7)
    assert freqs.n == 0
    with pytest.raises(ValueError, match="empty frequency set"):
        spectral_moments(freqs)
    with pytest.raises(ValueError, match="empty frequency set"):
        spectral_measure(freqs)


def test_spectral_measure_and_orbit():
    nu = spectral_measure(enumerate_frequencies(26))
    assert nu.weights.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(np.linalg.norm(nu.atoms, axis=1), 1.0)
    orb = orbit_measure((0.3, -0.4, 0.5))
    assert len(orb.atoms) == 48
    assert orb.weights.sum() == pytest.approx(1.0, abs=1e-12)


def test_disk_cache_roundtrip(tmp_path):
    a = enumerate_frequencies(59, cache_dir=tmp_path)
    cached = list(tmp_path.rglob("59.txt"))
    assert len(cached) == 1
    text = cached[0].read_text().strip().splitlines()
    assert len(text) == a.n and len(text[0].split()) == 3
    b = enumerate_frequencies(59, cache_dir=tmp_path)
    assert np.array_equal(a.points, b.points)
    assert np.array_equal(a.half, b.half)
