"""Lattice points on spheres of radius sqrt(m) and their spectral measure.

The frequency set of energy index m is the set of integer triples of squared
norm m.  It is closed under the order-48 group of signed coordinate
permutations, which is what makes exact moment identities available as
cross-checks on the enumeration.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from fractions import Fraction
from itertools import permutations, product
from math import isqrt
from pathlib import Path

import numpy as np

from . import __version__

LatticePoint = tuple[int, int, int]

# all 48 signed permutations of the coordinates, as (perm, signs) pairs
SIGNED_PERMUTATIONS = [
    (perm, signs)
    for perm in permutations(range(3))
    for signs in product((1, -1), repeat=3)
]


def representable(m: int) -> bool:
    """True iff m is a sum of three integer squares (m != 4^l (8k+7))."""
    if m < 1:
        raise ValueError("m must be a positive integer")
    while m % 4 == 0:
        m //= 4
    return m % 8 != 7


def admissible(m: int) -> bool:
    """True iff m != 0, 4, 7 (mod 8), the regime where N grows."""
    if m < 1:
        raise ValueError("m must be a positive integer")
    return m % 8 not in (0, 4, 7)


def is_sum_of_two_squares(m: int) -> bool:
    return any((m - x * x) >= 0 and isqrt(m - x * x) ** 2 == m - x * x
               for x in range(isqrt(m) + 1))


@dataclass(frozen=True)
class FrequencySet:
    """All lattice points of squared norm m, with the positive half-set."""

    m: int
    points: np.ndarray  # (N, 3) int64
    half: np.ndarray    # (N//2, 3) int64

    @property
    def n(self) -> int:
        return len(self.points)

    @property
    def directions(self) -> np.ndarray:
        """Projected points mu/sqrt(m) on the unit sphere, shape (N, 3)."""
        return self.points / np.sqrt(self.m)

    @property
    def half_directions(self) -> np.ndarray:
        return self.half / np.sqrt(self.m)

    def __repr__(self) -> str:  # keep the array dump out of logs
        return f"FrequencySet(m={self.m}, n={self.n})"


@dataclass(frozen=True)
class MeasureOnSphere:
    """Discrete probability measure on the unit sphere: unit atoms + weights."""

    atoms: np.ndarray    # (K, 3) unit vectors
    weights: np.ndarray  # (K,) nonnegative, summing to 1

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if np.any(w < 0):
            raise ValueError("weights must be non-negative")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("weights must sum to 1 within 1e-12")
        norms = np.linalg.norm(self.atoms, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-9):
            raise ValueError("atoms must be unit vectors")


def _half_mask(points: np.ndarray) -> np.ndarray:
    """Membership in the positive half-set.

    mu is kept when mu1 > 0, or mu1 = 0 and mu2 > 0, or mu = (0, 0, +sqrt m).
    Exactly one of mu, -mu survives.
    """
    x, y, z = points[:, 0], points[:, 1], points[:, 2]
    return (x > 0) | ((x == 0) & (y > 0)) | ((x == 0) & (y == 0) & (z > 0))


def _enumerate_raw(m: int) -> np.ndarray:
    pts = []
    r = isqrt(m)
    for x in range(-r, r + 1):
        mx = m - x * x
        ry = isqrt(mx)
        for y in range(-ry, ry + 1):
            z2 = mx - y * y
            z = isqrt(z2)
            if z * z != z2:
                continue
            if z == 0:
                pts.append((x, y, 0))
            else:
                pts.append((x, y, z))
                pts.append((x, y, -z))
    if not pts:
        return np.zeros((0, 3), dtype=np.int64)
    arr = np.array(sorted(pts), dtype=np.int64)
    return arr


def default_cache_dir() -> Path | None:
    env = os.environ.get("ARWAVES_CACHE_DIR")
    if env:
        return Path(env)
    return None


def _cache_file(cache_dir: Path, m: int) -> Path:
    return cache_dir / __version__ / "lattice" / f"{m}.txt"


def enumerate_frequencies(m: int, cache_dir: str | Path | None = None) -> FrequencySet:
    """Enumerate the frequency set for energy index m.

    Scans x, y and solves for z^2; O(m) per call.  When a cache directory is
    configured (argument or ARWAVES_CACHE_DIR), results are stored one file
    per m, one "x y z" triple per line.
    """
    if m < 1:
        raise ValueError("m must be a positive integer")
    cache_dir = Path(cache_dir) if cache_dir is not None else default_cache_dir()
    if cache_dir is not None:
        f = _cache_file(cache_dir, m)
        if f.exists():
            pts = np.loadtxt(f, dtype=np.int64, ndmin=2)
            if pts.size == 0:
                pts = np.zeros((0, 3), dtype=np.int64)
            return FrequencySet(m=m, points=pts, half=pts[_half_mask(pts)])
    pts = _enumerate_raw(m)
    if cache_dir is not None:
        f = _cache_file(cache_dir, m)
        f.parent.mkdir(parents=True, exist_ok=True)
        with open(f, "w") as fh:
            for x, y, z in pts:
                fh.write(f"{x} {y} {z}\n")
    return FrequencySet(m=m, points=pts, half=pts[_half_mask(pts)])


def r3_table(limit: int) -> np.ndarray:
    """r3(m) for all 0 <= m <= limit in one histogram pass."""
    r = isqrt(limit)
    xs = np.arange(-r, r + 1, dtype=np.int64)
    n2 = (xs * xs)[:, None, None] + (xs * xs)[None, :, None] + (xs * xs)[None, None, :]
    return np.bincount(n2.ravel()[n2.ravel() <= limit], minlength=limit + 1)


def spectral_measure(freqs: FrequencySet) -> MeasureOnSphere:
    """The measure nu: equal weight 1/N on each projected lattice point."""
    if freqs.n == 0:
        raise ValueError("empty frequency set")
    return MeasureOnSphere(
        atoms=freqs.directions,
        weights=np.full(freqs.n, 1.0 / freqs.n),
    )


def orbit_measure(direction) -> MeasureOnSphere:
    """W-symmetrization of a single unit direction: its 48 signed-permutation
    images with equal weight (repeats allowed, total weight 1)."""
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    atoms = np.array([
        [s[0] * d[p[0]], s[1] * d[p[1]], s[2] * d[p[2]]]
        for p, s in SIGNED_PERMUTATIONS
    ])
    return MeasureOnSphere(atoms=atoms, weights=np.full(len(atoms), 1.0 / len(atoms)))


def spectral_moments(freqs: FrequencySet, max_degree: int = 6) -> dict:
    """Monomial moments of the projected lattice points, exactly.

    Returns the table (a, b, c) -> (1/N) sum (mu1/|mu|)^a (mu2/|mu|)^b
    (mu3/|mu|)^c for a+b+c <= max_degree, together with psi = (1/N) sum mu1^4
    and phi = (1/N) sum mu1^2 mu2^2.  All sums are taken in exact integer
    arithmetic and divided at the end; the identity phi = m^2/6 - psi/2 is
    verified exactly before returning.
    """
    if freqs.n == 0:
        raise ValueError("empty frequency set")
    if max_degree > 8:
        raise ValueError("max_degree must be <= 8")
    pts = [tuple(int(v) for v in p) for p in freqs.points]
    m, n = freqs.m, freqs.n

    s4 = sum(x ** 4 for x, _, _ in pts)
    s22 = sum(x * x * y * y for x, y, _ in pts)
    psi = Fraction(s4, n)
    phi = Fraction(s22, n)
    if phi != Fraction(m * m, 6) - psi / 2:
        raise AssertionError(
            f"moment identity violated at m={m}: phi={phi}, psi={psi}"
        )

    moments: dict[tuple[int, int, int], float] = {}
    for a in range(max_degree + 1):
        for b in range(max_degree + 1 - a):
            for c in range(max_degree + 1 - a - b):
                if (a + b + c) % 2 == 1 or a % 2 or b % 2 or c % 2:
                    # odd exponent: vanishes by sign symmetry
                    moments[(a, b, c)] = 0.0
                    continue
                s = sum(x ** a * y ** b * z ** c for x, y, z in pts)
                moments[(a, b, c)] = float(
                    Fraction(s, n * m ** ((a + b + c) // 2))
                )
    return {
        "m": m,
        "n": n,
        "moments": moments,
        "psi": psi,
        "phi": phi,
    }
