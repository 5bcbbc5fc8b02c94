"""Lattice point correlations and separation sums.

An ordered l-tuple of frequencies is an l-correlation when it sums to the
zero vector.  The separation sums weight the non-correlated tuples by the
inverse squared norm of their sum; their decay against 1/N^2 is what the
static-surface variance asymptotics hinge on.

Counting strategy: multiplicity tables over exact integer keys for the small
exact path, and dense integer-rounded FFT convolutions for scan-scale m
(values are exact integers as long as the FFT roundoff stays below 1/2,
which holds comfortably for m <= a few thousand; both paths are validated
against exhaustive enumeration in the tests).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from math import isqrt
from pathlib import Path

import numpy as np
from scipy.signal import fftconvolve

from . import __version__
from .lattice import FrequencySet, admissible, default_cache_dir, enumerate_frequencies


@dataclass
class CorrelationReport:
    m: int
    n: int
    c2: int
    c4: int
    x4: int
    d4: int
    c6: int | None = None
    s2: float = 0.0
    s4: float | None = None
    s6: float | None = None

    @property
    def normalized(self) -> dict:
        """N^2 * separation sums, the scale on which 'well separated' lives."""
        out = {"n2s2": self.n ** 2 * self.s2}
        out["n2s4"] = self.n ** 2 * self.s4 if self.s4 is not None else None
        out["n2s6"] = self.n ** 2 * self.s6 if self.s6 is not None else None
        return out

    @property
    def rank_key(self) -> float:
        vals = [v for v in self.normalized.values() if v is not None]
        return max(vals)

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d.update(self.normalized)
        return d


def pair_sum_table(freqs: FrequencySet) -> tuple[np.ndarray, np.ndarray]:
    """Multiplicities of mu + mu' over ordered pairs.

    Returns (sums, counts): distinct integer triples (K, 3) and their
    multiplicities, keyed exactly (no floating point hashing).
    """
    if freqs.n == 0:
        raise ValueError("empty frequency set")
    pts = freqs.points
    sums = (pts[:, None, :] + pts[None, :, :]).reshape(-1, 3)
    side = 4 * isqrt(freqs.m) + 3
    off = 2 * isqrt(freqs.m) + 1
    keys = ((sums[:, 0] + off) * side + (sums[:, 1] + off)) * side + (sums[:, 2] + off)
    uk, counts = np.unique(keys, return_counts=True)
    z = uk % side - off
    y = (uk // side) % side - off
    x = uk // (side * side) - off
    return np.stack([x, y, z], axis=1).astype(np.int64), counts.astype(np.int64)


def _lookup(sums: np.ndarray, counts: np.ndarray, queries: np.ndarray) -> np.ndarray:
    """Multiplicity of each query triple in the table (0 when absent)."""
    side = int(sums.max() - sums.min()) + 1 if len(sums) else 1
    off = -int(sums.min()) if len(sums) else 0

    def enc(a):
        return ((a[:, 0] + off) * side + (a[:, 1] + off)) * side + (a[:, 2] + off)

    tk = enc(sums)
    order = np.argsort(tk)
    tk = tk[order]
    tc = counts[order]
    qk = enc(queries)
    idx = np.searchsorted(tk, qk)
    out = np.zeros(len(queries), dtype=np.int64)
    ok = (idx < len(tk))
    ok[ok] &= tk[idx[ok]] == qk[ok]
    out[ok] = tc[idx[ok]]
    return out


def correlation_counts(freqs: FrequencySet, ell: int) -> int:
    """Exact number of ordered ell-tuples of frequencies summing to zero."""
    if freqs.n == 0:
        raise ValueError("empty frequency set")
    if ell == 2:
        sums, counts = pair_sum_table(freqs)
        zero = (sums == 0).all(axis=1)
        return int(counts[zero].sum()) if zero.any() else 0
    if ell == 4:
        sums, counts = pair_sum_table(freqs)
        neg = _lookup(sums, counts, -sums)
        return int((counts * neg).sum())
    if ell == 6:
        sums, counts = pair_sum_table(freqs)
        # triples = pair sums + one more point
        pts = freqs.points
        trip = (sums[:, None, :] + pts[None, :, :]).reshape(-1, 3)
        tw = np.repeat(counts, freqs.n)
        side = 6 * isqrt(freqs.m) + 3
        off = 3 * isqrt(freqs.m) + 1
        keys = ((trip[:, 0] + off) * side + (trip[:, 1] + off)) * side + (trip[:, 2] + off)
        order = np.argsort(keys)
        keys, tw = keys[order], tw[order]
        cut = np.flatnonzero(np.diff(keys)) + 1
        grp = np.add.reduceat(tw, np.concatenate([[0], cut]))
        uk = keys[np.concatenate([[0], cut])]
        # T(v) counts triples summing to v; by symmetry of E, T(-v) = T(v)
        z = uk % side - off
        y = (uk // side) % side - off
        x = uk // (side * side) - off
        tv = np.stack([x, y, z], axis=1)
        negk = ((-tv[:, 0] + off) * side + (-tv[:, 1] + off)) * side + (-tv[:, 2] + off)
        idx = np.searchsorted(uk, negk)
        neg = np.zeros(len(uk), dtype=np.int64)
        ok = idx < len(uk)
        ok[ok] &= uk[idx[ok]] == negk[ok]
        neg[ok] = grp[idx[ok]]
        return int((grp * neg).sum())
    raise ValueError(f"unsupported correlation order ell={ell}")


def split_degenerate(freqs: FrequencySet) -> tuple[int, int]:
    """(x4, d4): non-degenerate vs pair-cancelling zero-sum quadruples.

    Degenerate quadruples are exactly those where one of the three pairings
    cancels; inclusion-exclusion gives 3 N^2 - 3 N (each pairing contributes
    N^2, the pairwise intersections N each, the triple intersection is empty
    for m >= 1).
    """
    n = freqs.n
    if n == 0:
        raise ValueError("empty frequency set")
    d4 = 3 * n * n - 3 * n
    c4 = correlation_counts(freqs, 4)
    return c4 - d4, d4


def _dense_indicator(freqs: FrequencySet) -> np.ndarray:
    r = isqrt(freqs.m)
    side = 2 * r + 1
    grid = np.zeros((side, side, side))
    idx = freqs.points + r
    grid[idx[:, 0], idx[:, 1], idx[:, 2]] = 1.0
    return grid


def _inverse_norm_weighted_sum(grid: np.ndarray) -> float:
    """sum over v != 0 of grid(v)/|v|^2, slab-wise; the grid is centered."""
    side = grid.shape[0]
    half = side // 2
    ax = np.arange(side) - half
    yy, zz = np.meshgrid(ax, ax, indexing="ij")
    yz2 = (yy * yy + zz * zz).astype(float)
    total = 0.0
    for i, x in enumerate(ax):
        n2 = yz2 + float(x * x)
        if x == 0:
            n2[half, half] = np.inf  # exclude the zero vector
        total += float((grid[i] / n2).sum())
    return total


def separation_sum(freqs: FrequencySet, ell: int) -> float:
    """S_ell = (1/N^ell) sum over non-correlated ell-tuples of 1/|sum|^2."""
    if freqs.n == 0:
        raise ValueError("empty frequency set")
    n = freqs.n
    if ell == 2:
        sums, counts = pair_sum_table(freqs)
        n2 = (sums * sums).sum(axis=1).astype(float)
        nz = n2 > 0
        return float((counts[nz] / n2[nz]).sum()) / n ** 2
    if ell == 4:
        ind = _dense_indicator(freqs)
        p = np.rint(fftconvolve(ind, ind))
        q4 = np.rint(fftconvolve(p, p))
        return _inverse_norm_weighted_sum(q4) / float(n) ** 4
    if ell == 6:
        ind = _dense_indicator(freqs)
        p = np.rint(fftconvolve(ind, ind))
        q4 = np.rint(fftconvolve(p, p))
        q6 = np.rint(fftconvolve(q4, p))
        del q4, p
        return _inverse_norm_weighted_sum(q6) / float(n) ** 6
    raise ValueError(f"unsupported correlation order ell={ell}")


def _c6_fft(freqs: FrequencySet) -> int:
    ind = _dense_indicator(freqs)
    p = np.rint(fftconvolve(ind, ind))
    t = np.rint(fftconvolve(p, ind))
    return int(round(float((t * t[::-1, ::-1, ::-1]).sum())))


def report(freqs: FrequencySet, full: bool = True) -> CorrelationReport:
    """Correlation counts and separation sums for one frequency set.

    full=False skips the sixth-order quantities and S_4 (the expensive part
    at scan scale).
    """
    c4 = correlation_counts(freqs, 4)
    x4, d4 = split_degenerate(freqs)
    rep = CorrelationReport(
        m=freqs.m, n=freqs.n, c2=correlation_counts(freqs, 2),
        c4=c4, x4=x4, d4=d4, s2=separation_sum(freqs, 2),
    )
    if full:
        rep.s4 = separation_sum(freqs, 4)
        rep.s6 = separation_sum(freqs, 6)
        rep.c6 = correlation_counts(freqs, 6) if freqs.n <= 120 else _c6_fft(freqs)
    return rep


def _scan_cache_file(cache_dir: Path, m: int) -> Path:
    return cache_dir / __version__ / "correlations" / f"{m}.json"


def scan_well_separated(m_lo: int, m_hi: int, budget: int = 16,
                        cache_dir: str | Path | None = None) -> list[CorrelationReport]:
    """Rank admissible m in [m_lo, m_hi] by separation quality.

    Every admissible m gets counts and S_2.  The `budget` best candidates by
    N^2 S_2 additionally get S_4, S_6 and |C(6)| (the costly convolutions),
    and the returned list puts the fully evaluated reports first, ranked by
    max over ell of N^2 S_ell ascending.  The ranking makes no claim of
    well-separatedness; it only orders candidates.
    """
    if m_lo > m_hi:
        raise ValueError("m_lo must be <= m_hi")
    cache_dir = Path(cache_dir) if cache_dir is not None else default_cache_dir()
    stage_a: list[CorrelationReport] = []
    for m in range(max(m_lo, 1), m_hi + 1):
        if not admissible(m):
            continue
        freqs = enumerate_frequencies(m, cache_dir=cache_dir)
        if freqs.n == 0:
            continue
        stage_a.append(report(freqs, full=False))
    stage_a.sort(key=lambda r: (r.normalized["n2s2"], r.m))
    for rep in stage_a[:budget]:
        cached = None
        if cache_dir is not None:
            f = _scan_cache_file(cache_dir, rep.m)
            if f.exists():
                cached = json.loads(f.read_text())
        if cached is not None:
            rep.c6, rep.s4, rep.s6 = cached["c6"], cached["s4"], cached["s6"]
        else:
            freqs = enumerate_frequencies(rep.m, cache_dir=cache_dir)
            rep.s4 = separation_sum(freqs, 4)
            rep.s6 = separation_sum(freqs, 6)
            rep.c6 = _c6_fft(freqs)
            if cache_dir is not None:
                f = _scan_cache_file(cache_dir, rep.m)
                f.parent.mkdir(parents=True, exist_ok=True)
                f.write_text(json.dumps({"c6": rep.c6, "s4": rep.s4, "s6": rep.s6}))
    done = [r for r in stage_a if r.s6 is not None]
    rest = [r for r in stage_a if r.s6 is None]
    done.sort(key=lambda r: (r.rank_key, r.m))
    return done + rest


def two_squares_lower_bound(m: int) -> tuple[float, float, bool]:
    """Check sum over mu != mu' of 1/|mu - mu'|^2 against r2(m-1)/4.

    Points (x, y, 1) and (x, y, -1) with x^2 + y^2 = m - 1 sit at distance 2,
    which pins the pair sum from below by the number of two-square
    representations of m - 1.
    """
    if m < 2:
        raise ValueError("m must be >= 2")
    r2 = 0
    rr = isqrt(m - 1)
    for x in range(-rr, rr + 1):
        y2 = m - 1 - x * x
        y = isqrt(y2)
        if y * y == y2:
            r2 += 1 if y == 0 else 2
    if r2 == 0:
        raise ValueError("construction inapplicable: m - 1 is not a sum of two squares")
    freqs = enumerate_frequencies(m)
    pts = freqs.points.astype(float)
    gram = pts @ pts.T
    d2 = 2.0 * m - 2.0 * gram
    np.fill_diagonal(d2, np.inf)
    lhs = float((1.0 / d2).sum())
    rhs = r2 / 4.0
    return lhs, rhs, lhs >= rhs
