"""Random waves: sampling, evaluation, covariance kernel, two-point blocks.

A wave stores one complex Gaussian coefficient per half-set frequency; the
conjugate-symmetric other half is implicit, so evaluation runs in real
arithmetic:

    F(x) = (2/sqrt(N)) sum over mu in E+ of
           [Re a_mu cos(2 pi <mu, x>) - Im a_mu sin(2 pi <mu, x>)].
"""

from __future__ import annotations

from dataclasses import dataclass
from math import pi, sqrt
from pathlib import Path

import numpy as np

from .lattice import FrequencySet

CLAMP_BAND = 1e-9  # 1 - r^2 at or below this is "inside the clamp band"

_EVAL_CHUNK = 1 << 21  # max entries of the (points x frequencies) work array


@dataclass(frozen=True)
class Wave:
    """One realization: coefficients indexed by the half-set of frequencies."""

    freqs: FrequencySet
    coefficients: np.ndarray  # (N/2,) complex, Re/Im each N(0, 1/2)
    seed: int | None = None

    @property
    def m(self) -> int:
        return self.freqs.m

    @property
    def spectral_scale(self) -> float:
        """M = 4 pi^2 m / 3, the variance of each partial derivative."""
        return 4.0 * pi * pi * self.freqs.m / 3.0


def sample(freqs: FrequencySet, seed: int) -> Wave:
    """Draw a wave from a counter-based stream keyed by the seed.

    The Philox generator is counter-based, so coefficient i is a fixed
    function of (seed, i) no matter how the draws are batched; identical
    (freqs, seed) always give identical coefficients.
    """
    if freqs.n == 0:
        raise ValueError("empty frequency set")
    rng = np.random.Generator(np.random.Philox(key=seed))
    half = len(freqs.half)
    re = rng.normal(scale=sqrt(0.5), size=half)
    im = rng.normal(scale=sqrt(0.5), size=half)
    return Wave(freqs=freqs, coefficients=re + 1j * im, seed=seed)


def inject(freqs: FrequencySet, coeffs: dict) -> Wave:
    """Deterministic wave with prescribed coefficients on half-set points."""
    half = freqs.half
    c = np.zeros(len(half), dtype=complex)
    table = {tuple(int(v) for v in mu): i for i, mu in enumerate(half)}
    for mu, val in coeffs.items():
        key = tuple(int(v) for v in mu)
        if key not in table:
            raise KeyError(f"{key} is not in the half-set for m={freqs.m}")
        c[table[key]] = val
    return Wave(freqs=freqs, coefficients=c)


def cosine_fixture(freqs: FrequencySet) -> Wave:
    """The wave F(x) = cos(2 pi x_1) at m = 1 (a_100 = sqrt(6)/2)."""
    if freqs.m != 1:
        raise ValueError("cosine fixture requires m = 1")
    return inject(freqs, {(1, 0, 0): sqrt(6.0) / 2.0})


def save_coefficients(wave: Wave, path: str | Path) -> None:
    """Plain-text fixture format: one 'mu_x mu_y mu_z re im' line per entry."""
    with open(path, "w") as fh:
        for mu, c in zip(wave.freqs.half, wave.coefficients):
            fh.write(f"{mu[0]} {mu[1]} {mu[2]} {c.real!r} {c.imag!r}\n")


def load_coefficients(freqs: FrequencySet, path: str | Path) -> Wave:
    coeffs = {}
    with open(path) as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            x, y, z = (int(p) for p in parts[:3])
            coeffs[(x, y, z)] = float(parts[3]) + 1j * float(parts[4])
    return inject(freqs, coeffs)


def _trig(wave: Wave, points: np.ndarray):
    """cos/sin of 2 pi <mu, x> for the half-set, chunked over points."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    mu = wave.freqs.half.T.astype(float)  # (3, K)
    k = mu.shape[1]
    rows = max(1, _EVAL_CHUNK // max(k, 1))
    for i in range(0, len(pts), rows):
        theta = (2.0 * pi) * (pts[i:i + rows] @ mu)
        yield i, np.cos(theta), np.sin(theta)


def evaluate(wave: Wave, points) -> np.ndarray:
    """F at each point; points is (..., 3)."""
    pts = np.asarray(points, dtype=float)
    shape = pts.shape[:-1]
    pts = pts.reshape(-1, 3)
    re = wave.coefficients.real
    im = wave.coefficients.imag
    scale = 2.0 / sqrt(wave.freqs.n)
    out = np.empty(len(pts))
    for i, c, s in _trig(wave, pts):
        out[i:i + len(c)] = scale * (c @ re - s @ im)
    return out.reshape(shape)


def gradient(wave: Wave, points) -> np.ndarray:
    """Ambient gradient of F at each point, shape (..., 3)."""
    pts = np.asarray(points, dtype=float)
    shape = pts.shape[:-1]
    pts = pts.reshape(-1, 3)
    mu = wave.freqs.half.astype(float)  # (K, 3)
    re = wave.coefficients.real
    im = wave.coefficients.imag
    scale = 4.0 * pi / sqrt(wave.freqs.n)
    out = np.empty((len(pts), 3))
    for i, c, s in _trig(wave, pts):
        out[i:i + len(c)] = scale * ((-s * re - c * im) @ mu)
    return out.reshape(shape + (3,))


def surface_gradient(wave: Wave, points, normals) -> np.ndarray:
    """Tangential part of the gradient: grad F - <grad F, n> n."""
    g = gradient(wave, points)
    n = np.asarray(normals, dtype=float)
    return g - (g * n).sum(axis=-1, keepdims=True) * n


def covariance(freqs: FrequencySet, x) -> float | np.ndarray:
    """r(x) = (1/N) sum over E of cos(2 pi <mu, x>)."""
    if freqs.n == 0:
        raise ValueError("empty frequency set")
    xv = np.asarray(x, dtype=float)
    theta = 2.0 * pi * (np.atleast_2d(xv.reshape(-1, 3)) @ freqs.points.T.astype(float))
    r = np.cos(theta).mean(axis=1)
    return float(r[0]) if xv.ndim == 1 else r.reshape(xv.shape[:-1])


def covariance_gradient(freqs: FrequencySet, x) -> np.ndarray:
    """D(x): the row vector of partial derivatives of r."""
    xv = np.asarray(x, dtype=float)
    pts = freqs.points.astype(float)
    theta = 2.0 * pi * (np.atleast_2d(xv.reshape(-1, 3)) @ pts.T)
    d = -(2.0 * pi / freqs.n) * (np.sin(theta) @ pts)
    return d[0] if xv.ndim == 1 else d.reshape(xv.shape)


def covariance_hessian(freqs: FrequencySet, x) -> np.ndarray:
    """Hessian of r at x, symmetric 3x3 (stacked for batched x)."""
    xv = np.asarray(x, dtype=float)
    pts = freqs.points.astype(float)
    theta = 2.0 * pi * (np.atleast_2d(xv.reshape(-1, 3)) @ pts.T)
    h = -(4.0 * pi * pi / freqs.n) * np.einsum("pk,ki,kj->pij", np.cos(theta), pts, pts)
    return h[0] if xv.ndim == 1 else h.reshape(xv.shape[:-1] + (3, 3))


# --- frames: solve out the largest normal component ------------------------

def standard_frame(normals: np.ndarray):
    """Coordinate permutation placing the largest |n_i| third, sign positive.

    The two-point blocks divide by n3 (n3 + 1); putting the dominant
    component in the third slot keeps that well conditioned at every surface
    point, and all the traces and norms downstream are invariant under the
    choice.  Returns (perm, oriented normals) with perm of shape (P, 3).
    """
    n = np.atleast_2d(np.asarray(normals, dtype=float))
    k = np.argmax(np.abs(n), axis=1)
    perm = np.empty((len(n), 3), dtype=np.int64)
    perm[:, 2] = k
    perm[:, 0] = (k + 1) % 3
    perm[:, 1] = (k + 2) % 3
    pn = np.take_along_axis(n, perm, axis=1)
    flip = pn[:, 2] < 0
    pn[flip] *= -1.0
    return perm, pn, flip


def _omega(n: np.ndarray) -> np.ndarray:
    """I - n n^T, the covariance shape of the scaled surface gradient."""
    eye = np.eye(3)
    return eye - np.einsum("...i,...j->...ij", n, n)


def _q_matrix(n: np.ndarray) -> np.ndarray:
    """2x2 square root of (L^T Omega L)^{-1} in the standardized frame."""
    n1, n2, n3 = n[..., 0], n[..., 1], n[..., 2]
    den = n3 * n3 + n3
    q = np.empty(n.shape[:-1] + (2, 2))
    q[..., 0, 0] = (n1 * n1 + n3 * n3 + n3) / den
    q[..., 0, 1] = n1 * n2 / den
    q[..., 1, 0] = n1 * n2 / den
    q[..., 1, 1] = (n2 * n2 + n3 * n3 + n3) / den
    return q


@dataclass
class KacRiceBlocks:
    """Ingredients of the two-point function at a pair of surface points."""

    r: float
    d: np.ndarray        # (3,) gradient of r, standardized frame of sigma
    hess: np.ndarray     # (3, 3)
    omega: np.ndarray    # (3, 3) at sigma
    omega_p: np.ndarray  # (3, 3) at sigma'
    q: np.ndarray        # (2, 2)
    q_p: np.ndarray
    x: np.ndarray        # (2, 2)
    x_p: np.ndarray
    y: np.ndarray
    y_p: np.ndarray

    @property
    def theta_hat(self) -> np.ndarray:
        """I_4 + [[X, Y], [Y', X']], the perturbed Gaussian covariance."""
        return np.eye(4) + np.block([[self.x, self.y], [self.y_p, self.x_p]])


_L = np.zeros((3, 2))
_L[0, 0] = _L[1, 1] = 1.0


def kac_rice_blocks(freqs: FrequencySet, sigma, sigma_p, n, n_p) -> KacRiceBlocks:
    """Assemble the 2x2 blocks X, X', Y, Y' at a pair of surface points.

    Each point gets its own standardized frame (largest normal component
    third); traces and the Gaussian expectation built from the blocks do not
    depend on that choice.  Raises inside the near-diagonal clamp band.
    """
    sigma = np.asarray(sigma, dtype=float)
    sigma_p = np.asarray(sigma_p, dtype=float)
    x = sigma - sigma_p
    r = covariance(freqs, x)
    if 1.0 - r * r <= CLAMP_BAND:
        raise ValueError("inside clamp band")
    m_scale = 4.0 * pi * pi * freqs.m / 3.0

    perm, n_std, _ = standard_frame(np.stack([np.asarray(n, float),
                                              np.asarray(n_p, float)]))
    d_full = covariance_gradient(freqs, x)
    h_full = covariance_hessian(freqs, x)
    # permute derivative components into each point's frame
    d1 = d_full[perm[0]]
    d2 = d_full[perm[1]]
    h12 = h_full[np.ix_(perm[0], perm[1])]

    om, om_p = _omega(n_std[0]), _omega(n_std[1])
    q, q_p = _q_matrix(n_std[0]), _q_matrix(n_std[1])

    a = om @ _L @ q          # (3, 2) at sigma
    a_p = om_p @ _L @ q_p    # (3, 2) at sigma'
    c = r / (1.0 - r * r)
    # D(sigma', sigma) = -D(sigma, sigma'); the sign cancels in X' and flips
    # twice in Y', so both reduce to the expressions below.
    xb = -(1.0 / ((1.0 - r * r) * m_scale)) * np.einsum("i,ik,j,jl->kl", d1, a, d1, a)
    xb_p = -(1.0 / ((1.0 - r * r) * m_scale)) * np.einsum("i,ik,j,jl->kl", d2, a_p, d2, a_p)
    core = h12 + c * np.outer(d1, d2)
    yb = -(1.0 / m_scale) * a.T @ core @ a_p
    yb_p = yb.T.copy()
    return KacRiceBlocks(r=r, d=d1, hess=h12, omega=om, omega_p=om_p,
                         q=q, q_p=q_p, x=xb, x_p=xb_p, y=yb, y_p=yb_p)


def tangential_z(wave: Wave, points, normals) -> np.ndarray:
    """Standardized pair (Z1, Z2) at each surface point, shape (P, 2).

    Defined by Omega_bar^{-1/2} applied to the rescaled tangential gradient
    in the standardized frame, so that (Z1, Z2) is a standard bivariate
    Gaussian pair and M |(Z1, Z2)|^2 = |surface gradient|^2.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    perm, n_std, _ = standard_frame(normals)
    g = gradient(wave, pts) / sqrt(wave.spectral_scale)
    gt = g - (g * np.asarray(normals)).sum(axis=1, keepdims=True) * np.asarray(normals)
    gp = np.take_along_axis(gt, perm, axis=1)
    w1, w2 = gp[:, 0], gp[:, 1]
    n1, n2, n3 = n_std[:, 0], n_std[:, 1], n_std[:, 2]
    rho2 = n1 * n1 + n2 * n2
    z = np.empty((len(pts), 2))
    reg = rho2 > 1e-28
    # Omega_bar^{-1/2} = O^T diag(1/n3, 1) O with O the rotation by (n1, n2)
    c1, c2 = np.zeros_like(n1), np.zeros_like(n1)
    c1[reg] = n1[reg] / np.sqrt(rho2[reg])
    c2[reg] = n2[reg] / np.sqrt(rho2[reg])
    u1 = c1 * w1 + c2 * w2
    u2 = -c2 * w1 + c1 * w2
    u1 = np.where(reg, u1 / np.where(reg, n3, 1.0), 0.0)
    z[:, 0] = np.where(reg, c1 * u1 - c2 * u2, w1)
    z[:, 1] = np.where(reg, c2 * u1 + c1 * u2, w2)
    return z


def z_vector(wave: Wave, sigma, n) -> tuple[float, float]:
    """Single-point version of tangential_z."""
    nv = np.asarray(n, dtype=float)
    if abs(np.linalg.norm(nv) - 1.0) > 1e-9:
        raise ValueError("normal must be a unit vector")
    z = tangential_z(wave, np.asarray(sigma, float)[None, :], nv[None, :])
    return float(z[0, 0]), float(z[0, 1])
