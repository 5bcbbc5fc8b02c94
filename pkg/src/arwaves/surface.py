"""Reference surfaces in the unit torus and their geometric functionals.

Spheres are parametrized by six gnomonic cubed-sphere charts (no polar
degeneracy); caps and hemispheres use a single polar chart about the +z
axis, which keeps the integration domain exact and the quadrature spectrally
accurate (clipping cube faces by latitude would cap the accuracy at the cell
size, well short of what the static-surface identities need).

A chart exposes u_range/v_range, periodic_v, and vectorized position /
normal / density maps; density is the area Jacobian, so a chart integral is
sum of f * density * du * dv.  All built-ins live inside one fundamental
cell; nothing wraps around.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import pi

import numpy as np

from .lattice import (
    MeasureOnSphere,
    admissible,
    enumerate_frequencies,
    orbit_measure,
    spectral_measure,
)

CENTER_DEFAULT = (0.5, 0.5, 0.5)

# gnomonic face frames: direction ~ (u * eu + v * ev + ew), normalized
_FACES = (
    ((1, 0, 0), (0, 1, 0), (0, 0, 1)),
    ((1, 0, 0), (0, 1, 0), (0, 0, -1)),
    ((0, 1, 0), (0, 0, 1), (1, 0, 0)),
    ((0, 1, 0), (0, 0, 1), (-1, 0, 0)),
    ((0, 0, 1), (1, 0, 0), (0, 1, 0)),
    ((0, 0, 1), (1, 0, 0), (0, -1, 0)),
)


@dataclass(frozen=True)
class GnomonicFace:
    """One cube face of a sphere, gnomonically projected."""

    center: tuple
    radius: float
    face: int
    u_range: tuple = (-1.0, 1.0)
    v_range: tuple = (-1.0, 1.0)
    periodic_v: bool = False

    def _direction(self, u, v):
        eu, ev, ew = (np.asarray(e, dtype=float) for e in _FACES[self.face])
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        vec = u[..., None] * eu + v[..., None] * ev + ew
        return vec / np.sqrt(1.0 + u * u + v * v)[..., None]

    def position(self, u, v):
        return np.asarray(self.center, dtype=float) + self.radius * self._direction(u, v)

    def normal(self, u, v):
        return self._direction(u, v)

    def density(self, u, v):
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        return self.radius ** 2 * (1.0 + u * u + v * v) ** -1.5


@dataclass(frozen=True)
class PolarCap:
    """Spherical cap about the +z axis: u = polar angle, v = azimuth."""

    center: tuple
    radius: float
    theta0: float
    periodic_v: bool = True

    @property
    def u_range(self) -> tuple:
        return (0.0, self.theta0)

    @property
    def v_range(self) -> tuple:
        return (0.0, 2.0 * pi)

    def normal(self, u, v):
        th = np.asarray(u, dtype=float)
        ph = np.asarray(v, dtype=float)
        return np.stack([
            np.sin(th) * np.cos(ph),
            np.sin(th) * np.sin(ph),
            np.cos(th) * np.ones_like(ph),
        ], axis=-1)

    def position(self, u, v):
        return np.asarray(self.center, dtype=float) + self.radius * self.normal(u, v)

    def density(self, u, v):
        th = np.asarray(u, dtype=float)
        return self.radius ** 2 * np.sin(th) * np.ones_like(np.asarray(v, dtype=float))


Chart = GnomonicFace | PolarCap


@dataclass
class Surface:
    charts: list
    label: str
    nodes_per_edge: int
    # concatenated quadrature data over all charts
    points: np.ndarray = field(repr=False, default=None)    # (P, 3)
    normals: np.ndarray = field(repr=False, default=None)   # (P, 3)
    weights: np.ndarray = field(repr=False, default=None)   # (P,)

    def with_resolution(self, nodes_per_edge: int) -> "Surface":
        return _assemble(self.charts, self.label, nodes_per_edge)

    @property
    def second_moment(self) -> np.ndarray:
        """S = integral of n n^T dsigma, the workhorse 3x3 matrix."""
        return np.einsum("p,pi,pj->ij", self.weights, self.normals, self.normals)

    @property
    def fourth_moment(self) -> np.ndarray:
        """integral of the fourfold normal tensor, shape (3, 3, 3, 3)."""
        n = self.normals
        return np.einsum("p,pi,pj,pk,pl->ijkl", self.weights, n, n, n, n)


def _gauss_legendre(lo: float, hi: float, n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (hi - lo) * x + 0.5 * (hi + lo), 0.5 * (hi - lo) * w


def _chart_quadrature(chart, n: int):
    u, wu = _gauss_legendre(*chart.u_range, n)
    if chart.periodic_v:
        # midpoint rule in the periodic direction, twice the node count
        lo, hi = chart.v_range
        nv = 2 * n
        v = lo + (np.arange(nv) + 0.5) * (hi - lo) / nv
        wv = np.full(nv, (hi - lo) / nv)
    else:
        v, wv = _gauss_legendre(*chart.v_range, n)
    uu, vv = np.meshgrid(u, v, indexing="ij")
    ww = np.outer(wu, wv)
    pts = chart.position(uu, vv).reshape(-1, 3)
    nrm = chart.normal(uu, vv).reshape(-1, 3)
    den = chart.density(uu, vv).ravel()
    return pts, nrm, den * ww.ravel()


def _assemble(charts: list, label: str, nodes_per_edge: int) -> Surface:
    pts, nrm, wts = [], [], []
    for ch in charts:
        p, n, w = _chart_quadrature(ch, nodes_per_edge)
        pts.append(p)
        nrm.append(n)
        wts.append(w)
    return Surface(
        charts=charts, label=label, nodes_per_edge=nodes_per_edge,
        points=np.concatenate(pts), normals=np.concatenate(nrm),
        weights=np.concatenate(wts),
    )


def builtin(kind: str, radius: float, center=CENTER_DEFAULT,
            angle: float | None = None, nodes_per_edge: int = 48) -> Surface:
    """Build a sphere, hemisphere, or spherical cap inside the unit cell.

    kind: 'sphere' | 'hemisphere' | 'cap' (cap needs angle = polar opening
    in (0, pi)).  The closed ball around the center must embed in the cell.
    """
    if radius >= 0.5:
        raise ValueError("does not embed in unit torus")
    if radius <= 0:
        raise ValueError("radius must be positive")
    center = tuple(float(c) for c in center)
    carr = np.asarray(center)
    if np.any(carr - radius < 0) or np.any(carr + radius > 1):
        raise ValueError("does not embed in unit torus")
    if kind == "sphere":
        charts = [GnomonicFace(center=center, radius=radius, face=k) for k in range(6)]
        label = f"sphere(r={radius:g})"
    elif kind == "hemisphere":
        charts = [PolarCap(center=center, radius=radius, theta0=pi / 2)]
        label = f"hemisphere(r={radius:g})"
    elif kind == "cap":
        if angle is None or not 0 < angle < pi:
            raise ValueError("cap needs an opening angle in (0, pi)")
        charts = [PolarCap(center=center, radius=radius, theta0=angle)]
        label = f"cap(r={radius:g}, angle={angle:g})"
    else:
        raise ValueError(f"unknown surface kind {kind!r}")
    return _assemble(charts, label, nodes_per_edge)


def area(surface: Surface) -> float:
    return float(surface.weights.sum())


def interaction_integral(surface: Surface, k: int, fast: bool = False,
                         block: int = 512) -> float:
    """I_k = double integral of <n(s), n(s')>^k over the surface squared.

    Double quadrature over the shared node set, blocked so the Gram matrix
    never materializes; fast=True subsamples every other node for k >= 4.
    """
    if k % 2 != 0 or k < 2:
        raise ValueError("k must be a positive even integer")
    n, w = surface.normals, surface.weights
    if fast and k >= 4:
        n, w = n[::2], w[::2] * (surface.weights.sum() / surface.weights[::2].sum())
    total = 0.0
    for i in range(0, len(n), block):
        g = n[i:i + block] @ n.T
        total += float(w[i:i + block] @ (g ** k) @ w)
    return total


def interaction_integral_moments(surface: Surface, k: int) -> float:
    """Same I_k via the moment-tensor identity, one quadrature pass.

    <n, n'>^k expands over k-fold index tuples, so I_k is the squared
    Frobenius norm of the k-th moment tensor of the normal field.
    """
    if k % 2 != 0 or k < 2:
        raise ValueError("k must be a positive even integer")
    n, w = surface.normals, surface.weights
    prod = np.ones((len(n), 1))
    for _ in range(k):
        prod = (prod[:, :, None] * n[:, None, :]).reshape(len(n), -1)
    mom = w @ prod
    return float(mom @ mom)


def h_functional(surface: Surface, eta: MeasureOnSphere) -> float:
    """H(eta) = integral over eta of (integral <theta, n>^2 dsigma)^2.

    The inner integral is the quadratic form theta^T S theta, so each atom
    costs O(1) once the second-moment matrix is in hand.
    """
    s = surface.second_moment
    q = np.einsum("ki,ij,kj->k", eta.atoms, s, eta.atoms)
    return float(eta.weights @ (q ** 2))


def h_functional_uniform(surface: Surface) -> float:
    """H against the uniform sphere measure, via the exact average
    E[(theta^T S theta)^2] = ((tr S)^2 + 2 tr(S^2)) / 15."""
    s = surface.second_moment
    return float((np.trace(s) ** 2 + 2.0 * np.trace(s @ s)) / 15.0)


def uniform_sphere_measure(n_theta: int = 40) -> MeasureOnSphere:
    """Dense quadrature measure on the unit sphere (Gauss-Legendre x uniform)."""
    x, wx = np.polynomial.legendre.leggauss(n_theta)  # cos(theta)
    nphi = 2 * n_theta
    ph = (np.arange(nphi) + 0.5) * 2 * pi / nphi
    ct, pp = np.meshgrid(x, ph, indexing="ij")
    st = np.sqrt(1.0 - ct ** 2)
    atoms = np.stack([st * np.cos(pp), st * np.sin(pp), ct], axis=-1).reshape(-1, 3)
    w = np.repeat(wx / 2.0, nphi) / nphi
    return MeasureOnSphere(atoms=atoms, weights=w)


def is_static(surface: Surface, tol: float = 1e-6, seed: int = 0,
              spectral_ms: tuple = (1, 2, 3, 5, 6)) -> tuple[bool, dict]:
    """Battery test for staticity: H(eta) = A^2/9 for every tested eta.

    Tests the uniform measure (dense sphere quadrature), the spectral
    measures of a handful of admissible m, and 20 signed-permutation orbits
    of random directions; deviations are relative to A^2/9.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    a2over9 = area(surface) ** 2 / 9.0
    values = {"uniform": h_functional(surface, uniform_sphere_measure())}
    for m in spectral_ms:
        if not admissible(m):
            continue
        values[f"nu_{m}"] = h_functional(surface, spectral_measure(enumerate_frequencies(m)))
    rng = np.random.default_rng(seed)
    for k in range(20):
        values[f"orbit_{k}"] = h_functional(surface, orbit_measure(rng.normal(size=3)))
    rel = {k: abs(v - a2over9) / a2over9 for k, v in values.items()}
    return max(rel.values()) <= tol, {"values": values,
                                      "relative_deviation": rel,
                                      "target": a2over9}


def oscillatory_integral(surface: Surface, v) -> complex:
    """integral over the surface of exp(2 pi i <v, sigma>) dsigma."""
    v = np.asarray(v, dtype=float)
    phase = 2.0 * pi * (surface.points @ v)
    return complex(surface.weights @ np.cos(phase), surface.weights @ np.sin(phase))
