"""Orthogonal-polynomial expansion of the intersection length.

The length splits into uncorrelated components indexed by even polynomial
degree; the degree-0 piece is the exact mean, the degree-2 piece drives the
generic-surface fluctuations, and the degree-4 piece takes over on static
surfaces, where its diagonal part is a quadratic form in the six matrix
statistics W_ij.  Everything here evaluates those components and the closed
forms that predict their variances.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb, factorial, pi, sqrt

import numpy as np

from .lattice import FrequencySet, spectral_measure
from .surface import Surface, area, h_functional, interaction_integral, is_static
from .wave import Wave, evaluate, tangential_z


def hermite(q: int, t):
    """Probabilists' Hermite polynomial H_q by the three-term recursion."""
    if q < 0:
        raise ValueError("q must be non-negative")
    t = np.asarray(t, dtype=float)
    h_prev, h = np.ones_like(t), t.copy()
    if q == 0:
        return h_prev if h_prev.ndim else float(h_prev)
    for k in range(1, q):
        h_prev, h = h, t * h - k * h_prev
    return h if h.ndim else float(h)


def beta2k(k: int) -> float:
    """H_{2k}(0) / sqrt(2 pi) = (-1)^k (2k-1)!! / sqrt(2 pi)."""
    sign = -1 if k % 2 else 1
    double_fact = 1
    for j in range(1, 2 * k, 2):
        double_fact *= j
    return sign * double_fact / sqrt(2.0 * pi)


def p_poly(i: int, t) -> Fraction:
    """The auxiliary polynomial p_i(t), exactly in rationals."""
    t = Fraction(t)
    return sum(
        (-1) ** j * (-1) ** i * comb(i, j)
        * Fraction(factorial(2 * j + 1), factorial(j) ** 2) * t ** j
        for j in range(i + 1)
    )


def alpha(n: int, l: int) -> float:
    """alpha_{2n,2l}: expansion coefficients of the planar norm |(Z1, Z2)|.

    sqrt(pi/2) (2n)!(2l)! / (n! l! 2^{n+l}) p_{n+l}(1/4), evaluated in exact
    rational arithmetic and converted to float once.
    """
    if n < 0 or l < 0:
        raise ValueError("n, l must be non-negative")
    c = Fraction(factorial(2 * n) * factorial(2 * l),
                 factorial(n) * factorial(l)) / Fraction(2 ** (n + l))
    return sqrt(pi / 2.0) * float(c * p_poly(n + l, Fraction(1, 4)))


@dataclass(frozen=True)
class ChaosCoefficients:
    """beta_{2k} and alpha_{2n,2l} tables up to a given order."""

    beta: dict
    alpha: dict

    @classmethod
    def up_to(cls, q: int) -> "ChaosCoefficients":
        return cls(
            beta={k: beta2k(k) for k in range(q + 1)},
            alpha={(n, l): alpha(n, l)
                   for n in range(q + 1) for l in range(q + 1) if n + l <= q},
        )


def chaos_projection(wave: Wave, surface: Surface, q: int,
                     nodes_per_edge: int | None = None) -> float:
    """Projection of the length onto polynomial degree 2q, by quadrature.

    L[2q] = sqrt(M) sum over k+n+l=q of beta_{2k} alpha_{2n,2l} /
    ((2k)!(2n)!(2l)!) * integral of H_{2k}(F) H_{2n}(Z1) H_{2l}(Z2) dsigma.
    q = 0 needs no field values and returns pi sqrt(m/3) A exactly.
    """
    if q not in (0, 1, 2):
        raise ValueError("q must be 0, 1 or 2")
    if nodes_per_edge is not None:
        surface = surface.with_resolution(nodes_per_edge)
    root_m = sqrt(wave.spectral_scale)
    if q == 0:
        return root_m * beta2k(0) * alpha(0, 0) * area(surface)
    f = evaluate(wave, surface.points)
    z = tangential_z(wave, surface.points, surface.normals)
    total = 0.0
    for k in range(q + 1):
        for n in range(q - k + 1):
            l = q - k - n
            coeff = beta2k(k) * alpha(n, l) / (
                factorial(2 * k) * factorial(2 * n) * factorial(2 * l))
            integrand = hermite(2 * k, f) * hermite(2 * n, z[:, 0]) * hermite(2 * l, z[:, 1])
            total += coeff * float(surface.weights @ integrand)
    return root_m * total


def _full_set(wave: Wave) -> tuple[np.ndarray, np.ndarray]:
    """Mirror the half-set onto the full set (conjugate symmetry)."""
    pts = np.concatenate([wave.freqs.half, -wave.freqs.half])
    coeffs = np.concatenate([wave.coefficients, np.conj(wave.coefficients)])
    return pts, coeffs


def l2_diagonal(wave: Wave, surface: Surface) -> float:
    """Diagonal part of the degree-2 component.

    (sqrt(M) / (8 (N/2))) sum over the half-set of (|a|^2 - 1)(A - 3 q(mu)),
    with q(mu) = integral of <mu/|mu|, n>^2, i.e. the second-moment form.
    """
    half = wave.freqs.half_directions
    s = surface.second_moment
    qvals = np.einsum("ki,ij,kj->k", half, s, half)
    a = area(surface)
    w2 = np.abs(wave.coefficients) ** 2 - 1.0
    nh = len(half)
    return sqrt(wave.spectral_scale) / (8.0 * nh) * float(w2 @ (a - 3.0 * qvals))


def l2_offdiagonal(wave: Wave, surface: Surface) -> float:
    """Off-diagonal part of the degree-2 component, by direct double sum.

    O(N^2) oscillatory surface integrals; meant for tiny m as a cross-check
    of the quadrature projection (the production path is chaos_projection).
    """
    pts, coeffs = _full_set(wave)
    n = wave.freqs.n
    dirs = pts / np.linalg.norm(pts, axis=1, keepdims=True)
    phase = 2.0 * pi * (surface.points @ pts.T.astype(float))  # (P, N)
    e = np.exp(1j * phase)
    nn = surface.normals @ dirs.T  # (P, N) of <mu_hat, n(sigma)>
    w = surface.weights
    dots = dirs @ dirs.T
    total = 0.0 + 0.0j
    for i in range(n):
        integ = e[:, i][:, None] * np.conj(e) * (
            -2.0 + 3.0 * dots[i][None, :] - 3.0 * nn[:, i][:, None] * nn)
        vals = w @ integ
        vals[i] = 0.0
        total += coeffs[i] * (np.conj(coeffs) @ vals)
    return float((sqrt(wave.spectral_scale) / (8.0 * n)) * total.real)


def l4_diagonal(wave: Wave, surface: Surface) -> float:
    """Diagonal part of the degree-4 component.

    The double frequency sum with all surface integrals reduced to the
    second- and fourth-moment tensors of the normal field; the coincident
    diagonal is replaced by the |a|^4 correction term.
    """
    pts, coeffs = _full_set(wave)
    dirs = pts / np.linalg.norm(pts, axis=1, keepdims=True)
    w2 = np.abs(coeffs) ** 2 - 1.0
    w4 = np.abs(coeffs) ** 4
    a = area(surface)
    s = surface.second_moment
    t4 = surface.fourth_moment
    n = wave.freqs.n

    qv = np.einsum("ki,ij,kj->k", dirs, s, dirs)      # integral <mu,n>^2
    b = np.einsum("ki,kj->kij", dirs, dirs).reshape(n, 9)
    cross = b @ t4.reshape(9, 9) @ b.T                # integral <mu,n>^2 <mu',n>^2
    sv = np.einsum("ki,ij,lj->kl", dirs, s, dirs)     # integral <mu,n><mu',n>
    dots = dirs @ dirs.T

    jmat = (-3.0 * a - 9.0 * cross + 14.0 * qv[:, None]
            - 6.0 * a * dots ** 2 + 12.0 * dots * sv)
    quad = float(w2 @ jmat @ w2)
    corr = float(w4 @ np.diag(jmat))
    pref = sqrt(wave.spectral_scale) * 3.0 / (16.0 * 8.0) / n ** 2
    return pref * (quad - corr)


def l4_w_form(wave: Wave, surface: Surface) -> float:
    """The pair part of the degree-4 component as a quadratic form in W.

    Equivalent to the double-sum route (up to the |a|^4 correction); used to
    cross-check the W-statistics representation.
    """
    w = w_statistics(wave).w
    a = area(surface)
    s = surface.second_moment
    t4 = surface.fourth_moment
    n = wave.freqs.n
    tr = np.trace(w)
    term1 = -3.0 * a * tr ** 2
    term2 = -9.0 * float(np.einsum("ijkl,ij,kl->", t4, w, w))
    term3 = 14.0 * tr * float(np.einsum("ij,ij->", s, w))
    term4 = -6.0 * a * float((w * w).sum())
    term5 = 12.0 * float(np.einsum("ij,jk,ik->", w, w, s))
    pref = sqrt(wave.spectral_scale) * 3.0 * 2.0 / (16.0 * 8.0 * n)
    return pref * (term1 + term2 + term3 + term4 + term5)


@dataclass
class WStatistics:
    """The six quadratic statistics W_ij and their finite-m covariance."""

    w: np.ndarray        # 3x3 symmetric
    psi: float
    phi: float
    sigma_w: np.ndarray  # 6x6, index order (11, 12, 13, 22, 23, 33)


W_INDEX = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)]
CROSS_INDEX = [(a, b) for ai, a in enumerate(W_INDEX) for b in W_INDEX[ai + 1:]]

# limit covariance of W, its diagonalization O D O^T, and the sqrt of D
SIGMA_Z = np.array([
    [1 / 5, 0, 0, 1 / 15, 0, 1 / 15],
    [0, 1 / 15, 0, 0, 0, 0],
    [0, 0, 1 / 15, 0, 0, 0],
    [1 / 15, 0, 0, 1 / 5, 0, 1 / 15],
    [0, 0, 0, 0, 1 / 15, 0],
    [1 / 15, 0, 0, 1 / 15, 0, 1 / 5],
])

_O_T = np.array([
    [1 / sqrt(3), 0, 0, 1 / sqrt(3), 0, 1 / sqrt(3)],
    [-1 / sqrt(2), 0, 0, 0, 0, 1 / sqrt(2)],
    [-1 / sqrt(6), 0, 0, sqrt(2.0 / 3.0), 0, -1 / sqrt(6)],
    [0, 0, 0, 0, 1, 0],
    [0, 0, 1, 0, 0, 0],
    [0, 1, 0, 0, 0, 0],
])
O_DIAG = _O_T.T
D_DIAG = np.diag([1 / 3, 2 / 15, 2 / 15, 1 / 15, 1 / 15, 1 / 15])
DELTA_SQRT = np.sqrt(D_DIAG)


def sigma_w_pattern(psi_over_m2: float, phi_over_m2: float) -> np.ndarray:
    """Assemble the 6x6 covariance of W from psi/m^2 and phi/m^2."""
    sig = np.zeros((6, 6))
    for r, (i, j) in enumerate(W_INDEX):
        for c, (k, l) in enumerate(W_INDEX):
            if (i, j) == (k, l):
                sig[r, c] = psi_over_m2 if i == j else phi_over_m2
            elif i == j and k == l:
                sig[r, c] = phi_over_m2
    return sig


def w_statistics(wave: Wave) -> WStatistics:
    """W_ij = (1/m) (N/2)^{-1/2} sum over the half-set of (|a|^2 - 1) mu_i mu_j."""
    half = wave.freqs.half.astype(float)
    w2 = np.abs(wave.coefficients) ** 2 - 1.0
    nh = len(half)
    w = np.einsum("k,ki,kj->ij", w2, half, half) / (wave.m * sqrt(nh))
    pts = wave.freqs.points.astype(np.int64)
    n = wave.freqs.n
    psi = float((pts[:, 0] ** 4).sum()) / n
    phi = float(((pts[:, 0] * pts[:, 1]) ** 2).sum()) / n
    m2 = float(wave.m) ** 2
    return WStatistics(w=w, psi=psi, phi=phi,
                       sigma_w=sigma_w_pattern(psi / m2, phi / m2))


@dataclass
class LimitCoefficients:
    """Coefficients of the limiting quadratic form and its variance."""

    c_diag: np.ndarray      # (6,) aligned with W_INDEX
    c_cross: np.ndarray     # (15,) aligned with CROSS_INDEX
    variance: float         # 2 sum c_diag^2 + sum c_cross^2
    variance_closed: float  # (8/225)(81 I_4 + 35 A^2)
    static_surface: bool    # False tags the table "outside theorem hypotheses"


def limit_coefficients(surface: Surface, check_static: bool = True) -> LimitCoefficients:
    """All 21 coefficients of the limit form, as surface integrals of the
    normal components.  Non-static surfaces still get the table, tagged."""
    w = surface.weights
    n1, n2, n3 = surface.normals.T

    def integ(f):
        return float(w @ f)

    c = np.zeros(6)
    # order (11, 12, 13, 22, 23, 33)
    c[0] = 0.0
    c[1] = -integ(3.0 * (n1 ** 2 - n3 ** 2) ** 2 + 4.0 * n2 ** 2) / 5.0
    c[2] = -integ(11.0 / 15.0 - 2.0 * n2 ** 2 + 1.8 * n2 ** 4)
    c[3] = -0.8 * integ(n1 ** 2 + 3.0 * n2 ** 2 * n3 ** 2)
    c[4] = -0.8 * integ(n2 ** 2 + 3.0 * n1 ** 2 * n3 ** 2)
    c[5] = -0.8 * integ(n3 ** 2 + 3.0 * n1 ** 2 * n2 ** 2)

    cc = {
        ((0, 0), (0, 1)): -16.0 * sqrt(15.0) / 15.0 * integ(n1 ** 2 - n3 ** 2),
        ((0, 0), (0, 2)): -16.0 * sqrt(5.0) / 15.0 * integ(1.0 - 3.0 * n2 ** 2),
        ((0, 0), (1, 1)): 32.0 * sqrt(15.0) / 15.0 * integ(n2 * n3),
        ((0, 0), (1, 2)): 32.0 * sqrt(15.0) / 5.0 * integ(n1 * n3),
        ((0, 0), (2, 2)): 32.0 * sqrt(15.0) / 5.0 * integ(n1 * n2),
        ((0, 1), (0, 2)): 2.0 * sqrt(3.0) / 15.0 * integ((n1 ** 2 - n3 ** 2) * (1.0 + 9.0 * n2 ** 2)),
        ((0, 1), (1, 1)): 0.8 * integ(n2 * n3 * (2.0 + 3.0 * (n1 ** 2 - n3 ** 2))),
        ((0, 1), (1, 2)): 2.4 * integ(n1 * n3 * (n1 ** 2 - n3 ** 2)),
        ((0, 1), (2, 2)): 0.8 * integ(n1 * n2 * (-2.0 + 3.0 * (n1 ** 2 - n3 ** 2))),
        ((0, 2), (1, 1)): 4.0 * sqrt(3.0) / 15.0 * integ(n2 * n3 * (5.0 - 9.0 * n2 ** 2)),
        ((0, 2), (1, 2)): 4.0 * sqrt(3.0) / 15.0 * integ(n1 * n3 * (-1.0 - 9.0 * n2 ** 2)),
        ((0, 2), (2, 2)): 4.0 * sqrt(3.0) / 15.0 * integ(n1 * n2 * (5.0 - 9.0 * n2 ** 2)),
        ((1, 1), (1, 2)): 1.6 * integ(n1 * n2 * (1.0 - 3.0 * n3 ** 2)),
        ((1, 1), (2, 2)): 1.6 * integ(n1 * n3 * (1.0 - 3.0 * n2 ** 2)),
        ((1, 2), (2, 2)): 1.6 * integ(n2 * n3 * (1.0 - 3.0 * n1 ** 2)),
    }
    c_cross = np.array([cc[pair] for pair in CROSS_INDEX])

    var = 2.0 * float(c @ c) + float(c_cross @ c_cross)
    a = area(surface)
    i4 = interaction_integral(surface, 4)
    var_closed = (8.0 / 225.0) * (81.0 * i4 + 35.0 * a * a)
    static = True
    if check_static:
        static, _ = is_static(surface, tol=1e-4)
    return LimitCoefficients(c_diag=c, c_cross=c_cross, variance=var,
                             variance_closed=var_closed, static_surface=static)


def sample_limit(coeffs: LimitCoefficients | Surface, count: int, seed: int) -> np.ndarray:
    """Samples of the normalized limit variable.

    Six i.i.d. standard Gaussians feed the quadratic form; normalization by
    the closed-form standard deviation sqrt((8/225)(81 I_4 + 35 A^2)).
    """
    if isinstance(coeffs, Surface):
        coeffs = limit_coefficients(coeffs)
    rng = np.random.Generator(np.random.Philox(key=seed))
    x = rng.normal(size=(count, 6))
    vals = (x ** 2 - 1.0) @ coeffs.c_diag
    for cval, (a, b) in zip(coeffs.c_cross, CROSS_INDEX):
        if cval != 0.0:
            vals += cval * x[:, W_INDEX.index(a)] * x[:, W_INDEX.index(b)]
    return vals / sqrt(coeffs.variance_closed)


def limit_cdf_sphere(t):
    """CDF of (5 - chi2(5)) / sqrt(10), the sphere limit law."""
    from scipy.stats import chi2
    return chi2.sf(5.0 - sqrt(10.0) * np.asarray(t, dtype=float), df=5)


def predict_variance(freqs: FrequencySet, surface: Surface, regime: str,
                     tol: float = 1e-9) -> float:
    """Closed-form variance prediction for the given regime.

    generic: (pi^2/60) (m/N) (3 I - A^2)        [needs 3I - A^2 > 0]
    h_form:  (pi^2/24) (m/N) (9 H(nu) - A^2)    [finite-m refinement]
    static:  (pi^2/9600) (m/N^2) (81 I_4 + 35 A^2)
    """
    m, n = freqs.m, freqs.n
    a = area(surface)
    if regime == "generic":
        i2 = interaction_integral(surface, 2)
        lead = 3.0 * i2 - a * a
        if lead <= tol * a * a:
            raise ValueError("static or near-static surface")
        return pi ** 2 / 60.0 * (m / n) * lead
    if regime == "h_form":
        h = h_functional(surface, spectral_measure(freqs))
        return pi ** 2 / 24.0 * (m / n) * (9.0 * h - a * a)
    if regime == "static":
        i4 = interaction_integral(surface, 4)
        return pi ** 2 / 9600.0 * (m / n ** 2) * (81.0 * i4 + 35.0 * a * a)
    raise ValueError(f"unknown regime {regime!r}")


def l4_offdiagonal_variance_bound(rep) -> float:
    """m * max(|X(4)|/N^4, S_4, S_2): the bound on the part of the degree-4
    component that is never evaluated directly."""
    vals = [rep.x4 / rep.n ** 4, rep.s2]
    if rep.s4 is not None:
        vals.append(rep.s4)
    return rep.m * max(vals)
