"""Limit variances of the fluctuation statistic.

For Gaussian coefficients the limit variance is
``sigma_phi^2 = sum_{k>=2} c_k^2 sigma_k^2`` with
``sigma_k^2 = k!/(2 pi) int_R (sin x / x)^k dx``; general symmetric laws add
``c_2^2 (E a^4 - 3) / 2``.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import integrate, special

from .coeffs import CoefficientDistribution, moment
from .hermite import HermiteSeries, TestFunction
from .trigpoly import GRID_CAP, GridTooLarge, dirichlet_grid, grid_size

# Periods integrated panel by panel before the remaining tail is folded.
MAX_PANELS = 64


@functools.lru_cache(maxsize=None)
def _sinc_moment_ratio(k: int) -> Fraction:
    """int_R sinc^k / pi as an exact rational."""
    total = sum((-1) ** j * math.comb(k, j) * (k - 2 * j) ** (k - 1) for j in range(k // 2 + 1))
    return Fraction(total, 2 ** (k - 1) * math.factorial(k - 1))


@functools.lru_cache(maxsize=1)
def _closed_form_checked() -> bool:
    for k in range(2, 13):
        closed = float(_sinc_moment_ratio(k)) * math.pi
        quad = sinc_moment_quadrature(k, 1e-11)
        if abs(closed - quad) > 1e-9:
            raise ArithmeticError(f"closed sinc moment k={k} disagrees with quadrature: {closed} vs {quad}")
    return True


def sinc_moment_closed(k: int) -> float:
    """int_R (sin x / x)^k dx from the finite alternating binomial sum.

    The sum is evaluated in integers; terms reach ~k^k and alternate, so
    floating point would lose everything beyond k ~ 20.
    """
    if k < 2:
        raise ValueError("sinc moment needs k >= 2")
    _closed_form_checked()
    return float(_sinc_moment_ratio(k)) * math.pi


def _sinc_pow(t, k, absolute):
    s = np.sinc(np.asarray(t) / math.pi)
    return np.abs(s) ** k if absolute else s**k


def _folded_tail(k: int, L: int, absolute: bool, tol: float) -> float:
    """sum_{j>=L} int_{j pi}^{(j+1) pi} sinc^k as one integral over [0, pi].

    With x = t + j pi, sin(x)^k = (+-1)^{jk} sin(t)^k and the sum over j of
    (t + j pi)^{-k} is a Hurwitz zeta value.
    """
    if absolute or k % 2 == 0:
        def kernel(t):
            return math.pi ** (-k) * special.zeta(k, L + t / math.pi)
    else:
        even0 = -(-L // 2)
        odd0 = -(-(L - 1) // 2)

        def kernel(t):
            two_pi = 2 * math.pi
            return two_pi ** (-k) * (special.zeta(k, even0 + t / two_pi) - special.zeta(k, odd0 + (t + math.pi) / two_pi))

    def f(t):
        st = math.sin(t)
        return (abs(st) ** k if absolute else st**k) * kernel(t)

    val, _ = integrate.quad(f, 0.0, math.pi, epsabs=tol / 8, epsrel=1e-13, limit=200)
    return val


def sinc_moment_quadrature(k: int, tol: float, absolute: bool = False, half_line: bool = False) -> float:
    """int (sin x/x)^k dx by adaptive panels, one panel per period of sin.

    Panels cover [0, L pi]. If the crude tail bound X^{1-k}/(k-1) at X = L pi
    is already below tol/2 the tail is dropped; otherwise (at most
    ``MAX_PANELS`` panels) the tail is folded onto [0, pi] and integrated.
    """
    if k < 2:
        raise ValueError("sinc moment needs k >= 2")
    if tol <= 0:
        raise ValueError("tol must be positive")
    scale = 1.0 if half_line else 2.0
    L = 1
    while scale * (L * math.pi) ** (1 - k) / (k - 1) > tol / 2 and L < MAX_PANELS:
        L += 1
    need_tail = scale * (L * math.pi) ** (1 - k) / (k - 1) > tol / 2
    panel_tol = tol / (4 * scale * L)
    total = 0.0
    err = 0.0
    for j in range(L):
        v, e = integrate.quad(
            _sinc_pow, j * math.pi, (j + 1) * math.pi, args=(k, absolute), epsabs=panel_tol, epsrel=1e-14, limit=200
        )
        total += v
        err += e
    if need_tail:
        total += _folded_tail(k, L, absolute, tol / scale)
    if scale * err > tol:
        raise ArithmeticError(f"sinc quadrature k={k}: error estimate {scale * err} above tol {tol}")
    return scale * total


def sinc_abs_moment(k: int, tol: float = 1e-10, half_line: bool = False) -> float:
    """int |sin x / x|^k dx over R, or over [0, inf) with ``half_line``."""
    return sinc_moment_quadrature(k, tol, absolute=True, half_line=half_line)


def sigma_q_sq(q: int) -> float:
    """Per-chaos limit variance q!/(2 pi) int sinc^q."""
    if q < 2:
        raise ValueError("chaos variance defined for q >= 2 (the first chaos vanishes identically)")
    _closed_form_checked()
    return float(math.factorial(q) * _sinc_moment_ratio(q) / 2)


@dataclass(frozen=True)
class VariancePrediction:
    sigma_phi_sq: float
    kurtosis_correction: float
    total: float
    tail_bound: float
    k_max_used: int


def _series_of(phi) -> tuple[HermiteSeries, float | None]:
    if isinstance(phi, TestFunction):
        return phi.series, (None if phi.polynomial else phi.phi_sq_mean)
    return phi, None


def sigma_phi_sq(phi, phi_sq_mean: float | None = None) -> tuple[float, float]:
    """(sum_{k>=2} c_k^2 sigma_k^2, tail bound).

    The tail over k > K is at most (1/2) sum_{k>K} c_k^2 k!, since
    |int sinc^k| <= pi for k >= 2. When gamma(phi^2) is known that sum is
    gamma(phi^2) - sum_{k<=K} c_k^2 k!; a finite series has no tail.
    """
    s, known = _series_of(phi)
    if phi_sq_mean is None:
        phi_sq_mean = known
    terms = [s[k] ** 2 * sigma_q_sq(k) for k in range(2, s.K + 1) if s[k] != 0.0]
    value = math.fsum(terms)
    tail = 0.0
    if phi_sq_mean is not None:
        tail = max(0.0, (phi_sq_mean - s.l2_norm_sq()) / 2)
    return value, tail


def kurtosis_correction(phi, dist: CoefficientDistribution) -> float:
    s, _ = _series_of(phi)
    return s[2] ** 2 / 2 * (moment(dist, 4) - 3.0)


def _truncation_order(s: HermiteSeries, phi_sq_mean: float) -> int:
    """Smallest K with tail bound <= 1e-6 * sigma^2 estimate, else s.K."""
    partial_l2 = 0.0
    partial_var = 0.0
    for k in range(s.K + 1):
        partial_l2 += s[k] ** 2 * math.factorial(k)
        if k >= 2:
            partial_var += s[k] ** 2 * sigma_q_sq(k)
        tail = max(0.0, (phi_sq_mean - partial_l2) / 2)
        if k >= 2 and tail <= 1e-6 * max(partial_var, 1e-300):
            return k
    return s.K


def predict(phi, dist: CoefficientDistribution) -> VariancePrediction:
    """Limit variance of sqrt(n)(E_X[phi(S_n)] - gamma(phi)) under ``dist``."""
    s, phi_sq = _series_of(phi)
    k_used = s.K
    if phi_sq is not None:
        k_used = _truncation_order(s, phi_sq)
        s = HermiteSeries(s.coeffs[: k_used + 1])
    sig, tail = sigma_phi_sq(s, phi_sq)
    corr = kurtosis_correction(s, dist)
    return VariancePrediction(sig, corr, sig + corr, tail, k_used)


def chaos_variance_exact(n: int, p: int, cap: int = GRID_CAP) -> float:
    """p!^2 n E[E_X[e_{n,p}]^2], exact at finite n and for any unit-variance law.

    Averaging over the coefficients leaves
    p!^2 n^{1-p} sum_{k_1<...<k_p} E_X[prod cos(k_i X)], i.e. the p-th
    elementary symmetric sum of cos(kX), k = 1..n, integrated exactly.
    """
    if p < 2:
        raise ValueError("p must be >= 2")
    if p * n + 1 > cap:
        raise GridTooLarge(f"p*n = {p * n} exceeds grid cap {cap}")
    m = grid_size(p * n, cap)
    x = 2 * math.pi * np.arange(m) / m
    e = [np.ones(m)] + [np.zeros(m) for _ in range(p)]
    for k in range(1, n + 1):
        c = np.cos(k * x)
        for j in range(p, 0, -1):
            e[j] += c * e[j - 1]
    return math.factorial(p) ** 2 * float(n) ** (1 - p) * float(np.mean(e[p]))


def gaussian_finite_n_variance(phi, n: int, cap: int = GRID_CAP) -> float:
    """Exact Var(sqrt(n) E_X[phi(S_n)]) for Gaussian coefficients.

    Equals sum_{q>=2} c_q^2 q! n E_X[D_n^q]; all powers share one grid of
    more than q_max * n nodes.
    """
    s, _ = _series_of(phi)
    q_max = s.degree()
    if q_max < 2:
        return 0.0
    if q_max * n + 1 > cap:
        raise GridTooLarge(f"q_max*n = {q_max * n} exceeds grid cap {cap}")
    m = grid_size(q_max * n, cap)
    d = dirichlet_grid(n, m)
    dq = d.copy()
    terms = []
    for q in range(2, q_max + 1):
        dq = dq * d
        if s[q] != 0.0:
            terms.append(s[q] ** 2 * math.factorial(q) * n * float(np.mean(dq)))
    return math.fsum(terms)
