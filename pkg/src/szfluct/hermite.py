"""Probabilists' Hermite polynomials, Hermite series and test functions.

Convention: ``H_{q+1}(x) = x H_q(x) - q H_{q-1}(x)``, orthogonal for the
standard Gaussian measure with ``E[H_q(Z)^2] = q!``.
"""

from __future__ import annotations

import csv
import functools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.linalg import eigh_tridiagonal

DEFAULT_K = 64
DEFAULT_QUAD_ORDER = 160


def hermite_eval(q: int, x):
    if q < 0:
        raise ValueError("q must be >= 0")
    return hermite_eval_sequence(q, x)[q]


def hermite_eval_sequence(q_max: int, x) -> np.ndarray:
    """Array ``[H_0(x), ..., H_{q_max}(x)]`` from one recurrence pass."""
    if q_max < 0:
        raise ValueError("q_max must be >= 0")
    x = np.asarray(x, dtype=np.float64)
    out = np.empty((q_max + 1,) + x.shape)
    out[0] = 1.0
    if q_max >= 1:
        out[1] = x
    for q in range(1, q_max):
        out[q + 1] = x * out[q] - q * out[q - 1]
    return out


def physicists_hermite(n: int, x):
    """Physicists' h_n(x) = 2^{n/2} H_n(sqrt(2) x).

    The only place the other convention appears; everything else in the
    package is probabilists' Hermite.
    """
    return 2.0 ** (n / 2) * hermite_eval(n, math.sqrt(2.0) * np.asarray(x, dtype=np.float64))


def _orthonormal_sequence(q_max: int, x: np.ndarray) -> np.ndarray:
    """psi_k = H_k / sqrt(k!), evaluated with the normalised recurrence."""
    out = np.empty((q_max + 1,) + x.shape)
    out[0] = 1.0
    if q_max >= 1:
        out[1] = x
    for k in range(1, q_max):
        out[k + 1] = (x * out[k] - math.sqrt(k) * out[k - 1]) / math.sqrt(k + 1)
    return out


@functools.lru_cache(maxsize=None)
def gauss_hermite(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights for E[f(Z)], Z ~ N(0,1), exact for degree < 2*order.

    Starting values are the Jacobi-matrix eigenvalues; each node is then
    polished by Newton steps on psi_order, and weights are Christoffel
    numbers ``1 / sum_k psi_k(x)^2``.
    """
    if order < 1:
        raise ValueError("order must be positive")
    if order == 1:
        return np.zeros(1), np.ones(1)
    off = np.sqrt(np.arange(1, order, dtype=np.float64))
    x = eigh_tridiagonal(np.zeros(order), off, eigvals_only=True)
    for _ in range(3):
        psi = _orthonormal_sequence(order, x)
        # psi_n' = sqrt(n) psi_{n-1}
        step = psi[order] / (math.sqrt(order) * psi[order - 1])
        x = x - step
        if np.max(np.abs(step)) < 1e-15 * max(1.0, np.max(np.abs(x))):
            break
    x = 0.5 * (x - x[::-1])  # enforce exact symmetry
    psi = _orthonormal_sequence(order - 1, x)
    w = 1.0 / np.sum(psi * psi, axis=0)
    w = 0.5 * (w + w[::-1])
    w /= math.fsum(w)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@dataclass(frozen=True)
class HermiteSeries:
    coeffs: tuple[float, ...]

    def __post_init__(self):
        c = tuple(float(v) for v in self.coeffs)
        if not c:
            c = (0.0,)
        if not all(math.isfinite(v) for v in c):
            raise ValueError("Hermite coefficients must be finite")
        object.__setattr__(self, "coeffs", c)

    @property
    def K(self) -> int:
        return len(self.coeffs) - 1

    def __getitem__(self, k: int) -> float:
        return self.coeffs[k] if 0 <= k < len(self.coeffs) else 0.0

    def degree(self) -> int:
        """Index of the last nonzero coefficient (0 for the zero series)."""
        for k in range(self.K, -1, -1):
            if self.coeffs[k] != 0.0:
                return k
        return 0

    def l2_norm_sq(self) -> float:
        """gamma(phi^2) = sum c_k^2 k!."""
        return math.fsum(c * c * math.factorial(k) for k, c in enumerate(self.coeffs))


def hermite_coefficients(phi: Callable, K: int, quad_order: int) -> HermiteSeries:
    """c_k = (1/k!) E[phi(Z) H_k(Z)] for k = 0..K by Gauss-Hermite quadrature."""
    if K < 0:
        raise ValueError("K must be >= 0")
    if quad_order < 2 * K + 2:
        raise ValueError(f"quad_order {quad_order} too small for K={K} (need >= {2 * K + 2})")
    x, w = gauss_hermite(quad_order)
    fx = np.asarray(phi(x), dtype=np.float64) * w
    psi = _orthonormal_sequence(K, x)
    proj = psi @ fx
    norms = np.array([math.sqrt(math.factorial(k)) for k in range(K + 1)])
    return HermiteSeries(tuple(proj / norms))


def series_eval(s: HermiteSeries, x):
    x = np.asarray(x, dtype=np.float64)
    c = s.coeffs
    h_prev, h = np.ones_like(x), x
    total = c[0] * h_prev
    if s.K >= 1:
        total = total + c[1] * h
    for q in range(1, s.K):
        h_prev, h = h, x * h - q * h_prev
        total = total + c[q + 1] * h
    return total


def gaussian_mean(s: HermiteSeries) -> float:
    return s.coeffs[0]


def star_diagnostic(s: HermiteSeries, A: float) -> float:
    """Truncated sum_k |c_k| k! A^k; a report, never a gate."""
    if A <= 0:
        raise ValueError("A must be positive")
    return math.fsum(abs(c) * math.factorial(k) * A**k for k, c in enumerate(s.coeffs))


def monomial_series(p: int) -> HermiteSeries:
    """Exact expansion x^p = sum_m p! / (m! (p-2m)! 2^m) H_{p-2m}."""
    c = [0.0] * (p + 1)
    for m in range(p // 2 + 1):
        c[p - 2 * m] = math.factorial(p) // (math.factorial(m) * math.factorial(p - 2 * m) * 2**m)
    return HermiteSeries(tuple(c))


@dataclass(frozen=True)
class TestFunction:
    """A test function phi with its Hermite data.

    ``polynomial`` marks series that represent phi exactly (so phi(S_n) is a
    trigonometric polynomial of degree ``series.degree() * n``).
    """

    __test__ = False  # not a pytest class

    evaluator: Callable = field(repr=False)
    series: HermiteSeries
    gaussian_mean: float
    label: str
    phi_sq_mean: float
    polynomial: bool

    def __call__(self, x):
        return self.evaluator(x)


def _from_series(s: HermiteSeries, label: str) -> TestFunction:
    return TestFunction(
        evaluator=lambda x, s=s: series_eval(s, x),
        series=s,
        gaussian_mean=gaussian_mean(s),
        label=label,
        phi_sq_mean=s.l2_norm_sq(),
        polynomial=True,
    )


def read_series_csv(path) -> HermiteSeries:
    """Two-column CSV ``k,c_k`` with a header; missing k default to 0."""
    entries: dict[int, float] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or len(header) < 2:
            raise ValueError(f"{path}: expected header 'k,c_k'")
        for row in reader:
            if not row or not "".join(row).strip():
                continue
            k, c = int(row[0]), float(row[1])
            if k < 0:
                raise ValueError(f"{path}: negative index {k}")
            entries[k] = entries.get(k, 0.0) + c
    if not entries:
        return HermiteSeries((0.0,))
    coeffs = [0.0] * (max(entries) + 1)
    for k, c in entries.items():
        coeffs[k] = c
    return HermiteSeries(tuple(coeffs))


def builtin(spec: str, K: int = DEFAULT_K, quad_order: int = DEFAULT_QUAD_ORDER) -> TestFunction:
    """Test function from a short spec string.

    ``x^p``, ``hermite:q``, ``cos:t``, ``exp:alpha``, ``series:c0,c1,...`` or
    ``series:<path to k,c_k CSV>``.
    """
    spec = spec.strip()
    if spec.startswith("x^"):
        p = int(spec[2:])
        if p < 0:
            raise ValueError("negative power")
        return _from_series(monomial_series(p), spec)
    if spec.startswith("hermite:"):
        q = int(spec.split(":", 1)[1])
        if q < 0:
            raise ValueError("Hermite index must be >= 0")
        c = [0.0] * (q + 1)
        c[q] = 1.0
        return _from_series(HermiteSeries(tuple(c)), spec)
    if spec.startswith("cos:"):
        t = float(spec.split(":", 1)[1])
        f = lambda x, t=t: np.cos(t * np.asarray(x, dtype=np.float64))  # noqa: E731
        s = hermite_coefficients(f, K, quad_order)
        return TestFunction(f, s, math.exp(-t * t / 2), spec, (1 + math.exp(-2 * t * t)) / 2, False)
    if spec.startswith("exp:"):
        alpha = float(spec.split(":", 1)[1])
        f = lambda x, a=alpha: np.exp(a * np.asarray(x, dtype=np.float64))  # noqa: E731
        s = hermite_coefficients(f, K, quad_order)
        return TestFunction(f, s, math.exp(alpha * alpha / 2), spec, math.exp(2 * alpha * alpha), False)
    if spec.startswith("series:"):
        body = spec.split(":", 1)[1]
        try:
            coeffs = tuple(float(v) for v in body.split(","))
        except ValueError:
            return _from_series(read_series_csv(body), spec)
        return _from_series(HermiteSeries(coeffs), spec)
    raise ValueError(f"unknown test function spec {spec!r}")
