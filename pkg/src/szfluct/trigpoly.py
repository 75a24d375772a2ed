"""Random trigonometric polynomials S_n and their equispaced quadrature.

``S_n(x) = n^{-1/2} sum_{k=1}^n a_k cos(kx) + b_k sin(kx)``.

The spatial average ``E_X[f] = (1/2pi) int_0^{2pi} f`` is realised by the
plain mean over ``m`` equispaced nodes, which is exact for trigonometric
polynomials of degree below ``m``. Every integrand in this package is such a
polynomial, so grid sizes are chosen from degrees, never by convergence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.fft

from .coeffs import rng_stream

TWO_PI = 2.0 * math.pi

# Largest grid any exact-quadrature routine will allocate.
GRID_CAP = 1 << 22


class GridTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class TrigPoly:
    n: int
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, dtype=np.float64)
        b = np.asarray(self.b, dtype=np.float64)
        if self.n < 1:
            raise ValueError("degree n must be positive")
        if a.shape != (self.n,) or b.shape != (self.n,):
            raise ValueError(f"coefficient arrays must have length n={self.n}")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise ValueError("coefficients must be finite")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @classmethod
    def from_coeffs(cls, a, b) -> TrigPoly:
        a = np.atleast_1d(np.asarray(a, dtype=np.float64))
        return cls(len(a), a, b)


@dataclass(frozen=True)
class EquispacedGrid:
    m: int

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("grid size must be positive")

    def node(self, j: int) -> float:
        return TWO_PI * j / self.m

    @property
    def nodes(self) -> np.ndarray:
        return TWO_PI * np.arange(self.m) / self.m


def grid_size(degree: int, cap: int = GRID_CAP) -> int:
    """Smallest transform-friendly m > degree.

    Exactness only needs ``m >= degree + 1``; the rounding is for FFT speed.
    """
    m = scipy.fft.next_fast_len(int(degree) + 1)
    if m > cap:
        raise GridTooLarge(f"grid of size {m} exceeds cap {cap}")
    return m


def evaluate(p: TrigPoly, x):
    """S_n at a point or an array of points."""
    x = np.asarray(x, dtype=np.float64)
    k = np.arange(1, p.n + 1)
    kx = np.multiply.outer(x, k)
    return (np.cos(kx) @ p.a + np.sin(kx) @ p.b) / math.sqrt(p.n)


def grid_values(a, b, m: int) -> np.ndarray:
    """Values of S_n on the m-node grid for one or a batch of coefficient rows.

    ``a`` and ``b`` have shape ``(n,)`` or ``(batch, n)``. Frequencies are
    folded modulo m, so any m works, including m <= n.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    n = a.shape[-1]
    c = a - 1j * b
    # bin k holds frequency k; frequencies >= m wrap around (aliasing is exact on the grid)
    rows = -(-(n + 1) // m)
    padded = np.zeros(a.shape[:-1] + (rows * m,), dtype=np.complex128)
    padded[..., 1 : n + 1] = c
    folded = padded.reshape(a.shape[:-1] + (rows, m)).sum(axis=-2)
    vals = scipy.fft.ifft(folded, axis=-1).real * m
    return vals / math.sqrt(n)


def eval_grid(p: TrigPoly, m: int) -> np.ndarray:
    if m < 1:
        raise ValueError("grid size must be positive")
    return grid_values(p.a, p.b, m)


def summand_grid(p: TrigPoly, m: int) -> np.ndarray:
    """Matrix of normalised summands ``(a_k cos kx_j + b_k sin kx_j)/sqrt(n)``.

    Shape ``(m, n)``; row sums are S_n on the grid.
    """
    x = EquispacedGrid(m).nodes
    kx = np.multiply.outer(x, np.arange(1, p.n + 1))
    return (np.cos(kx) * p.a + np.sin(kx) * p.b) / math.sqrt(p.n)


def quadrature_mean(values) -> float:
    values = np.asarray(values, dtype=np.float64)
    if values.size < 1:
        raise ValueError("empty grid")
    return float(np.mean(values, axis=-1)) if values.ndim == 1 else np.mean(values, axis=-1)


def second_moment_closed_form(p: TrigPoly) -> float:
    """E_X[S_n^2] = (1/n) sum (a_k^2 + b_k^2)/2 (Parseval)."""
    return math.fsum(p.a * p.a) / (2 * p.n) + math.fsum(p.b * p.b) / (2 * p.n)


def dirichlet(n: int, x):
    """Normalised Dirichlet kernel D_n(x) = (1/n) sum_{k=1}^n cos(kx)."""
    x = np.asarray(x, dtype=np.float64)
    # reduce to [-pi, pi] first: n*x/2 of an unreduced x loses ~n*eps*|x| absolutely,
    # which the small denominator near 2*pi*k would amplify
    x = x - TWO_PI * np.round(x / TWO_PI)
    half = np.sin(x / 2)
    near = np.abs(half) < 1e-8
    safe = np.where(near, 1.0, half)
    out = np.cos((n + 1) * x / 2) * np.sin(n * x / 2) / (n * safe)
    if np.any(near):
        xs = x[near] if x.ndim else x
        k = np.arange(1, n + 1)
        direct = np.cos(np.multiply.outer(xs, k)).sum(axis=-1) / n
        if x.ndim:
            out[near] = direct
        else:
            out = direct
    return float(out) if out.ndim == 0 else out


def dirichlet_grid(n: int, m: int) -> np.ndarray:
    """D_n on the m-node grid, via the same folded transform as S_n."""
    ones = np.ones(n)
    return grid_values(ones, np.zeros(n), m) / math.sqrt(n)


def dirichlet_power_mean(n: int, q: int, cap: int = GRID_CAP) -> float:
    """n * E_X[D_n(X)^q], exact by quadrature on more than q*n nodes.

    ``q! * dirichlet_power_mean(n, q)`` is the exact variance of
    ``sqrt(n) E_X[H_q(S_n)]`` for Gaussian coefficients.
    """
    if q < 1:
        raise ValueError("q must be >= 1")
    if q * n + 1 > cap:
        raise GridTooLarge(f"q*n = {q * n} exceeds grid cap {cap}")
    m = grid_size(q * n, cap)
    d = dirichlet_grid(n, m)
    return n * float(np.mean(d**q))


def _sample_dirichlet_differences(n: int, size: int, rng: np.random.Generator):
    """Draw u in [-pi, pi] with density proportional to min(1, pi/(n|u|)).

    Returns the draws and the ratio |D_n(u)| / min(1, pi/(n|u|)), which is
    at most 1 because |D_n(u)| <= 1/(n|sin(u/2)|) <= pi/(n|u|).
    """
    log_n = math.log(n)
    p_core = 1.0 / (1.0 + log_n)
    core = rng.random(size) < p_core
    v = rng.random(size)
    sign = np.where(rng.random(size) < 0.5, -1.0, 1.0)
    mag = np.where(core, (math.pi / n) * v, math.pi * np.power(float(n), v - 1.0))
    u = sign * mag
    envelope = np.minimum(1.0, math.pi / (n * np.maximum(mag, 1e-300)))
    return u, np.abs(dirichlet(n, u)) / envelope


def triple_dirichlet_estimate(n: int, samples: int, seed: int) -> tuple[float, float]:
    """Monte Carlo estimate of n^2 E|D_n(X1-Y1) D_n(X2-Y2) D_n(X1-X2)|.

    For four independent uniforms the three differences X1-Y1, X2-Y2, X1-X2
    are themselves independent uniforms on the circle, so the estimator
    samples them directly, each from an importance density matched to the
    1/(n|u|) envelope of the kernel. Returns ``(estimate, standard_error)``.
    """
    if samples < 1000:
        raise ValueError("need at least 1000 samples")
    if n < 1:
        raise ValueError("n must be positive")
    rng = rng_stream(seed, n)
    # E_uniform[f] = Z * E_g[f / envelope], Z = (1 + log n)/n
    z = (1.0 + math.log(n)) / n
    w = np.ones(samples)
    for _ in range(3):
        _, r = _sample_dirichlet_differences(n, samples, rng)
        w *= r
    w *= n * n * z**3
    est = float(np.mean(w))
    se = float(np.std(w, ddof=1) / math.sqrt(samples))
    return est, se


def newton_sum(p: TrigPoly, order: int, x):
    """N_{n,order}(x) = n^{-order/2} sum_k (a_k cos kx + b_k sin kx)^order."""
    if order < 1:
        raise ValueError("order must be >= 1")
    x = np.asarray(x, dtype=np.float64)
    kx = np.multiply.outer(x, np.arange(1, p.n + 1))
    u = (np.cos(kx) * p.a + np.sin(kx) * p.b) / math.sqrt(p.n)
    return (u**order).sum(axis=-1)
