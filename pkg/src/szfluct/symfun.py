"""Newton-Girard machinery linking power sums, elementary symmetric sums and
Hermite polynomials.

Everything here is written once and runs on ``fractions.Fraction`` (exact
mode), on Python floats, or elementwise on numpy arrays (one value per
quadrature node). Notation, for summands ``x_1..x_n``:

* ``N_p = sum_i x_i^p`` (power / Newton sums),
* ``e_p = sum_{i_1<...<i_p} x_{i_1}...x_{i_p}`` (elementary symmetric sums),
* ``e_p = M_p + R_p`` where ``M_p`` collects the partitions of ``p`` into
  parts 1 and 2 only and ``R_p`` the partitions using some part >= 3.

The identity this module exists to check is

    H_p(N_1)/p! = sum_{k<=p/2} (-1)^k (1-N_2)^k / (2^k k!) * (e_{p-2k} - R_{p-2k}).
"""

from __future__ import annotations

import functools
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.optimize import minimize_scalar

from .hermite import hermite_eval_sequence
from .trigpoly import EquispacedGrid, TrigPoly, grid_values, newton_sum, summand_grid

PARTITION_LIMIT = 20


def power_sums(x, P: int) -> list:
    """[N_1, ..., N_P] for a sequence of numbers (Fractions stay exact)."""
    x = list(x)
    out = []
    powers = list(x)
    for _ in range(P):
        out.append(sum(powers, _zero_like(x)))
        powers = [p * v for p, v in zip(powers, x)]
    return out


def _zero_like(values):
    if values and isinstance(values[0], (Fraction, int)):
        return Fraction(0)
    return 0.0


def _one_like(N):
    if len(N) and isinstance(N[0], (Fraction, int)):
        return Fraction(1)
    if len(N) and isinstance(N[0], np.ndarray):
        return np.ones_like(N[0])
    return 1.0


def elementary_from_power_sums(N, P: int) -> list:
    """[e_0, ..., e_P] by p e_p = sum_{i=1}^p (-1)^{i-1} e_{p-i} N_i."""
    if P > len(N):
        raise ValueError(f"need {P} power sums, got {len(N)}")
    e = [_one_like(N)]
    for p in range(1, P + 1):
        acc = 0
        for i in range(1, p + 1):
            term = e[p - i] * N[i - 1]
            acc = acc + term if i % 2 else acc - term
        e.append(acc / p)
    return e


@functools.lru_cache(maxsize=None)
def partitions(p: int) -> tuple[tuple[int, ...], ...]:
    """Multiplicity vectors (m_1, ..., m_p) with sum j m_j = p."""
    if p > PARTITION_LIMIT:
        raise ValueError(f"partition enumeration limited to p <= {PARTITION_LIMIT}")
    out = []

    def rec(rest: int, largest: int, mult: list[int]):
        if rest == 0:
            out.append(tuple(mult))
            return
        for j in range(min(rest, largest), 0, -1):
            mult[j - 1] += 1
            rec(rest - j, j, mult)
            mult[j - 1] -= 1

    rec(p, p, [0] * p)
    return tuple(out)


def _partition_term(N, mult: tuple[int, ...]):
    p = sum((j + 1) * m for j, m in enumerate(mult))
    denom = 1
    value = 1
    for j, m in enumerate(mult, start=1):
        if m:
            denom *= math.factorial(m) * j**m
            value = value * (-N[j - 1]) ** m
    if isinstance(value, (Fraction, int)):
        value = Fraction(value, denom)
    else:
        value = value / denom
    return value if p % 2 == 0 else -value


def elementary_partition_sum(N, p: int):
    """e_p as the explicit sum over partitions of p."""
    if p > len(N):
        raise ValueError(f"need {p} power sums, got {len(N)}")
    if p == 0:
        return _one_like(N)
    return sum((_partition_term(N, m) for m in partitions(p)), 0)


def remainder_partition_sum(N, p: int):
    """R_p: the partitions of p with some part >= 3 (zero for p <= 2)."""
    if p <= 2:
        return 0 * _one_like(N)
    return sum((_partition_term(N, m) for m in partitions(p) if any(m[2:])), 0)


def main_part(N, p: int):
    """M_p from the two-index sum over m_1 + 2 m_2 = p."""
    if p == 0:
        return _one_like(N)
    n1 = -N[0]
    n2 = -N[1] if len(N) > 1 else 0
    acc = 0
    for m2 in range(p // 2 + 1):
        m1 = p - 2 * m2
        denom = math.factorial(m1) * math.factorial(m2) * 2**m2
        num = n1**m1 * n2**m2 if m2 else n1**m1
        acc = acc + (Fraction(num, denom) if isinstance(num, (Fraction, int)) else num / denom)
    return acc if p % 2 == 0 else -acc


@dataclass(frozen=True)
class NewtonGirardSplit:
    e: list = field(repr=False)
    M: list = field(repr=False)
    R: list = field(repr=False)


def split_MR(N, P: int, exact: bool | None = None) -> NewtonGirardSplit:
    """e, M and R up to order P.

    R_p is taken as e_p - M_p; in exact mode it is also enumerated directly
    and the two must coincide.
    """
    if P > len(N):
        raise ValueError(f"need {P} power sums, got {len(N)}")
    if exact is None:
        exact = bool(len(N)) and isinstance(N[0], (Fraction, int))
    e = elementary_from_power_sums(N, P)
    M = [main_part(N, p) for p in range(P + 1)]
    R = [e[p] - M[p] if p >= 3 else 0 * e[0] for p in range(P + 1)]
    if exact:
        for p in range(P + 1):
            direct = remainder_partition_sum(N, p)
            if direct != R[p]:
                raise ArithmeticError(f"R_{p}: e-M = {R[p]} but enumeration gives {direct}")
    return NewtonGirardSplit(e, M, R)


def hermite_over_factorial(p: int, x):
    """H_p(x)/p! from the three-term recurrence, exact for Fraction input."""
    if isinstance(x, (Fraction, int)):
        h_prev, h = Fraction(1), Fraction(x)
        if p == 0:
            return h_prev
        for q in range(1, p):
            h_prev, h = h, x * h - q * h_prev
        return h / math.factorial(p)
    return hermite_eval_sequence(p, x)[p] / math.factorial(p)


def _e_minus_r(N, P):
    """[e_j - R_j] for j = 0..P, with e from the recurrence and R enumerated."""
    e = elementary_from_power_sums(N, P)
    return [e[j] - remainder_partition_sum(N, j) for j in range(P + 1)], e


def magic_rhs(N, p: int):
    if p < 1:
        raise ValueError("p must be >= 1")
    if len(N) < max(p, 2):
        raise ValueError(f"need {max(p, 2)} power sums, got {len(N)}")
    diff, _ = _e_minus_r(N, p)
    t = 1 - N[1]
    acc = 0
    for k in range(p // 2 + 1):
        coef = t**k
        denom = 2**k * math.factorial(k)
        term = coef * diff[p - 2 * k]
        term = Fraction(term) / denom if isinstance(term, (Fraction, int)) else term / denom
        acc = acc + term if k % 2 == 0 else acc - term
    return acc


def premagic_rhs(N, p: int):
    """e_p - sum_{k>=1} (1-N_2)^k/(k! 2^k) H_{p-2k}(N_1)/(p-2k)! - R_p."""
    e = elementary_from_power_sums(N, p)
    t = 1 - N[1]
    acc = e[p] - remainder_partition_sum(N, p)
    for k in range(1, p // 2 + 1):
        term = t**k * hermite_over_factorial(p - 2 * k, N[0])
        denom = math.factorial(k) * 2**k
        acc = acc - (Fraction(term) / denom if isinstance(term, (Fraction, int)) else term / denom)
    return acc


@dataclass(frozen=True)
class MagicReport:
    ok: bool
    worst_residual: float
    checks: int
    failures: tuple = ()

    def __bool__(self):
        return self.ok


def verify_magic(x, p_max: int, exact: bool = True) -> MagicReport:
    """Check both forms of the Hermite/Newton-Girard inversion for p = 1..p_max.

    Exact mode converts ``x`` to Fractions and demands equality; float mode
    allows ``1e-9 * (1 + |H_p(N_1)/p!|)``.
    """
    if p_max < 1:
        raise ValueError("p_max must be >= 1")
    if exact:
        x = [Fraction(v) for v in x]
    else:
        x = [float(v) for v in x]
    N = power_sums(x, max(p_max, 2))
    worst = 0.0
    failures = []
    checks = 0
    for p in range(1, p_max + 1):
        lhs = hermite_over_factorial(p, N[0])
        for name, rhs in (("magic", magic_rhs(N, p)), ("premagic", premagic_rhs(N, p))):
            checks += 1
            res = abs(lhs - rhs)
            worst = max(worst, float(res))
            bad = res != 0 if exact else res > 1e-9 * (1 + abs(lhs))
            if bad:
                failures.append((name, p, float(res)))
    return MagicReport(not failures, worst, checks, tuple(failures))


def random_rational_vector(n: int, rng: random.Random, height: int = 9) -> list[Fraction]:
    return [Fraction(rng.randint(-height, height), rng.randint(1, height)) for _ in range(n)]


def verify_identities_suite(n_max: int = 6, p_max: int = 8, trials: int = 100, seed: int = 1) -> MagicReport:
    """Exact magic/premagic checks on ``trials`` random rational vectors per length."""
    rng = random.Random(seed)
    checks = 0
    failures = []
    for n in range(1, n_max + 1):
        for _ in range(trials):
            x = random_rational_vector(n, rng)
            rep = verify_magic(x, p_max, exact=True)
            checks += rep.checks
            failures.extend((tuple(x),) + f for f in rep.failures)
    return MagicReport(not failures, 0.0 if not failures else max(f[-1] for f in failures), checks, tuple(failures))


# -- trigonometric-polynomial diagnostics --------------------------------------


def _elementary_direct(u: np.ndarray, P: int) -> list[np.ndarray]:
    """e_0..e_P of the columns of u (one row per node), by the product DP."""
    e = [np.ones(u.shape[0])] + [np.zeros(u.shape[0]) for _ in range(P)]
    for k in range(u.shape[1]):
        col = u[:, k]
        for j in range(P, 0, -1):
            e[j] = e[j] + col * e[j - 1]
    return e


@dataclass(frozen=True)
class RemainderDecomposition:
    hermite_mean: float  # E_X[H_p(S_n)] / p!
    elementary_mean: float  # E_X[e_{n,p}]
    remainder: float  # script R_{n,p}

    @property
    def residual(self) -> float:
        return self.hermite_mean - self.elementary_mean - self.remainder


def remainder_decomposition(p: TrigPoly, p_order: int, grid_m: int) -> RemainderDecomposition:
    """Both sides of E_X[H_p(S_n)]/p! = E_X[e_{n,p}] + script R_{n,p}.

    script R is assembled from its definition: e by the product DP over the
    summands, R by partition enumeration over the Newton sums.
    """
    if p_order < 3:
        raise ValueError("the remainder is only defined for p >= 3")
    if grid_m <= p_order * p.n:
        raise ValueError(f"grid_m={grid_m} must exceed p*n={p_order * p.n}")
    u = summand_grid(p, grid_m)
    N = [np.sum(u**j, axis=1) for j in range(1, p_order + 1)]
    e = _elementary_direct(u, p_order)
    R = [remainder_partition_sum(N, j) for j in range(p_order + 1)]
    t = 1.0 - N[1]
    integrand = -R[p_order]
    for k in range(1, p_order // 2 + 1):
        integrand = integrand + (-1) ** k * t**k / (2**k * math.factorial(k)) * (e[p_order - 2 * k] - R[p_order - 2 * k])
    lhs = hermite_eval_sequence(p_order, N[0])[p_order] / math.factorial(p_order)
    return RemainderDecomposition(float(np.mean(lhs)), float(np.mean(e[p_order])), float(np.mean(integrand)))


def script_remainder(p: TrigPoly, p_order: int, grid_m: int) -> float:
    return remainder_decomposition(p, p_order, grid_m).remainder


def second_newton_grid(p: TrigPoly, m: int) -> np.ndarray:
    """N_{n,2} on the grid via its degree-2n Fourier expansion."""
    n = p.n
    c = np.zeros(2 * n)
    s = np.zeros(2 * n)
    c[1::2] = (p.a**2 - p.b**2) / 2
    s[1::2] = p.a * p.b
    # grid_values divides by sqrt(len); undo it and apply 1/n
    osc = grid_values(c, s, m) * math.sqrt(2 * n) / n
    return osc + (math.fsum(p.a**2) + math.fsum(p.b**2)) / (2 * n)


def sup_second_newton_deviation(p: TrigPoly, grid_m: int) -> float:
    """max_x |1 - N_{n,2}(x)|: grid max, refined by a bounded scan around the argmax."""
    if grid_m < 4 * p.n + 1:
        raise ValueError(f"grid_m must be >= 4n+1 = {4 * p.n + 1}")
    dev = np.abs(1.0 - second_newton_grid(p, grid_m))
    j = int(np.argmax(dev))
    best = float(dev[j])
    h = EquispacedGrid(grid_m).node(1)
    x0 = EquispacedGrid(grid_m).node(j)

    def neg(x):
        return -abs(1.0 - float(newton_sum(p, 2, x)))

    res = minimize_scalar(neg, bounds=(x0 - h, x0 + h), method="bounded", options={"xatol": 1e-12})
    return max(best, -float(res.fun))

