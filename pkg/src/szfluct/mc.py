"""Seeded Monte Carlo for the fluctuation statistic

    sqrt(n) * (E_X[phi(S_n(X))] - gamma(phi)).

Replica ``i`` draws its 2n coefficients from the stream ``(master_seed, i)``.
Replicas are computed in fixed blocks of ``BLOCK`` consecutive indices, so
the samples (and hence the summary) do not depend on how many workers run
the blocks.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import ndtr

from .coeffs import CoefficientDistribution, draw, parse_distribution, rng_stream
from .hermite import HermiteSeries, TestFunction, builtin, hermite_eval_sequence
from .trigpoly import GridTooLarge, grid_size, grid_values
from .variance import VariancePrediction, gaussian_finite_n_variance, predict

BLOCK = 256
GRID_DOUBLING_CAP = 1 << 20
DOUBLING_RTOL = 1e-10


@dataclass(frozen=True)
class SimulationConfig:
    n: int
    replicas: int
    dist: CoefficientDistribution
    phi: TestFunction
    grid: int | None = None  # None: automatic
    master_seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if isinstance(self.dist, str):
            object.__setattr__(self, "dist", parse_distribution(self.dist))
        if isinstance(self.phi, str):
            object.__setattr__(self, "phi", builtin(self.phi))
        if self.n < 1:
            raise ValueError("n must be positive")
        if self.replicas < 2:
            raise ValueError("need at least 2 replicas")
        if self.workers < 1:
            raise ValueError("workers must be positive")
        if self.grid is not None and self.grid < 1:
            raise ValueError("grid size must be positive")

    def auto_grid(self) -> int | None:
        """Exact grid for polynomial phi; None means per-replica doubling."""
        if self.grid is not None:
            return self.grid
        if self.phi.polynomial:
            return grid_size(max(self.phi.series.degree(), 1) * self.n)
        return None


@dataclass(frozen=True)
class McSummary:
    sample_mean: float
    sample_variance: float
    variance_se: float
    skewness: float
    excess_kurtosis: float
    ks_statistic: float
    replicas: int
    seconds: float
    grid_m: int = 0
    unconverged: int = 0


def _coefficients(cfg: SimulationConfig, start: int, stop: int) -> tuple[np.ndarray, np.ndarray]:
    a = np.empty((stop - start, cfg.n))
    b = np.empty((stop - start, cfg.n))
    for r, i in enumerate(range(start, stop)):
        rng = rng_stream(cfg.master_seed, i)
        a[r] = draw(cfg.dist, cfg.n, rng)
        b[r] = draw(cfg.dist, cfg.n, rng)
    return a, b


def _high_chaos_mean(s: HermiteSeries, values: np.ndarray) -> np.ndarray:
    """Row means of sum_{k>=3} c_k H_k(values)."""
    d = s.degree()
    H = hermite_eval_sequence(d, values)
    acc = np.zeros(values.shape)
    for k in range(3, d + 1):
        if s[k] != 0.0:
            acc += s[k] * H[k]
    return np.mean(acc, axis=-1)


def _polynomial_statistic(cfg, a, b, m):
    """Chaos-by-chaos evaluation for phi with a finite Hermite series.

    Chaos 0 cancels against gamma(phi), chaos 1 integrates to zero, and
    chaos 2 is c_2 (E_X[S_n^2] - 1) with E_X[S_n^2] from Parseval. Only
    chaoses >= 3 touch the grid. This keeps degenerate cases (Rademacher,
    x^2) exactly zero.
    """
    s = cfg.phi.series
    n = cfg.n
    second = (np.sum(a * a, axis=-1) + np.sum(b * b, axis=-1)) / (2 * n)
    out = s[2] * (second - 1.0)
    if s.degree() >= 3:
        out = out + _high_chaos_mean(s, grid_values(a, b, m))
    return math.sqrt(n) * out


def _doubling_statistic(cfg, a, b, m0):
    """E_X[phi(S_n)] for non-polynomial phi, doubling m per row until stable."""
    phi = cfg.phi
    rows = a.shape[0]
    result = np.full(rows, np.nan)
    final_m = np.zeros(rows, dtype=np.int64)
    m = m0
    prev = np.mean(phi(grid_values(a, b, m)), axis=-1)
    while True:
        m2 = 2 * m
        if m2 > GRID_DOUBLING_CAP:
            break
        cur = np.mean(phi(grid_values(a, b, m2)), axis=-1)
        done = np.isnan(result) & (np.abs(cur - prev) <= DOUBLING_RTOL * np.maximum(np.abs(cur), 1e-300))
        result[done] = cur[done]
        final_m[done] = m2
        if not np.any(np.isnan(result)):
            break
        prev, m = cur, m2
    bad = np.isnan(result)
    result[bad] = prev[bad]
    final_m[bad] = m
    stat = math.sqrt(cfg.n) * (result - phi.gaussian_mean)
    return stat, int(final_m.max()), int(bad.sum())


def _run_block(cfg: SimulationConfig, start: int, stop: int):
    a, b = _coefficients(cfg, start, stop)
    m = cfg.auto_grid()
    if cfg.phi.polynomial:
        return _polynomial_statistic(cfg, a, b, m), m, 0
    if cfg.grid is not None:
        vals = cfg.phi(grid_values(a, b, cfg.grid))
        return math.sqrt(cfg.n) * (np.mean(vals, axis=-1) - cfg.phi.gaussian_mean), cfg.grid, 0
    m0 = 4 * cfg.n + 1
    if m0 > GRID_DOUBLING_CAP:
        raise GridTooLarge(f"initial grid {m0} exceeds cap {GRID_DOUBLING_CAP}")
    return _doubling_statistic(cfg, a, b, m0)


def run_replica(cfg: SimulationConfig, index: int) -> float:
    if not 0 <= index < cfg.replicas:
        raise IndexError(f"replica index {index} outside [0, {cfg.replicas})")
    block = index // BLOCK
    start = block * BLOCK
    stop = min(start + BLOCK, cfg.replicas)
    values, _, _ = _run_block(cfg, start, stop)
    return float(values[index - start])


def _blocks(replicas: int):
    return [(s, min(s + BLOCK, replicas)) for s in range(0, replicas, BLOCK)]


def ks_statistic(samples, sigma: float) -> float:
    """sup_x |F_emp(x) - Phi(x / sigma)|."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    x = np.sort(np.asarray(samples, dtype=np.float64))
    M = x.size
    if M == 0:
        raise ValueError("no samples")
    cdf = ndtr(x / sigma)
    i = np.arange(1, M + 1)
    return float(max(np.max(i / M - cdf), np.max(cdf - (i - 1) / M)))


def _ks_point_mass(x: np.ndarray) -> float:
    """KS distance to the point mass at 0 (the N(0, 0) law)."""
    below = np.count_nonzero(x < 0) / x.size
    at_or_below = np.count_nonzero(x <= 0) / x.size
    return float(max(below, 1.0 - at_or_below))


def summarize(samples, ks_sigma: float | None = None, seconds: float = 0.0, grid_m: int = 0, unconverged: int = 0) -> McSummary:
    """Moments with compensated sums, in sample order."""
    x = np.asarray(samples, dtype=np.float64)
    M = x.size
    if M < 2:
        raise ValueError("need at least 2 samples")
    mean = math.fsum(x) / M
    d = x - mean
    m2 = math.fsum(d * d) / M
    m3 = math.fsum(d**3) / M
    m4 = math.fsum(d**4) / M
    var = m2 * M / (M - 1)
    se_sq = (m4 - var * var * (M - 3) / (M - 1)) / M
    se = math.sqrt(max(se_sq, 0.0))
    skew = m3 / m2**1.5 if m2 > 0 else 0.0
    kurt = m4 / (m2 * m2) - 3.0 if m2 > 0 else 0.0
    if ks_sigma is None:
        ks_sigma = math.sqrt(var)
    ks = ks_statistic(x, ks_sigma) if ks_sigma > 0 else _ks_point_mass(x)
    return McSummary(mean, var, se, skew, kurt, ks, M, seconds, grid_m, unconverged)


def _target_value(target) -> float:
    if isinstance(target, VariancePrediction):
        return target.total
    return float(target)


def run(cfg: SimulationConfig, target_variance=None) -> tuple[np.ndarray, McSummary]:
    """All replicas plus their summary.

    The KS statistic is taken against N(0, target) when a target variance is
    given, otherwise against N(0, sample variance).
    """
    t0 = time.perf_counter()
    blocks = _blocks(cfg.replicas)
    if cfg.workers == 1 or len(blocks) == 1:
        parts = [_run_block(cfg, s, e) for s, e in blocks]
    else:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            parts = list(pool.map(lambda se: _run_block(cfg, *se), blocks))
    samples = np.concatenate([p[0] for p in parts])
    grid_m = max(p[1] for p in parts)
    unconverged = sum(p[2] for p in parts)
    ks_sigma = None
    if target_variance is not None:
        ks_sigma = math.sqrt(max(_target_value(target_variance), 0.0))
    summary = summarize(samples, ks_sigma, time.perf_counter() - t0, grid_m, unconverged)
    return samples, summary


def variance_zscore(summary: McSummary, target) -> float:
    """(sample variance - target) / variance_se; 0 when both sides vanish exactly."""
    t = _target_value(target)
    diff = summary.sample_variance - t
    if summary.variance_se == 0.0:
        if diff == 0.0:
            return 0.0
        raise ZeroDivisionError("variance standard error is zero")
    return diff / summary.variance_se


def variance_target(cfg: SimulationConfig) -> tuple[float, str]:
    """Exact finite-n variance where available (Gaussian, polynomial phi), else the limit."""
    if cfg.dist.kind == "gaussian" and cfg.phi.polynomial:
        try:
            return gaussian_finite_n_variance(cfg.phi, cfg.n), "exact_finite_n"
        except GridTooLarge:
            pass
    return predict(cfg.phi, cfg.dist).total, "asymptotic"


def derived_seed(master_seed: int, n: int) -> int:
    state = np.random.SeedSequence([int(master_seed) & ((1 << 64) - 1), n]).generate_state(2, np.uint32)
    return int(state[0]) | (int(state[1]) << 32)


@dataclass(frozen=True)
class ScanRow:
    n: int
    sample_variance: float
    target: float
    target_kind: str
    zscore: float
    ks: float
    seed: int


def scan(cfg: SimulationConfig, n_list) -> list[ScanRow]:
    """One run per n, each with a seed derived from (master_seed, n)."""
    rows = []
    for n in n_list:
        seed = derived_seed(cfg.master_seed, n)
        c = replace(cfg, n=n, master_seed=seed, grid=None if cfg.grid is None else cfg.grid)
        target, kind = variance_target(c)
        _, summ = run(c, target)
        rows.append(ScanRow(n, summ.sample_variance, target, kind, variance_zscore(summ, target), summ.ks_statistic, seed))
    return rows
