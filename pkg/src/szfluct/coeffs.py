"""Coefficient laws for the random coefficients a_k, b_k.

Every law here is symmetric with unit variance. Randomness comes from
counter-based Philox streams keyed by ``(master_seed, stream index)`` so
that any replica can be regenerated on its own, in any process.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

KINDS = ("gaussian", "rademacher", "uniform_pm_sqrt3", "discrete_symmetric")

_SQRT3 = math.sqrt(3.0)
_MASK64 = (1 << 64) - 1


def rng_stream(master_seed: int, *path: int) -> np.random.Generator:
    """Independent generator for the stream ``(master_seed, *path)``.

    The key is hashed through ``SeedSequence`` into a Philox key; no global
    state is touched, so streams may be built concurrently.
    """
    words = [int(master_seed) & _MASK64]
    words.extend(int(p) & _MASK64 for p in path)
    ss = np.random.SeedSequence(words)
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class CoefficientDistribution:
    kind: str
    points: tuple[float, ...] = field(default=(), repr=False)
    probs: tuple[float, ...] = field(default=(), repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown coefficient law {self.kind!r}")
        if self.kind == "discrete_symmetric":
            _validate_discrete(self.points, self.probs)

    @classmethod
    def gaussian(cls) -> CoefficientDistribution:
        return cls("gaussian")

    @classmethod
    def rademacher(cls) -> CoefficientDistribution:
        return cls("rademacher")

    @classmethod
    def uniform(cls) -> CoefficientDistribution:
        return cls("uniform_pm_sqrt3")

    @classmethod
    def discrete(cls, pairs) -> CoefficientDistribution:
        """Symmetric discrete law from ``(point, probability)`` pairs.

        Each pair is mirrored: mass ``p`` is split evenly between ``+v`` and
        ``-v``. Probabilities are normalised, then the variance must be 1.
        """
        pairs = [(float(v), float(p)) for v, p in pairs]
        if not pairs:
            raise ValueError("discrete law needs at least one point")
        for v, p in pairs:
            if not (math.isfinite(v) and math.isfinite(p)) or p < 0:
                raise ValueError(f"invalid support point ({v}, {p})")
        total = math.fsum(p for _, p in pairs)
        if total <= 0:
            raise ValueError("probabilities sum to zero")
        mass: dict[float, float] = {}
        for v, p in pairs:
            p = p / total
            if p == 0:
                continue
            if v == 0:
                mass[0.0] = mass.get(0.0, 0.0) + p
            else:
                mass[abs(v)] = mass.get(abs(v), 0.0) + p / 2
                mass[-abs(v)] = mass.get(-abs(v), 0.0) + p / 2
        pts = tuple(sorted(mass))
        return cls("discrete_symmetric", pts, tuple(mass[v] for v in pts))

    @property
    def m4(self) -> float:
        return moment(self, 4)

    @property
    def m6(self) -> float:
        return moment(self, 6)

    @property
    def label(self) -> str:
        if self.kind == "discrete_symmetric":
            # mass of {+v, -v} together, the form parse_distribution reads
            body = ",".join(f"{v!r}:{(p if v == 0 else 2 * p)!r}" for v, p in zip(self.points, self.probs) if v >= 0)
            return f"discrete:{body}"
        return {"uniform_pm_sqrt3": "uniform"}.get(self.kind, self.kind)


def _validate_discrete(points, probs):
    if len(points) != len(probs) or not points:
        raise ValueError("discrete law needs matching, nonempty points and probs")
    table = dict(zip(points, probs))
    for v, p in table.items():
        if abs(table.get(-v, -1.0) - p) > 1e-12:
            raise ValueError("discrete support is not mirror-closed")
    if abs(math.fsum(probs) - 1.0) > 1e-12:
        raise ValueError("discrete probabilities do not sum to 1")
    m2 = math.fsum(p * v * v for v, p in zip(points, probs))
    if abs(m2 - 1.0) > 1e-12:
        raise ValueError(f"discrete law has variance {m2!r}, expected 1")


def parse_distribution(text: str) -> CoefficientDistribution:
    """Parse ``gaussian``, ``rademacher``, ``uniform`` or ``discrete:v1:p1,v2:p2,...``."""
    text = text.strip()
    if text in ("gaussian", "normal"):
        return CoefficientDistribution.gaussian()
    if text == "rademacher":
        return CoefficientDistribution.rademacher()
    if text in ("uniform", "uniform_pm_sqrt3"):
        return CoefficientDistribution.uniform()
    if text.startswith("discrete:"):
        body = text[len("discrete:"):]
        pairs = []
        for item in body.split(","):
            try:
                v, p = item.split(":")
                pairs.append((float(v), float(p)))
            except ValueError:
                raise ValueError(f"bad discrete support item {item!r}") from None
        return CoefficientDistribution.discrete(pairs)
    raise ValueError(f"unknown distribution spec {text!r}")


def moment(dist: CoefficientDistribution, order: int) -> float:
    """Exact moment of order 2, 4 or 6."""
    if order not in (2, 4, 6):
        raise ValueError(f"unsupported moment order {order}")
    if dist.kind == "gaussian":
        return {2: 1.0, 4: 3.0, 6: 15.0}[order]
    if dist.kind == "rademacher":
        return 1.0
    if dist.kind == "uniform_pm_sqrt3":
        # (1/2c) * int_{-c}^{c} x^k dx = c^k / (k+1), c = sqrt(3)
        return 3.0 ** (order // 2) / (order + 1)
    return math.fsum(p * v**order for v, p in zip(dist.points, dist.probs))


def excess_kurtosis(dist: CoefficientDistribution) -> float:
    return moment(dist, 4) - 3.0


def draw(dist: CoefficientDistribution, count: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``count`` i.i.d. values from an existing generator."""
    if dist.kind == "gaussian":
        return rng.standard_normal(count)
    if dist.kind == "rademacher":
        return 2.0 * rng.integers(0, 2, size=count).astype(np.float64) - 1.0
    if dist.kind == "uniform_pm_sqrt3":
        return rng.uniform(-_SQRT3, _SQRT3, size=count)
    idx = rng.choice(len(dist.points), size=count, p=np.asarray(dist.probs))
    return np.asarray(dist.points)[idx]


def sample(dist: CoefficientDistribution, count: int, stream_seed: int) -> np.ndarray:
    if count < 1:
        raise ValueError("count must be positive")
    return draw(dist, count, rng_stream(stream_seed))
