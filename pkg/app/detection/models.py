from dataclasses import dataclass, field
from enum import StrEnum
from typing import Iterator

import numpy as np

from core.models import Model
from core.types import BoolArray, FloatArray


class ProfileSource(StrEnum):
    ANALYTIC = "analytic"
    EMPIRICAL = "empirical"


@dataclass(kw_only=True)
class ErrorPair:
    p_miss: float
    p_false: float
    fallback: bool = False

    def __iter__(self) -> Iterator[float]:
        yield self.p_miss
        yield self.p_false


@dataclass(kw_only=True)
class LlrRecord(Model):
    bs_id: int
    cell_id: int
    user_id: int
    squared_norm: float
    gain: float
    tau_sq: float
    antennas: int
    delta: float = field(init=False)
    theta: float = field(init=False)
    llr: float = field(init=False)

    def __post_init__(self):
        if self.tau_sq <= 0:
            raise self.InvalidError(f"tau_sq must be positive, got {self.tau_sq}")
        g_sq = self.gain**2
        self.theta = g_sq / self.tau_sq
        self.delta = 1 / self.tau_sq - 1 / (g_sq + self.tau_sq)
        self.llr = self.delta * self.squared_norm - self.antennas * float(np.log1p(self.theta))


@dataclass(kw_only=True)
class Aggregate:
    statistic: float
    llr: float


@dataclass(kw_only=True)
class ErrorProfile(Model):
    """Per-user error probabilities of the innermost cell."""

    source: ProfileSource
    p_miss: FloatArray
    p_false: FloatArray
    thresholds: FloatArray
    gains: FloatArray  # own-BS large-scale coefficient, for reporting
    defined: BoolArray = field(default_factory=lambda: np.ones(0, dtype=bool))
    miss_interval: FloatArray | None = None  # (N, 2) Wilson bounds
    false_interval: FloatArray | None = None
    fallback: bool = False

    def __post_init__(self):
        if len(self.defined) == 0:
            self.defined = np.ones(len(self.p_miss), dtype=bool)
        for name in ("p_miss", "p_false"):
            values = np.asarray(getattr(self, name))[self.defined]
            if np.any((values < 0) | (values > 1)):
                raise self.InvalidError(f"{name} must lie in [0, 1]")

    @property
    def p_equal(self) -> FloatArray:
        return (self.p_miss + self.p_false) / 2

    @property
    def cdf(self) -> FloatArray:
        return np.sort(self.p_equal[self.defined])

    @property
    def cell_edge_95(self) -> float:
        values = self.p_equal[self.defined]
        return float(np.percentile(values, 95)) if len(values) else float("nan")


@dataclass(kw_only=True)
class ProfileRow:
    source: str
    cell: int
    user: int
    g: float
    threshold: float
    p_miss: float
    p_false: float
    p_equal: float
    defined: bool


@dataclass(kw_only=True)
class CdfRow:
    source: str
    percentile: float
    p: float


@dataclass(kw_only=True)
class RocRow:
    user: int
    percentile: float
    threshold: float
    p_false: float
    p_miss: float
