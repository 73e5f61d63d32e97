from dataclasses import dataclass

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from core.models import Model
from core.types import FloatArray


class FronthaulQuantization(BaseModel):
    """Experiment-level quantizer choice; ``zeta`` defaults by antenna count."""

    model_config = ConfigDict(frozen=True)

    q_bits: int = Field(ge=0, le=16)
    zeta: float | None = Field(default=None, gt=0, lt=1)

    def coverage(self, antennas: int) -> float:
        if self.zeta is not None:
            return self.zeta
        return 0.95 if antennas == 1 else 0.97


@dataclass(kw_only=True)
class QuantizerSpec(Model):
    """Uniform mid-rise codebook on [0, l_max] per (BS, cell, user) entry."""

    q_bits: int
    zeta: float
    l_max: FloatArray

    def __post_init__(self):
        self.l_max = np.asarray(self.l_max, dtype=float)
        if self.q_bits < 0:
            raise self.InvalidError(f"q_bits must be nonnegative, got {self.q_bits}")
        if not 0 < self.zeta < 1:
            raise self.InvalidError(f"zeta must lie in (0, 1), got {self.zeta}")
        if np.any(self.l_max <= 0):
            raise self.InvalidError("l_max must be positive")

    @property
    def num_levels(self) -> int:
        return 2**self.q_bits

    def levels(self) -> FloatArray:
        """Codebook with shape l_max.shape + (2^Q,)."""
        k = np.arange(1, self.num_levels + 1)
        return (2 * k - 1) * self.l_max[..., None] / 2 ** (self.q_bits + 1)


@dataclass(kw_only=True)
class LmaxRow:
    g_bin: float
    antennas: int
    activity_prob: float
    zeta: float
    l_max: float
