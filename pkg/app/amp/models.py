from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from core.models import Model
from core.types import ComplexMatrix, FloatArray


class AmpConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    max_iters: int = Field(default=50, ge=1)
    damping: float = Field(default=0.0, ge=0.0, lt=1.0)
    convergence_tol: float = Field(default=1e-6, gt=0)
    tau_mode: Literal["empirical", "state_evolution"] = "empirical"
    # debug switch, disabling the Onsager correction turns AMP into plain iterative thresholding
    onsager: bool = True


@dataclass(kw_only=True)
class AmpIteration:
    iteration: int
    tau_sq: float
    residual_norm: float


@dataclass(kw_only=True)
class MatchedFilterOutput(Model):
    rows: ComplexMatrix  # (K, M) matched-filter rows S*Z + X
    squared_norms: FloatArray
    tau_sq_final: float
    gains: FloatArray
    estimate: ComplexMatrix  # (K, M) final X
    iterations: int
    converged: bool
    monotone: bool
    trace: list[AmpIteration] = field(default_factory=list)

    def __post_init__(self):
        if self.tau_sq_final <= 0:
            raise self.InvalidError(f"tau_sq_final must be positive, got {self.tau_sq_final}")
        self.squared_norms = np.sum(np.abs(self.rows) ** 2, axis=1)
