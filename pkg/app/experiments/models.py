from dataclasses import dataclass, field
from typing import Literal, Self

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from amp.models import AmpConfig
from core.types import FloatArray
from detection.empirical import TrialCounts
from detection.models import ErrorProfile
from geometry.models import CellLayout, NetworkConfig, UserPlacement
from quantize.models import FronthaulQuantization, QuantizerSpec
from state_evolution.models import Architecture, StateEvolutionTrace

OUTPUTS = ("profile", "cdf", "se_trace", "tradeoff", "layout")


class ExperimentSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    network: NetworkConfig = Field(default_factory=NetworkConfig)
    amp: AmpConfig = Field(default_factory=AmpConfig)
    architecture: Architecture = Architecture.TIN
    bbn: int = Field(default=1, ge=1)
    quantizer: FronthaulQuantization | None = None
    trials: int = Field(default=200, ge=1)
    seed: int = 2024
    outputs: tuple[str, ...] = OUTPUTS
    # rings of neighbouring cells each BS recovers in the cooperative mode
    detection_tiers: int = Field(default=1, ge=0)
    tau_source: Literal["analytic", "empirical"] = "analytic"
    engine: Literal["amp", "decoupled"] = "amp"
    trials_per_batch: int = Field(default=8, ge=1)

    @model_validator(mode="after")
    def _check(self) -> Self:
        if self.architecture == Architecture.PARTIAL:
            raise ValueError("experiments run the tin or coop architecture; partial recovery is a sweep")
        if self.bbn > self.network.num_cells:
            raise ValueError(f"bbn={self.bbn} exceeds the {self.network.num_cells} cells")
        if self.architecture == Architecture.TIN and self.bbn != 1:
            raise ValueError("the non-cooperative architecture serves every user from one BS (bbn=1)")
        if self.quantizer is not None and self.architecture == Architecture.TIN:
            raise ValueError("fronthaul quantization applies to the cooperative architecture only")
        unknown = set(self.outputs) - set(OUTPUTS)
        if unknown:
            raise ValueError(f"unknown outputs {sorted(unknown)}")
        return self


@dataclass(kw_only=True)
class Analysis:
    """Everything fixed across trials: geometry, SE noise level and thresholds."""

    spec: ExperimentSpec
    layout: CellLayout
    placement: UserPlacement
    gains: FloatArray  # (B, N) g from every BS to the centre-cell users
    serving: np.ndarray  # (N, bbn) serving BS indices, nearest first
    trace: StateEvolutionTrace
    thresholds: FloatArray  # equal-error thresholds on Σ Δ_j‖x̃_j‖²
    profile: ErrorProfile
    quantizer: QuantizerSpec | None = None

    @property
    def tau_sq(self) -> float:
        return self.trace.tau_sq_inf

    def serving_gains(self) -> FloatArray:
        return np.take_along_axis(self.gains.T, self.serving, axis=1)

    def llr_thresholds(self) -> FloatArray:
        theta = self.serving_gains() ** 2 / self.tau_sq
        return self.thresholds - self.spec.network.antennas * np.sum(np.log1p(theta), axis=1)


@dataclass(kw_only=True)
class BatchResult:
    counts: TrialCounts
    centre_tau_sq: list[float] = field(default_factory=list)


@dataclass(kw_only=True)
class ExperimentResult:
    analysis: Analysis
    empirical: ErrorProfile | None = None
    centre_tau_sq: list[float] = field(default_factory=list)

    @property
    def spec(self) -> ExperimentSpec:
        return self.analysis.spec


@dataclass(kw_only=True)
class SweepRow:
    parameter: str
    value: float
    architecture: str
    tau_sq_inf: float
    cell_edge_analytic: float
    cell_edge_empirical: float
    fronthaul_bits: int


@dataclass(kw_only=True)
class ValidationRow:
    check: str
    value: float
    limit: float
    passed: bool
