from dataclasses import dataclass, field
from enum import StrEnum

from core.models import Model


class Architecture(StrEnum):
    TIN = "tin"  # non-cooperative massive MIMO, interference treated as noise
    COOP = "coop"  # cooperative, interference recovered and LLRs aggregated
    PARTIAL = "partial"  # recovery limited to a detection radius


@dataclass(kw_only=True)
class StateEvolutionTrace(Model):
    architecture: Architecture
    tau_sq_seq: list[float]
    tau_sq_inf: float
    iterations: int
    converged: bool
    detection_radius: float
    noise_floor: float = field(repr=False)

    def __post_init__(self):
        if not self.tau_sq_seq or min(self.tau_sq_seq) <= 0:
            raise self.InvalidError("tau_sq sequence must be non-empty and positive")

    @property
    def monotone(self) -> bool:
        return all(b <= a for a, b in zip(self.tau_sq_seq, self.tau_sq_seq[1:]))


@dataclass(kw_only=True)
class TraceRow:
    t: int
    tau_sq: float
