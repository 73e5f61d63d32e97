from dataclasses import dataclass

import numpy as np

from core.models import Model
from core.types import BoolArray, ComplexMatrix, FloatArray


@dataclass(kw_only=True, frozen=True)
class ScenarioInstance(Model):
    """One realization of the uplink.

    Signature columns are ordered cell-major (column ``j*N + n`` belongs to user n
    of cell j). Per-receiver arrays follow the order of ``receivers``.
    """

    activities: BoolArray  # (B, N)
    large_scale: FloatArray  # (B, B, N) receiver x home cell x user
    signatures: ComplexMatrix  # (L, N*B)
    channels: ComplexMatrix  # (R, B, N, M) small-scale fading, CN(0, I)
    noise: ComplexMatrix  # (R, L, M)
    received: ComplexMatrix  # (R, L, M)
    noise_variance: float
    receivers: tuple[int, ...]

    @property
    def num_cells(self) -> int:
        return self.activities.shape[0]

    @property
    def users_per_cell(self) -> int:
        return self.activities.shape[1]

    def columns(self, cells: list[int] | tuple[int, ...]) -> np.ndarray:
        n = self.users_per_cell
        return np.concatenate([np.arange(j * n, (j + 1) * n) for j in cells])

    def signals(self, receiver: int) -> ComplexMatrix:
        """X rows a·g·h̄ seen at BS ``receiver``, shape (N*B, M)."""
        r = self.receivers.index(receiver)
        x = self.activities[:, :, None] * self.large_scale[receiver][:, :, None] * self.channels[r]
        return x.reshape(-1, x.shape[-1])

    def observation(self, receiver: int) -> ComplexMatrix:
        return self.received[self.receivers.index(receiver)]
