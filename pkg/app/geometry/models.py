import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal, Self

import numpy as np
from pydantic import Field, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict
from scipy import integrate

from core.errors import ConfigurationError
from core.models import Model
from core.types import FloatArray

logger = logging.getLogger(__name__)


FULL_SCALE = {"num_cells": 19, "users_per_cell": 2000, "seq_len": 400, "antennas": 8}


class NetworkConfig(BaseSettings):
    """Deployment parameters: geometry, population, path loss and link budget.

    Defaults are the desk-scale deployment; ``full_scale`` gives the 19-cell one.
    Loadable from a key/value file with ``NET_``-prefixed keys.
    """

    num_cells: int = Field(default=7, ge=1)
    users_per_cell: int = Field(default=200, ge=1)
    activity_prob: float = Field(default=0.05, ge=0.0, le=1.0)
    seq_len: int = Field(default=40, ge=1)
    antennas: int = Field(default=8, ge=1)
    bs_spacing: float = Field(default=2000.0, gt=0)
    pathloss_alpha: float = 15.3
    pathloss_beta: float = Field(default=37.6, gt=0)
    tx_power_dbm: float = 23.0
    noise_psd_dbm_per_hz: float = -169.0
    bandwidth_hz: float = Field(default=10e6, gt=0)
    min_distance: float = Field(default=1.0, gt=0)
    # users drop uniformly over the hexagonal cell or over the disc of radius R_cell around the BS
    user_region: Literal["hexagon", "disc"] = "hexagon"

    model_config = SettingsConfigDict(env_prefix="NET_", extra="ignore", frozen=True)

    @model_validator(mode="after")
    def _check_regime(self) -> Self:
        if self.seq_len > self.users_per_cell * self.num_cells:
            logger.warning(
                "seq_len=%d exceeds N*B=%d, outside the underdetermined regime",
                self.seq_len,
                self.users_per_cell * self.num_cells,
            )
        return self

    @classmethod
    def from_file(cls, path: str | Path) -> "NetworkConfig":
        path = Path(path)
        if not path.is_file():
            raise ConfigurationError(f"Network config file '{path}' does not exist")
        return cls(_env_file=path)  # type: ignore[call-arg]

    @classmethod
    def full_scale(cls, **overrides) -> "NetworkConfig":
        return cls(**(FULL_SCALE | overrides))

    @property
    def cell_radius(self) -> float:
        # circumradius of the hexagonal cell
        return self.bs_spacing / math.sqrt(3)

    @property
    def network_radius(self) -> float:
        # disc holding B cell discs
        return math.sqrt(self.num_cells) * self.cell_radius

    @property
    def noise_variance(self) -> float:
        noise_mw = 10 ** ((self.noise_psd_dbm_per_hz + 10 * math.log10(self.bandwidth_hz)) / 10)
        tx_mw = 10 ** (self.tx_power_dbm / 10)
        return noise_mw / (tx_mw * self.seq_len)

    @property
    def noise_dbm(self) -> float:
        return self.noise_psd_dbm_per_hz + 10 * math.log10(self.bandwidth_hz)

    def pathloss_db(self, distance: float | FloatArray) -> float | FloatArray:
        return self.pathloss_alpha + self.pathloss_beta * np.log10(np.maximum(distance, self.min_distance))

    def gain(self, distance: float | FloatArray) -> float | FloatArray:
        return 10 ** (-self.pathloss_db(distance) / 20)


@dataclass(kw_only=True)
class CellLayout(Model):
    spacing: float
    positions: FloatArray  # (B, 2) BS coordinates, innermost cell first
    axial: np.ndarray  # (B, 2) integer hex coordinates

    @property
    def num_cells(self) -> int:
        return len(self.positions)

    @property
    def cell_radius(self) -> float:
        return self.spacing / math.sqrt(3)

    def hex_distance(self, a: int, b: int) -> int:
        dq, dr = self.axial[a] - self.axial[b]
        return int(max(abs(dq), abs(dr), abs(dq + dr)))

    def cells_within(self, cell: int, tiers: int) -> list[int]:
        return [other for other in range(self.num_cells) if self.hex_distance(cell, other) <= tiers]

    def contains(self, cell: int, points: FloatArray) -> np.ndarray:
        """Whether points (..., 2) lie inside hexagon ``cell`` (boundary included)."""
        rel = np.asarray(points) - self.positions[cell]
        inside = np.ones(rel.shape[:-1], dtype=bool)
        for angle in (np.pi / 6, np.pi / 2, 5 * np.pi / 6):
            proj = rel[..., 0] * np.cos(angle) + rel[..., 1] * np.sin(angle)
            inside &= np.abs(proj) <= self.spacing / 2 * (1 + 1e-12)
        return inside


@dataclass(kw_only=True)
class UserPlacement(Model):
    positions: FloatArray  # (B, N, 2), users of home cell b in row b

    @property
    def users_per_cell(self) -> int:
        return self.positions.shape[1]

    def distances(self, layout: CellLayout) -> FloatArray:
        """(receiver BS, home cell, user) distances."""
        diff = self.positions[None, :, :, :] - layout.positions[:, None, None, :]
        return np.hypot(diff[..., 0], diff[..., 1])


@dataclass(kw_only=True)
class FadingDist(Model):
    """Density a·g^-γ/(R_max²-R_min²) of the large-scale coefficient on [ε_min, ε_max]."""

    a: float
    gamma: float
    eps_min: float
    eps_max: float
    r_min: float
    r_max: float
    alpha: float = field(repr=False)
    beta: float = field(repr=False)

    @property
    def area(self) -> float:
        return self.r_max**2 - self.r_min**2

    def distance(self, g: float | FloatArray) -> float | FloatArray:
        return 10 ** ((-20 * np.log10(g) - self.alpha) / self.beta)

    def pdf(self, g: float | FloatArray) -> float | FloatArray:
        g = np.asarray(g, dtype=float)
        inside = (g >= self.eps_min) & (g <= self.eps_max)
        with np.errstate(divide="ignore"):
            return np.where(inside, self.a * g ** (-self.gamma) / self.area, 0.0)

    def cdf(self, g: float | FloatArray) -> float | FloatArray:
        g = np.asarray(g, dtype=float)
        with np.errstate(divide="ignore"):
            d = np.where(g > 0, self.distance(np.maximum(g, 1e-300)), np.inf)
        return np.clip((self.r_max**2 - d**2) / self.area, 0.0, 1.0)

    def total_mass(self) -> float:
        # substituting d for g keeps the quadrature well scaled
        def integrand(d: float) -> float:
            g = 10 ** (-(self.alpha + self.beta * math.log10(d)) / 20)
            jac = (self.beta / 20) * g / d
            return float(self.pdf(g)) * jac if d > 0 else 0.0

        value, _ = integrate.quad(integrand, self.r_min, self.r_max, epsabs=0, epsrel=1e-10, limit=200)
        return value

    def sample(self, size: int, rng: np.random.Generator, floor: float = 0.0) -> FloatArray:
        d = np.sqrt(self.r_min**2 + rng.random(size) * self.area)
        d = np.maximum(d, floor)
        return 10 ** (-(self.alpha + self.beta * np.log10(d)) / 20)
