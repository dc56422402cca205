"""Synthetic Lexis datasets with known smooth and shock surfaces."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .lattice import MortalityData, build_lattice
from .model import Offset


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for a synthetic dataset.

    The smooth field is ``a * (sin(2 pi t / T) + cos(2 pi j / A)) / 2``. The
    shock field is ``band_amplitude`` on the sloped band
    ``band_ages[0] + slope * t <= age <= band_ages[1] + slope * t`` plus an
    optional constant column at ``spike_year``, zero elsewhere.
    """

    n_years: int = 60
    n_ages: int = 60
    exposure: float = 1e5
    smooth_amplitude: float = 0.5
    band_ages: tuple = (30, 45)
    band_slope: float = 0.1
    band_amplitude: float = 0.5
    spike_year: int | None = None
    spike_amplitude: float = 0.0
    mu0: float = 0.01
    seed: int = 0
    year_origin: int = 1900
    age_origin: int = 0

    def __post_init__(self):
        if not (math.isfinite(self.exposure) and self.exposure > 0):
            raise ValueError("exposure must be positive")
        if not (math.isfinite(self.mu0) and self.mu0 > 0):
            raise ValueError("mu0 must be positive")
        for name in ("smooth_amplitude", "band_slope", "band_amplitude", "spike_amplitude"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        lo, hi = self.band_ages
        top = self.age_origin + self.n_ages - 1
        if not self.age_origin <= lo <= hi <= top:
            raise ValueError(f"band ages {self.band_ages} outside age domain {self.age_origin}..{top}")
        if self.spike_year is not None:
            last = self.year_origin + self.n_years - 1
            if not self.year_origin <= self.spike_year <= last:
                raise ValueError(f"spike year {self.spike_year} outside {self.year_origin}..{last}")

    def lattice(self):
        return build_lattice(self.n_years, self.n_ages, self.year_origin, self.age_origin)

    def band_mask(self) -> np.ndarray:
        t, j = np.meshgrid(np.arange(self.n_years), np.arange(self.n_ages), indexing="ij")
        age = self.age_origin + j
        lo, hi = self.band_ages
        shift = self.band_slope * t
        return (age >= lo + shift) & (age <= hi + shift)

    def smooth_field(self) -> np.ndarray:
        t, j = np.meshgrid(np.arange(self.n_years), np.arange(self.n_ages), indexing="ij")
        return self.smooth_amplitude * (np.sin(2 * np.pi * t / self.n_years)
                                        + np.cos(2 * np.pi * j / self.n_ages)) / 2

    def shock_field(self) -> np.ndarray:
        z = np.where(self.band_mask(), float(self.band_amplitude), 0.0)
        if self.spike_year is not None:
            z[self.spike_year - self.year_origin, :] += self.spike_amplitude
        return z


class SyntheticDataset(NamedTuple):
    x: np.ndarray
    z: np.ndarray
    data: MortalityData
    offset: Offset


def generate_synthetic(spec: SyntheticSpec, rng=None) -> SyntheticDataset:
    """Draw ``y ~ Poisson(mu0 * n * exp(x + z))`` from the recipe.

    ``rng`` defaults to ``numpy.random.default_rng(spec.seed)``.
    """
    if rng is None:
        rng = np.random.default_rng(spec.seed)
    x = spec.smooth_field()
    z = spec.shock_field()
    exposures = np.full(x.shape, float(spec.exposure))
    deaths = rng.poisson(spec.mu0 * exposures * np.exp(x + z)).astype(np.float64)
    label = f"synthetic(seed={spec.seed})"
    return SyntheticDataset(x, z, MortalityData(spec.lattice(), deaths, exposures, label), Offset(spec.mu0))
