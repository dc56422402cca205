"""Mortality surfaces, Lexis profiles and the precision ratio."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionError
from .lattice import MortalityData
from .model import Offset

HETEROGENEITY = "heterogeneity"
MODERATE = "moderate"
SMOOTH_DOMINATED = "smooth-dominated"


def empirical_surface(data: MortalityData) -> np.ndarray:
    """``log(y / n)`` where both are positive, NaN elsewhere."""
    y, n = data.deaths, data.exposures
    ok = (y > 0) & (n > 0)
    out = np.full(y.shape, np.nan)
    out[ok] = np.log(y[ok] / n[ok])
    return out


@dataclass(frozen=True)
class SurfaceSet:
    """Log-scale surfaces on one lattice.

    ``s_m`` empirical rates (NaN where undefined), ``s_1 = log(mu0) + x_hat``
    smooth part, ``s_2 = z_hat`` shocks and ``s_b = s_1 + s_2``.
    """

    lattice: object
    s_m: np.ndarray
    s_b: np.ndarray
    s_1: np.ndarray
    s_2: np.ndarray
    offset: Offset

    @property
    def intensity(self) -> np.ndarray:
        return np.exp(self.s_b)

    def as_dict(self):
        return {"s_m": self.s_m, "s_b": self.s_b, "s1": self.s_1, "s2": self.s_2}


def decompose(estimates, data: MortalityData) -> SurfaceSet:
    """Build the four surfaces from posterior means."""
    x_hat = np.asarray(estimates.x_hat, dtype=np.float64)
    z_hat = np.asarray(estimates.z_hat, dtype=np.float64)
    if x_hat.shape != data.shape or z_hat.shape != data.shape:
        raise DimensionError("estimate shapes do not match the data lattice")
    s_1 = estimates.offset.log_mu0 + x_hat
    s_2 = z_hat.copy()
    s_b = s_1 + s_2
    return SurfaceSet(data.lattice, empirical_surface(data), s_b, s_1, s_2, estimates.offset)


@dataclass(frozen=True)
class Profile:
    """Four aligned 1-D slices of a surface set plus their calendar axis.

    For ``kind="cohort"`` the axis holds calendar years along the diagonal and
    ``ages`` the matching ages.
    """

    kind: str
    index: int
    axis: np.ndarray
    years: np.ndarray
    ages: np.ndarray
    total: np.ndarray
    primary: np.ndarray
    secondary: np.ndarray
    empirical: np.ndarray

    def __len__(self):
        return len(self.axis)


def cohort_knots(lattice, birth_year):
    """Knots ``(t, j)`` with ``year - age == birth_year``, ordered by time."""
    c = birth_year - lattice.year_origin + lattice.age_origin  # t - j on the diagonal
    t = np.arange(max(0, c), min(lattice.n_years, lattice.n_ages + c))
    return t, t - c


def extract_profile(surfaces: SurfaceSet, kind: str, index: int) -> Profile:
    """Slice the surfaces along a cohort diagonal, a calendar year or an age.

    ``index`` is a calendar value: birth year for ``"cohort"``, year for
    ``"year"`` and age for ``"age"`` (age 0 gives the infant profile).
    """
    lat = surfaces.lattice
    if kind == "year":
        t = index - lat.year_origin
        if not 0 <= t < lat.n_years:
            raise IndexError(f"year {index} outside {lat.year_origin}..{lat.year_origin + lat.n_years - 1}")
        tt, jj = np.full(lat.n_ages, t), np.arange(lat.n_ages)
        axis = lat.ages
    elif kind == "age":
        j = index - lat.age_origin
        if not 0 <= j < lat.n_ages:
            raise IndexError(f"age {index} outside {lat.age_origin}..{lat.age_origin + lat.n_ages - 1}")
        tt, jj = np.arange(lat.n_years), np.full(lat.n_years, j)
        axis = lat.years
    elif kind == "cohort":
        first = lat.year_origin - (lat.age_origin + lat.n_ages - 1)
        last = lat.year_origin + lat.n_years - 1 - lat.age_origin
        if not first <= index <= last:
            raise IndexError(f"cohort {index} outside {first}..{last}")
        tt, jj = cohort_knots(lat, index)
        if len(tt) < 2:
            raise ValueError(f"cohort {index} meets the lattice in fewer than 2 knots")
        axis = lat.year_origin + tt
    else:
        raise ValueError(f"kind must be 'cohort', 'year' or 'age', got {kind!r}")
    return Profile(
        kind, int(index), np.asarray(axis), lat.year_origin + tt, lat.age_origin + jj,
        surfaces.s_b[tt, jj], surfaces.s_1[tt, jj], surfaces.s_2[tt, jj], surfaces.s_m[tt, jj],
    )


@dataclass(frozen=True)
class ClusterThresholds:
    """Upper bounds on the precision ratio for the two low-ratio clusters."""

    heterogeneity: float = 10.0
    moderate: float = 50.0

    def __post_init__(self):
        if not 0 < self.heterogeneity <= self.moderate:
            raise ValueError("need 0 < heterogeneity <= moderate")

    def classify(self, rhos) -> str:
        """Cluster of a population described by one or more ratios (e.g. both sexes)."""
        rhos = np.atleast_1d(np.asarray(rhos, dtype=np.float64))
        if rhos.size == 0:
            raise ValueError("no ratios given")
        if np.all(rhos < self.heterogeneity):
            return HETEROGENEITY
        if np.all(rhos < self.moderate):
            return MODERATE
        return SMOOTH_DOMINATED


@dataclass(frozen=True)
class PrecisionSummary:
    gamma_x_hat: float
    gamma_z_hat: float
    rho: float
    cluster: str


def precision_ratio(gamma_x_hat, gamma_z_hat, thresholds=ClusterThresholds()) -> PrecisionSummary:
    """``rho = gamma_z_hat / gamma_x_hat`` with its cluster label.

    Small ratios mean the shock surface carries substantial non-smooth
    variation.
    """
    gx, gz = float(gamma_x_hat), float(gamma_z_hat)
    if not (gx > 0 and gz > 0):
        raise ValueError("precision estimates must be positive")
    rho = gz / gx
    return PrecisionSummary(gx, gz, rho, thresholds.classify(rho))


def conditional_sd(gamma_x, gamma_z, degree) -> float:
    """Prior conditional sd of the log intensity at a knot with ``degree`` neighbours."""
    if degree < 1:
        raise ValueError("degree must be positive")
    if not (gamma_x > 0 and gamma_z > 0):
        raise ValueError("precisions must be positive")
    return math.sqrt(1.0 / (gamma_x * degree) + 1.0 / gamma_z)
