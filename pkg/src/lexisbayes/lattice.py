"""Lexis lattice, its king-move neighbourhood graph, and mortality data on it.

Knots are indexed ``(t, j)`` with ``t`` the zero-based time index (row) and
``j`` the zero-based age index (column). Calendar years and ages only appear
through ``year_origin`` / ``age_origin``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .exceptions import DimensionError, KnotOutOfBoundsError

# Row-major order over the 3x3 stencil minus the centre.
NEIGHBOR_OFFSETS = (
    (-1, -1), (-1, 0), (-1, 1),
    (0, -1), (0, 1),
    (1, -1), (1, 0), (1, 1),
)

# One direction of each undirected pair type: time, age, cohort diagonal, anti-diagonal.
_HALF_OFFSETS = ((1, 0), (0, 1), (1, 1), (1, -1))


class Knot(NamedTuple):
    t: int
    j: int


@dataclass(frozen=True)
class LexisLattice:
    """A ``n_years x n_ages`` grid of knots.

    Use :func:`build_lattice` to construct one with the usual extent checks.
    """

    n_years: int
    n_ages: int
    year_origin: int = 0
    age_origin: int = 0

    def __post_init__(self):
        if self.n_years < 1 or self.n_ages < 1:
            raise DimensionError(f"lattice extents must be positive, got {self.n_years}x{self.n_ages}")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_years, self.n_ages)

    @property
    def n_knots(self) -> int:
        return self.n_years * self.n_ages

    @property
    def years(self) -> np.ndarray:
        return self.year_origin + np.arange(self.n_years)

    @property
    def ages(self) -> np.ndarray:
        return self.age_origin + np.arange(self.n_ages)

    def contains(self, knot) -> bool:
        t, j = knot
        return 0 <= t < self.n_years and 0 <= j < self.n_ages

    def cohort(self, knot) -> int:
        """Birth year of the cohort passing through ``knot``."""
        t, j = knot
        return self.year_origin + t - (self.age_origin + j)

    def knots(self):
        """Iterate over all knots in row-major order."""
        for t in range(self.n_years):
            for j in range(self.n_ages):
                yield Knot(t, j)


def build_lattice(n_years, n_ages, year_origin=0, age_origin=0, *, min_extent=2) -> LexisLattice:
    """Create a lattice, rejecting extents below ``min_extent``.

    The default of 2 guarantees every knot has a cohort diagonal. Lower values
    are only meant for small analytic test problems.
    """
    n_years, n_ages = int(n_years), int(n_ages)
    if n_years < min_extent or n_ages < min_extent:
        raise DimensionError(
            f"lattice {n_years}x{n_ages} is too small; both extents must be >= {min_extent}"
        )
    return LexisLattice(n_years, n_ages, int(year_origin), int(age_origin))


def neighbors(lattice: LexisLattice, knot) -> list[Knot]:
    """In-bounds king-move neighbours of ``knot`` in row-major order."""
    if not lattice.contains(knot):
        raise KnotOutOfBoundsError(f"knot {tuple(knot)} outside {lattice.n_years}x{lattice.n_ages} lattice")
    t, j = knot
    out = []
    for dt, dj in NEIGHBOR_OFFSETS:
        s, i = t + dt, j + dj
        if 0 <= s < lattice.n_years and 0 <= i < lattice.n_ages:
            out.append(Knot(s, i))
    return out


def degree_matrix(lattice: LexisLattice) -> np.ndarray:
    """Number of neighbours of every knot as a ``T x A`` integer array."""
    T, A = lattice.shape
    deg = np.zeros((T, A), dtype=np.int64)
    for dt, dj in NEIGHBOR_OFFSETS:
        deg[max(0, -dt):T - max(0, dt), max(0, -dj):A - max(0, dj)] += 1
    return deg


def edge_array(lattice: LexisLattice) -> np.ndarray:
    """Undirected neighbour pairs as an ``(E, 4)`` array of ``(t, j, s, i)``, each pair once."""
    T, A = lattice.shape
    tt, jj = np.meshgrid(np.arange(T), np.arange(A), indexing="ij")
    blocks = []
    for dt, dj in _HALF_OFFSETS:
        s, i = tt + dt, jj + dj
        ok = (s >= 0) & (s < T) & (i >= 0) & (i < A)
        blocks.append(np.stack([tt[ok], jj[ok], s[ok], i[ok]], axis=1))
    return np.concatenate(blocks, axis=0)


def n_edges(lattice: LexisLattice) -> int:
    T, A = lattice.shape
    return T * (A - 1) + A * (T - 1) + 2 * (T - 1) * (A - 1)


def color_classes(lattice: LexisLattice) -> list[np.ndarray]:
    """Boolean masks of the four parity classes ``(t mod 2, j mod 2)``.

    No two knots in the same class are neighbours, so a class can be updated
    simultaneously.
    """
    T, A = lattice.shape
    tt, jj = np.meshgrid(np.arange(T), np.arange(A), indexing="ij")
    return [((tt % 2) == p) & ((jj % 2) == q) for p in (0, 1) for q in (0, 1)]


def _readonly(a, dtype):
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class MortalityData:
    """Death counts and exposures aligned on a lattice.

    Arrays are copied and frozen. Only shapes are checked here; value
    invariants are reported by :func:`validate_data`.
    """

    lattice: LexisLattice
    deaths: np.ndarray
    exposures: np.ndarray
    label: str = ""

    def __post_init__(self):
        deaths = _readonly(self.deaths, np.float64)
        exposures = _readonly(self.exposures, np.float64)
        if deaths.shape != self.lattice.shape or exposures.shape != self.lattice.shape:
            raise DimensionError(
                f"deaths {deaths.shape} and exposures {exposures.shape} must both match "
                f"lattice shape {self.lattice.shape}"
            )
        object.__setattr__(self, "deaths", deaths)
        object.__setattr__(self, "exposures", exposures)

    @property
    def shape(self):
        return self.lattice.shape


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)  # (Knot, reason) pairs
    zero_exposure_count: int = 0

    @property
    def is_valid(self) -> bool:
        return not self.violations

    @property
    def flagged_knots(self) -> set:
        return {k for k, _ in self.violations}

    def summary(self, limit=10) -> str:
        if self.is_valid:
            return f"valid ({self.zero_exposure_count} zero-exposure knots)"
        shown = "; ".join(f"({k.t}, {k.j}): {r}" for k, r in self.violations[:limit])
        extra = "" if len(self.violations) <= limit else f"; ... {len(self.violations) - limit} more"
        return f"{len(self.violations)} violations: {shown}{extra}"


def validate_data(data: MortalityData) -> ValidationReport:
    """Report knots that break the data invariants. Never raises."""
    y, n = data.deaths, data.exposures
    report = ValidationReport()
    checks = [
        (~np.isfinite(y), "non-finite deaths"),
        (~np.isfinite(n), "non-finite exposure"),
        (np.isfinite(y) & (y < 0), "negative deaths"),
        (np.isfinite(n) & (n < 0), "negative exposure"),
        (np.isfinite(y) & (y != np.round(y)), "non-integer deaths"),
        ((n == 0) & np.isfinite(y) & (y > 0), "deaths without exposure"),
    ]
    for mask, reason in checks:
        for t, j in zip(*np.nonzero(mask)):
            report.violations.append((Knot(int(t), int(j)), reason))
    report.violations.sort(key=lambda v: (v[0].t, v[0].j))
    report.zero_exposure_count = int(np.count_nonzero(n == 0))
    return report
