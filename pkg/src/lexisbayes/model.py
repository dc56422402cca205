"""Poisson log-linear model with a smooth GMRF field and independent shocks.

The log intensity at knot ``(t, j)`` is ``log(mu0) + x[t, j] + z[t, j]``
where ``x`` follows an intrinsic Gaussian Markov random field on the
8-neighbour lattice with precision ``gamma_x``, ``z`` is i.i.d. Gaussian with
precision ``gamma_z`` and both precisions carry Gamma(shape, rate)
hyperpriors. ``mu0`` is the crude death rate, held fixed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import (
    DimensionError,
    KnotOutOfBoundsError,
    NonFinitePotentialError,
    OffsetError,
)
from .lattice import _HALF_OFFSETS, LexisLattice, MortalityData, neighbors

# |x + z| beyond this is treated as a diverged proposal.
LOG_RATE_LIMIT = 50.0


@dataclass(frozen=True)
class Hyperparameters:
    """Gamma shape/rate pairs for the two precisions (vague by default)."""

    alpha_x: float = 0.01
    beta_x: float = 0.01
    alpha_z: float = 0.01
    beta_z: float = 0.01

    def __post_init__(self):
        for name in ("alpha_x", "beta_x", "alpha_z", "beta_z"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be a positive finite number, got {v!r}")


@dataclass
class FieldState:
    """Mutable sampler state. Only the sampler writes to it."""

    x: np.ndarray
    z: np.ndarray
    gamma_x: float = 1.0
    gamma_z: float = 1.0

    def __post_init__(self):
        self.x = np.ascontiguousarray(self.x, dtype=np.float64)
        self.z = np.ascontiguousarray(self.z, dtype=np.float64)
        if self.x.shape != self.z.shape or self.x.ndim != 2:
            raise DimensionError(f"x {self.x.shape} and z {self.z.shape} must be equal 2-D shapes")
        if not (np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.z))):
            raise ValueError("field entries must be finite")
        if not (self.gamma_x > 0 and self.gamma_z > 0):
            raise ValueError("precisions must be strictly positive")

    @classmethod
    def initial(cls, lattice: LexisLattice, x0=0.0, z0=0.0, gamma_x=1.0, gamma_z=1.0):
        x = np.array(np.broadcast_to(np.asarray(x0, dtype=np.float64), lattice.shape))
        z = np.array(np.broadcast_to(np.asarray(z0, dtype=np.float64), lattice.shape))
        return cls(x, z, float(gamma_x), float(gamma_z))

    def copy(self):
        return FieldState(self.x.copy(), self.z.copy(), self.gamma_x, self.gamma_z)


@dataclass(frozen=True)
class Offset:
    mu0: float

    def __post_init__(self):
        if not (math.isfinite(self.mu0) and self.mu0 > 0):
            raise OffsetError(f"baseline rate must be positive and finite, got {self.mu0!r}")

    @property
    def log_mu0(self) -> float:
        return math.log(self.mu0)


def baseline_rate(data: MortalityData) -> Offset:
    """Crude death rate over the whole lattice: total deaths / total exposure."""
    total_n = float(np.sum(data.exposures))
    total_y = float(np.sum(data.deaths))
    if not total_n > 0:
        raise OffsetError("total exposure is zero; baseline rate undefined")
    if not total_y > 0:
        raise OffsetError("total deaths are zero; log baseline rate undefined")
    return Offset(total_y / total_n)


def pair_energy(x, lattice: LexisLattice) -> float:
    """Sum of squared neighbour differences, each undirected pair counted once."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != lattice.shape:
        raise DimensionError(f"field shape {x.shape} does not match lattice {lattice.shape}")
    T, A = x.shape
    total = 0.0
    for dt, dj in _HALF_OFFSETS:
        j0, j1 = max(0, -dj), A - max(0, dj)
        d = x[dt:T, j0 + dj:j1 + dj] - x[0:T - dt, j0:j1]
        total += float(np.sum(d * d))
    return total


def _likelihood_potential(mu0, n, y, eta, value):
    # mu0 * n * exp(eta) - y * value; absent where n == 0.
    if n == 0:
        return 0.0
    if not abs(eta) <= LOG_RATE_LIMIT:
        raise NonFinitePotentialError(f"log-rate offset {eta!r} outside +/-{LOG_RATE_LIMIT}")
    return mu0 * n * math.exp(eta) - y * value


def _check_knot(lattice, knot):
    if not lattice.contains(knot):
        raise KnotOutOfBoundsError(f"knot {tuple(knot)} outside lattice {lattice.shape}")


def local_potential_x(state: FieldState, data: MortalityData, offset: Offset, knot, x_val) -> float:
    """Local energy of ``x`` at ``knot`` when its value is ``x_val``.

    Lower is more probable; the Metropolis acceptance is
    ``min(1, exp(H(old) - H(new)))``.
    """
    t, j = knot
    x_val = float(x_val)
    nbrs = neighbors(data.lattice, knot)
    h = _likelihood_potential(offset.mu0, data.exposures[t, j], data.deaths[t, j],
                              x_val + state.z[t, j], x_val)
    h += 0.5 * state.gamma_x * sum((x_val - state.x[s, i]) ** 2 for s, i in nbrs)
    if not math.isfinite(h):
        raise NonFinitePotentialError(f"non-finite x potential at {tuple(knot)}")
    return h


def local_potential_z(state: FieldState, data: MortalityData, offset: Offset, knot, z_val) -> float:
    _check_knot(data.lattice, knot)
    t, j = knot
    z_val = float(z_val)
    h = _likelihood_potential(offset.mu0, data.exposures[t, j], data.deaths[t, j],
                              state.x[t, j] + z_val, z_val)
    h += 0.5 * state.gamma_z * z_val * z_val
    if not math.isfinite(h):
        raise NonFinitePotentialError(f"non-finite z potential at {tuple(knot)}")
    return h


def log_likelihood_kernel(state: FieldState, data: MortalityData, offset: Offset) -> float:
    """``sum y (x + z) - mu0 n exp(x + z)`` over knots with positive exposure."""
    n, y = data.exposures, data.deaths
    eta = state.x + state.z
    live = n > 0
    if np.any(np.abs(eta[live]) > LOG_RATE_LIMIT):
        raise NonFinitePotentialError("log-rate offset outside the safe range")
    return float(np.sum(y[live] * eta[live] - offset.mu0 * n[live] * np.exp(eta[live])))


def log_posterior(state: FieldState, data: MortalityData, offset: Offset,
                  hyper: Hyperparameters) -> float:
    """Unnormalised joint log posterior of ``(x, z, gamma_x, gamma_z)``.

    The Gamma conditional shapes use ``N/2`` with ``N = T * A`` even though
    the intrinsic field prior has rank ``N - 1``.
    """
    lattice = data.lattice
    half_n = 0.5 * lattice.n_knots
    gx, gz = state.gamma_x, state.gamma_z
    value = log_likelihood_kernel(state, data, offset)
    value -= 0.5 * gx * pair_energy(state.x, lattice)
    value -= 0.5 * gz * float(np.sum(state.z * state.z))
    value += -hyper.beta_x * gx + (hyper.alpha_x - 1.0 + half_n) * math.log(gx)
    value += -hyper.beta_z * gz + (hyper.alpha_z - 1.0 + half_n) * math.log(gz)
    if not math.isfinite(value):
        raise NonFinitePotentialError("log posterior is not finite")
    return value


def conditional_gamma_params(state: FieldState, lattice: LexisLattice, hyper: Hyperparameters):
    """Shape/rate pairs of the full conditionals of ``gamma_x`` and ``gamma_z``."""
    half_n = 0.5 * lattice.n_knots
    return (
        (hyper.alpha_x + half_n, hyper.beta_x + 0.5 * pair_energy(state.x, lattice)),
        (hyper.alpha_z + half_n, hyper.beta_z + 0.5 * float(np.sum(state.z * state.z))),
    )
