"""Metropolis-within-Gibbs sampler for the smooth + shock decomposition.

Every iteration visits the knots in row-major order, doing a Gaussian
random-walk Metropolis move on ``x[t, j]`` and then on ``z[t, j]``, and
finishes with conjugate Gamma draws of ``gamma_x`` and ``gamma_z``.
Per-knot proposal scales are tuned during burn-in in windows of
``adapt_window`` sweeps and frozen afterwards.
"""
from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from .exceptions import DataValidationError, SamplerError
from .lattice import MortalityData, validate_data
from .model import FieldState, Hyperparameters, Offset, baseline_rate

logger = logging.getLogger(__name__)

SCALE_BOUNDS = (1e-4, 10.0)
ADAPT_STEP = 0.3


@dataclass(frozen=True)
class SamplerConfig:
    total_iterations: int = 100_000
    burn_in: int = 70_000
    thin: int = 1
    seed: int | None = None
    hyper: Hyperparameters = field(default_factory=Hyperparameters)
    # Scalars or T x A arrays.
    init_x: object = 0.0
    init_z: object = 0.0
    init_gamma_x: float = 1.0
    init_gamma_z: float = 1.0
    proposal_sd_x: float = 0.1
    proposal_sd_z: float = 0.1
    target_acceptance: tuple = (0.2, 0.3)
    adapt_during_burn_in: bool = True
    adapt_window: int = 100
    n_chains: int = 1
    parallel_sweeps: bool = False
    # Test hook: keep gamma_x, gamma_z at their initial values.
    freeze_precisions: bool = False
    # Knots whose x and z values are traced (field-level diagnostics).
    probe_knots: tuple = ()
    min_retained: int = 100

    def __post_init__(self):
        if self.total_iterations < 1 or self.thin < 1 or self.n_chains < 1 or self.adapt_window < 1:
            raise ValueError("total_iterations, thin, n_chains and adapt_window must be positive")
        if not 0 <= self.burn_in < self.total_iterations:
            raise ValueError(f"burn_in must lie in [0, {self.total_iterations}), got {self.burn_in}")
        if self.n_retained < self.min_retained:
            raise ValueError(
                f"only {self.n_retained} retained samples; need at least {self.min_retained}"
            )
        lo, hi = self.target_acceptance
        if not 0.0 < lo <= hi < 1.0:
            raise ValueError(f"invalid target acceptance interval {self.target_acceptance}")
        if not (self.proposal_sd_x > 0 and self.proposal_sd_z > 0):
            raise ValueError("proposal scales must be positive")
        if not (self.init_gamma_x > 0 and self.init_gamma_z > 0):
            raise ValueError("initial precisions must be positive")
        if self.seed is not None and not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    @property
    def n_retained(self) -> int:
        return (self.total_iterations - self.burn_in) // self.thin


@dataclass
class ChainOutput:
    """Ergodic summaries of one chain.

    Acceptance tallies cover the post-burn-in iterations only.
    """

    mean_x: np.ndarray
    mean_z: np.ndarray
    gamma_trace_x: np.ndarray
    gamma_trace_z: np.ndarray
    accepted_x: np.ndarray
    accepted_z: np.ndarray
    n_proposals: int
    final_scale_x: np.ndarray
    final_scale_z: np.ndarray
    seed_used: int | None
    offset: Offset
    final_state: FieldState
    probe_knots: tuple = ()
    probe_trace_x: np.ndarray | None = None
    probe_trace_z: np.ndarray | None = None

    @property
    def n_retained(self) -> int:
        return len(self.gamma_trace_x)

    @property
    def mean_gamma_x(self) -> float:
        return float(np.mean(self.gamma_trace_x))

    @property
    def mean_gamma_z(self) -> float:
        return float(np.mean(self.gamma_trace_z))

    @property
    def acceptance_x(self) -> np.ndarray:
        return self.accepted_x / max(self.n_proposals, 1)

    @property
    def acceptance_z(self) -> np.ndarray:
        return self.accepted_z / max(self.n_proposals, 1)


@dataclass
class SweepTally:
    accepted_x: np.ndarray
    accepted_z: np.ndarray


@dataclass
class EstimateSet:
    """Posterior-mean point estimates."""

    x_hat: np.ndarray
    z_hat: np.ndarray
    gamma_x_hat: float
    gamma_z_hat: float
    offset: Offset

    @property
    def intensity(self) -> np.ndarray:
        """Estimated force of mortality ``mu0 * exp(x_hat + z_hat)``."""
        return self.offset.mu0 * np.exp(self.x_hat + self.z_hat)

    @property
    def x_level(self) -> float:
        """Mean of ``x_hat``; the field prior leaves it unconstrained, reported only."""
        return float(np.mean(self.x_hat))


def _as_scale(value, shape):
    return np.ascontiguousarray(np.broadcast_to(np.asarray(value, dtype=np.float64), shape))


def _draw_proposal_noise(rng, shape):
    eps = rng.standard_normal(shape)
    # log(1 - U) with U in [0, 1) is finite and has the law of log U.
    logu = np.log1p(-rng.random(shape))
    return eps, logu


def metropolis_sweep(state: FieldState, data: MortalityData, offset: Offset, scales, rng,
                     *, parallel=False) -> SweepTally:
    """Update every ``x[t, j]`` and ``z[t, j]`` once, in place.

    ``scales`` is a pair ``(scale_x, scale_z)`` of proposal standard
    deviations, scalars or ``T x A`` arrays.
    """
    shape = data.lattice.shape
    scale_x, scale_z = (_as_scale(s, shape) for s in scales)
    eps, logu = _draw_proposal_noise(rng, (2,) + shape)
    acc_x = np.zeros(shape, dtype=np.int64)
    acc_z = np.zeros(shape, dtype=np.int64)
    kernel = _kernels.colored_sweep if parallel else _kernels.sweep
    kernel(state.x, state.z, np.array(data.deaths), np.array(data.exposures), offset.mu0, state.gamma_x,
           state.gamma_z, scale_x, scale_z, eps, logu, acc_x, acc_z)
    return SweepTally(acc_x, acc_z)


def gibbs_update_precisions(state: FieldState, lattice, hyper: Hyperparameters, rng) -> FieldState:
    """Draw both precisions from their Gamma full conditionals (shape/rate)."""
    half_n = 0.5 * lattice.n_knots
    rate_x = hyper.beta_x + 0.5 * _kernels.pair_energy(state.x)
    rate_z = hyper.beta_z + 0.5 * _kernels.sum_squares(state.z)
    state.gamma_x = float(rng.gamma(hyper.alpha_x + half_n, 1.0 / rate_x))
    state.gamma_z = float(rng.gamma(hyper.alpha_z + half_n, 1.0 / rate_z))
    return state


def adapt_proposals(rates, scales, window_index, target=(0.2, 0.3)):
    """Return new proposal scales nudged towards the target acceptance band.

    Knots whose window acceptance rate is above the band get their scale
    multiplied by ``exp(delta)``, those below by ``exp(-delta)``, with
    ``delta = 0.3 / sqrt(window_index)``. Results are clamped to
    ``SCALE_BOUNDS``.
    """
    if window_index < 1:
        raise ValueError("window_index starts at 1")
    rates = np.asarray(rates, dtype=np.float64)
    scales = np.asarray(scales, dtype=np.float64)
    delta = ADAPT_STEP / math.sqrt(window_index)
    lo, hi = target
    factor = np.where(rates > hi, math.exp(delta), np.where(rates < lo, math.exp(-delta), 1.0))
    return np.clip(scales * factor, *SCALE_BOUNDS)


def _colored_window(x, z, gam, y, n, mu0, scale_x, scale_z, eps, logu, gdraw, beta_x, beta_z,
                    update_gamma, acc_x, acc_z, keep, sum_x, sum_z, trace, pos,
                    probe_t, probe_j, probe_x, probe_z):
    # Mirrors _kernels.run_window with the colour-class sweep.
    for w in range(eps.shape[0]):
        _kernels.colored_sweep(x, z, y, n, mu0, gam[0], gam[1], scale_x, scale_z, eps[w], logu[w],
                               acc_x, acc_z)
        if update_gamma:
            gam[0] = gdraw[w, 0] / (beta_x + 0.5 * _kernels.pair_energy(x))
            gam[1] = gdraw[w, 1] / (beta_z + 0.5 * _kernels.sum_squares(z))
        if keep[w]:
            sum_x += x
            sum_z += z
            trace[pos] = gam
            probe_x[pos] = x[probe_t, probe_j]
            probe_z[pos] = z[probe_t, probe_j]
            pos += 1
    return pos


def run_chain(data: MortalityData, config: SamplerConfig, rng=None, *, offset: Offset | None = None,
              chain_index=0) -> ChainOutput:
    """Run one chain.

    ``rng`` defaults to ``numpy.random.default_rng(config.seed + chain_index)``.
    Pass ``offset`` to override the crude death rate (e.g. for data with
    no deaths). With ``parallel_sweeps`` off the output is a deterministic
    function of the seed.
    """
    report = validate_data(data)
    if not report.is_valid:
        raise DataValidationError(f"invalid mortality data: {report.summary()}", report)
    if offset is None:
        offset = baseline_rate(data)
    seed = None
    if rng is None:
        if config.seed is not None:
            seed = int(config.seed) + int(chain_index)
        rng = np.random.default_rng(seed)
    elif config.seed is not None:
        seed = int(config.seed) + int(chain_index)

    lattice = data.lattice
    shape = lattice.shape
    hyper = config.hyper
    state = FieldState.initial(lattice, config.init_x, config.init_z,
                               config.init_gamma_x, config.init_gamma_z)
    x, z = state.x, state.z
    gam = np.array([state.gamma_x, state.gamma_z])
    y = np.array(data.deaths)
    n = np.array(data.exposures)
    scale_x = np.full(shape, float(config.proposal_sd_x))
    scale_z = np.full(shape, float(config.proposal_sd_z))
    half_n = 0.5 * lattice.n_knots
    gamma_shapes = np.array([hyper.alpha_x + half_n, hyper.alpha_z + half_n])
    update_gamma = not config.freeze_precisions

    K = config.n_retained
    sum_x = np.zeros(shape)
    sum_z = np.zeros(shape)
    trace = np.zeros((K, 2))
    probes = tuple(tuple(int(v) for v in k) for k in config.probe_knots)
    for k in probes:
        if not lattice.contains(k):
            raise ValueError(f"probe knot {k} outside lattice")
    probe_t = np.array([k[0] for k in probes], dtype=np.int64)
    probe_j = np.array([k[1] for k in probes], dtype=np.int64)
    probe_x = np.zeros((K, len(probes)))
    probe_z = np.zeros((K, len(probes)))
    acc_keep_x = np.zeros(shape, dtype=np.int64)
    acc_keep_z = np.zeros(shape, dtype=np.int64)

    window_fn = _colored_window if config.parallel_sweeps else _kernels.run_window
    window = config.adapt_window
    done = 0
    pos = 0
    window_index = 0
    while done < config.total_iterations:
        in_burn = done < config.burn_in
        if in_burn:
            W = min(window, config.burn_in - done)
        else:
            W = min(window, config.total_iterations - done)
        eps, logu = _draw_proposal_noise(rng, (W, 2) + shape)
        gdraw = rng.standard_gamma(gamma_shapes, size=(W, 2))
        keep = np.zeros(W, dtype=np.bool_)
        if not in_burn:
            since = np.arange(done + 1, done + W + 1) - config.burn_in
            keep = since % config.thin == 0
        acc_x = np.zeros(shape, dtype=np.int64)
        acc_z = np.zeros(shape, dtype=np.int64)
        pos = window_fn(x, z, gam, y, n, offset.mu0, scale_x, scale_z, eps, logu, gdraw,
                        hyper.beta_x, hyper.beta_z, update_gamma, acc_x, acc_z, keep,
                        sum_x, sum_z, trace, pos, probe_t, probe_j, probe_x, probe_z)
        if not (np.isfinite(gam).all() and (gam > 0).all()):
            raise SamplerError(f"non-finite precision draw at iteration {done + W}: {gam}")
        if in_burn:
            if config.adapt_during_burn_in and W == window:
                window_index += 1
                scale_x = adapt_proposals(acc_x / W, scale_x, window_index, config.target_acceptance)
                scale_z = adapt_proposals(acc_z / W, scale_z, window_index, config.target_acceptance)
        else:
            acc_keep_x += acc_x
            acc_keep_z += acc_z
        done += W
        if done % 10_000 == 0:
            logger.debug("chain %d: %d/%d iterations, gamma=(%.4g, %.4g)", chain_index, done,
                         config.total_iterations, gam[0], gam[1])
    assert pos == K

    state.gamma_x, state.gamma_z = float(gam[0]), float(gam[1])
    return ChainOutput(
        mean_x=sum_x / K,
        mean_z=sum_z / K,
        gamma_trace_x=trace[:, 0].copy(),
        gamma_trace_z=trace[:, 1].copy(),
        accepted_x=acc_keep_x,
        accepted_z=acc_keep_z,
        n_proposals=config.total_iterations - config.burn_in,
        final_scale_x=scale_x,
        final_scale_z=scale_z,
        seed_used=seed,
        offset=offset,
        final_state=state,
        probe_knots=probes,
        probe_trace_x=probe_x,
        probe_trace_z=probe_z,
    )


def resolve_seed(seed=None) -> int:
    """Return ``seed`` or a fresh 64-bit seed from OS entropy."""
    if seed is not None:
        return int(seed)
    return int(np.random.SeedSequence().generate_state(1, dtype=np.uint64)[0])


def run_chains(data: MortalityData, config: SamplerConfig, *, offset: Offset | None = None,
               max_workers=None) -> list[ChainOutput]:
    """Run ``config.n_chains`` chains with seeds ``seed + chain_index``.

    Chains run in a thread pool (the compiled kernels release the GIL);
    ``max_workers`` defaults to ``$LEXIS_THREADS`` or the CPU count.
    """
    config = replace(config, seed=resolve_seed(config.seed))
    if offset is None:
        offset = baseline_rate(data)
    if max_workers is None:
        max_workers = int(os.environ.get("LEXIS_THREADS", 0)) or os.cpu_count() or 1
    workers = max(1, min(config.n_chains, max_workers))
    if config.parallel_sweeps:
        # The parallel sweep already uses the numba thread pool.
        workers = 1
    if workers == 1:
        return [run_chain(data, config, offset=offset, chain_index=i) for i in range(config.n_chains)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(run_chain, data, config, offset=offset, chain_index=i)
                   for i in range(config.n_chains)]
        return [f.result() for f in futures]


def posterior_means(output, offset: Offset | None = None) -> EstimateSet:
    """Ergodic posterior means from one chain or a list of chains (pooled)."""
    outputs = [output] if isinstance(output, ChainOutput) else list(output)
    if not outputs:
        raise ValueError("no chain output given")
    if offset is None:
        offset = outputs[0].offset
    weights = np.array([o.n_retained for o in outputs], dtype=np.float64)
    if weights.min() < 1:
        raise ValueError("every chain needs at least one retained sample")
    weights /= weights.sum()
    x_hat = sum(w * o.mean_x for w, o in zip(weights, outputs))
    z_hat = sum(w * o.mean_z for w, o in zip(weights, outputs))
    gx = float(np.mean(np.concatenate([o.gamma_trace_x for o in outputs])))
    gz = float(np.mean(np.concatenate([o.gamma_trace_z for o in outputs])))
    return EstimateSet(x_hat, z_hat, gx, gz, offset)
