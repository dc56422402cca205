"""Convergence diagnostics: Gelman-Rubin PSRF and acceptance summaries."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateTraceError

ACCEPTANCE_FLAG_BAND = (0.15, 0.35)
PSRF_THRESHOLD = 1.1


def psrf(traces) -> float:
    """Potential scale reduction factor of ``m >= 2`` equal-length traces.

    Parameters
    ----------
    traces : sequence of 1-D arrays
        One trace per chain, all of length ``K >= 10``.

    Returns
    -------
    float
        ``sqrt(((K - 1) / K * W + B / K) / W)`` where ``W`` is the mean
        within-chain variance and ``B`` is ``K`` times the variance of the
        chain means. Values near 1 indicate convergence.
    """
    chains = np.asarray([np.asarray(t, dtype=np.float64) for t in traces])
    if chains.ndim != 2 or chains.shape[0] < 2:
        raise ValueError("need at least two traces of equal length")
    m, K = chains.shape
    if K < 10:
        raise ValueError(f"traces must have at least 10 samples, got {K}")
    within = chains.var(axis=1, ddof=1)
    if np.any(within <= 0):
        raise DegenerateTraceError(f"constant trace(s) at chain index {np.flatnonzero(within <= 0).tolist()}")
    W = within.mean()
    B = K * chains.mean(axis=1).var(ddof=1)
    var_plus = (K - 1) / K * W + B / K
    return float(np.sqrt(var_plus / W))


@dataclass
class AcceptanceSummary:
    global_x: float
    global_z: float
    min_x: float
    median_x: float
    max_x: float
    min_z: float
    median_z: float
    max_z: float
    flagged: bool

    def as_dict(self):
        return dict(self.__dict__)


def acceptance_summary(accepted_x, accepted_z, n_proposals, band=ACCEPTANCE_FLAG_BAND) -> AcceptanceSummary:
    acc_x = np.asarray(accepted_x, dtype=np.float64)
    acc_z = np.asarray(accepted_z, dtype=np.float64)
    if n_proposals < 1:
        raise ValueError("no proposals recorded")
    rx, rz = acc_x / n_proposals, acc_z / n_proposals
    gx = float(acc_x.sum() / (n_proposals * acc_x.size))
    gz = float(acc_z.sum() / (n_proposals * acc_z.size))
    lo, hi = band
    flagged = not (lo <= gx <= hi and lo <= gz <= hi)
    return AcceptanceSummary(gx, gz, float(rx.min()), float(np.median(rx)), float(rx.max()),
                             float(rz.min()), float(np.median(rz)), float(rz.max()), flagged)


def acceptance_report(output, band=ACCEPTANCE_FLAG_BAND) -> AcceptanceSummary:
    """Global and per-knot acceptance rates of the retained iterations of a chain."""
    return acceptance_summary(output.accepted_x, output.accepted_z, output.n_proposals, band)


@dataclass
class ConvergenceReport:
    n_chains: int
    n_retained: int
    psrf_gamma_x: float | None
    psrf_gamma_z: float | None
    acceptance: list
    psrf_probes: list | None = None

    @property
    def converged(self):
        """``True``/``False`` from the precision PSRFs, ``None`` when they were not computed."""
        if self.psrf_gamma_x is None or self.psrf_gamma_z is None:
            return None
        return self.psrf_gamma_x < PSRF_THRESHOLD and self.psrf_gamma_z < PSRF_THRESHOLD

    def as_dict(self):
        return {
            "n_chains": self.n_chains,
            "n_retained": self.n_retained,
            "psrf_gamma_x": self.psrf_gamma_x,
            "psrf_gamma_z": self.psrf_gamma_z,
            "psrf_threshold": PSRF_THRESHOLD,
            "converged": self.converged,
            "acceptance": [a.as_dict() for a in self.acceptance],
            "psrf_probes": self.psrf_probes,
        }


def convergence_report(outputs) -> ConvergenceReport:
    """Summarise a set of chains. PSRF needs two or more chains with ``K >= 10``."""
    outputs = list(outputs)
    K = min(o.n_retained for o in outputs)
    pgx = pgz = None
    probes = None
    if len(outputs) >= 2 and K >= 10:
        pgx = psrf([o.gamma_trace_x[:K] for o in outputs])
        pgz = psrf([o.gamma_trace_z[:K] for o in outputs])
        if outputs[0].probe_knots:
            probes = []
            for k, knot in enumerate(outputs[0].probe_knots):
                entry = {"knot": list(knot)}
                for name in ("x", "z"):
                    try:
                        entry[name] = psrf([getattr(o, f"probe_trace_{name}")[:K, k] for o in outputs])
                    except DegenerateTraceError:
                        entry[name] = None
                probes.append(entry)
    return ConvergenceReport(len(outputs), K, pgx, pgz, [acceptance_report(o) for o in outputs], probes)


def write_trace_csv(path, traces, names):
    """Write equal-length traces as columns with a header row."""
    columns = [np.asarray(t) for t in traces]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["iteration", *names])
        for i, row in enumerate(zip(*columns)):
            writer.writerow([i + 1, *(format(float(v), ".17g") for v in row)])
