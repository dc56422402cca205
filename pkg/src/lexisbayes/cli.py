"""Command-line interface.

Exit codes: 0 success, 1 internal error, 2 input or validation error,
3 convergence failure under ``--strict``.

Options may also come from ``--config FILE`` (``key = value`` lines, keys are
option names without leading dashes, ``-`` or ``_``). Command-line flags
override the file, which overrides built-in defaults.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
import time

from . import __version__
from .diagnostics import convergence_report, write_trace_csv
from .exceptions import LexisError
from .ingest import (
    SEXES,
    aggregate,
    parse_hmd_table,
    to_hmd_tables,
    to_mortality_data,
    write_hmd_table,
)
from .io import lattice_metadata, sha256_file, write_json, write_matrix_csv, write_pgm
from .model import Hyperparameters, baseline_rate
from .sampler import SamplerConfig, posterior_means, run_chains
from .surfaces import decompose, precision_ratio
from .synthetic import SyntheticSpec, generate_synthetic

logger = logging.getLogger("lexisbayes")

EXIT_OK, EXIT_INTERNAL, EXIT_INPUT, EXIT_CONVERGENCE = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _range(text):
    try:
        lo, hi = text.split(":")
        lo, hi = int(lo), int(hi)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO:HI, got {text!r}") from None
    if hi < lo:
        raise argparse.ArgumentTypeError(f"empty range {text!r}")
    return (lo, hi)


def _bool(text):
    if isinstance(text, bool):
        return text
    v = str(text).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {text!r}")


def read_config(path) -> dict:
    """Parse a ``key = value`` file; ``#`` starts a comment."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key.lstrip("-").replace("-", "_")] = value
    return out


def build_parser():
    parser = argparse.ArgumentParser(prog="lexisbayes", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="fit the smooth + shock model to HMD 1x1 tables")
    fit.add_argument("--config")
    fit.add_argument("--deaths", help="HMD Deaths_1x1 file")
    fit.add_argument("--exposures", help="HMD Exposures_1x1 file")
    fit.add_argument("--sex", choices=SEXES, default="total")
    fit.add_argument("--years", type=_range, help="inclusive LO:HI calendar years")
    fit.add_argument("--ages", type=_range, help="inclusive LO:HI ages")
    fit.add_argument("--iters", type=int, default=100_000)
    fit.add_argument("--burnin", type=int, default=70_000)
    fit.add_argument("--thin", type=int, default=1)
    fit.add_argument("--chains", type=int, default=1)
    fit.add_argument("--seed", type=int)
    fit.add_argument("--alpha-x", type=float, default=0.01)
    fit.add_argument("--beta-x", type=float, default=0.01)
    fit.add_argument("--alpha-z", type=float, default=0.01)
    fit.add_argument("--beta-z", type=float, default=0.01)
    fit.add_argument("--proposal-sd", type=float, default=0.1)
    fit.add_argument("--probe", action="append", default=[], metavar="YEAR:AGE",
                     help="trace x and z at this knot (up to 10)")
    fit.add_argument("--parallel-sweeps", type=_bool, nargs="?", const=True, default=False)
    fit.add_argument("--strict", type=_bool, nargs="?", const=True, default=False,
                     help="exit 3 if a precision PSRF exceeds 1.1")
    fit.add_argument("--heatmap", type=_bool, nargs="?", const=True, default=False,
                     help="also write grayscale PGM heatmaps of the surfaces")
    fit.add_argument("--out")

    sim = sub.add_parser("simulate", help="write a synthetic dataset in HMD layout")
    sim.add_argument("--config")
    sim.add_argument("--T", dest="T", type=int, default=60)
    sim.add_argument("--A", dest="A", type=int, default=60)
    sim.add_argument("--exposure", type=float, default=1e5)
    sim.add_argument("--smooth-amp", type=float, default=0.5)
    sim.add_argument("--band", type=_range, default=(30, 45), help="band ages LO:HI at the first year")
    sim.add_argument("--band-amp", type=float, default=0.5)
    sim.add_argument("--slope", type=float, default=0.1, help="band drift in years of age per year")
    sim.add_argument("--spike-year", type=int)
    sim.add_argument("--spike-amp", type=float, default=0.0)
    sim.add_argument("--mu0", type=float, default=0.01)
    sim.add_argument("--year-origin", type=int, default=1900)
    sim.add_argument("--age-origin", type=int, default=0)
    sim.add_argument("--seed", type=int)
    sim.add_argument("--out")

    agg = sub.add_parser("aggregate", help="sum populations over their shared years")
    agg.add_argument("--config")
    agg.add_argument("--pair", nargs=2, action="append", default=[], metavar=("DEATHS", "EXPOSURES"))
    agg.add_argument("--ages", type=_range)
    agg.add_argument("--label")
    agg.add_argument("--out")
    return parser, {"fit": fit, "simulate": sim, "aggregate": agg}


def parse_args(argv):
    parser, subparsers = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        sub = subparsers[args.command]
        known = {a.dest: a for a in sub._actions}
        defaults = {}
        for key, value in read_config(args.config).items():
            if key not in known or key in ("help", "config"):
                raise UsageError(f"unknown config key {key!r} for '{args.command}'")
            action = known[key]
            if isinstance(action, argparse._AppendAction):
                defaults[key] = [v.strip() for v in value.split(",") if v.strip()]
            else:
                defaults[key] = value  # argparse applies ``type`` to string defaults
        sub.set_defaults(**defaults)
        args = parser.parse_args(argv)
    return args


def _require(args, *names):
    missing = [n for n in names if getattr(args, n, None) in (None, [])]
    if missing:
        raise UsageError("missing required option(s): " + ", ".join("--" + n.replace("_", "-") for n in missing))


def _prepare_out(path):
    os.makedirs(path, exist_ok=True)
    return path


def _write_manifest(out, args, argv, inputs, outputs, started, extra=None):
    resolved = {k: (list(v) if isinstance(v, tuple) else v) for k, v in vars(args).items()}
    manifest = {
        "software": "lexisbayes",
        "version": __version__,
        "command": args.command,
        "argv": list(argv),
        "resolved": resolved,
        "seed": getattr(args, "seed", None),
        "inputs": {p: sha256_file(p) for p in inputs},
        "outputs": sorted(outputs),
        "runtime_seconds": round(time.time() - started, 3),
    }
    if extra:
        manifest.update(extra)
    for name in outputs:
        if not os.path.exists(os.path.join(out, name)):
            raise RuntimeError(f"manifest lists missing output {name}")
    write_json(os.path.join(out, "manifest.json"), manifest)


def _parse_probe(text, lattice):
    year, age = _range_pair(text)
    t, j = year - lattice.year_origin, age - lattice.age_origin
    if not lattice.contains((t, j)):
        raise UsageError(f"probe {text} outside the data domain")
    return (t, j)


def _range_pair(text):
    try:
        a, b = text.split(":")
        return int(a), int(b)
    except ValueError:
        raise UsageError(f"expected YEAR:AGE, got {text!r}") from None


def cmd_fit(args, argv):
    _require(args, "deaths", "exposures", "seed", "out")
    started = time.time()
    for path in (args.deaths, args.exposures):
        if not os.path.isfile(path):
            raise UsageError(f"input file not found: {path}")
    deaths = parse_hmd_table(args.deaths)
    exposures = parse_hmd_table(args.exposures)
    data = to_mortality_data(deaths, exposures, args.sex, args.years, args.ages,
                             label=f"{os.path.basename(args.deaths)}:{args.sex}")
    if len(args.probe) > 10:
        raise UsageError("at most 10 --probe knots")
    probes = tuple(_parse_probe(p, data.lattice) for p in args.probe)
    config = SamplerConfig(
        total_iterations=args.iters, burn_in=args.burnin, thin=args.thin, seed=args.seed,
        hyper=Hyperparameters(args.alpha_x, args.beta_x, args.alpha_z, args.beta_z),
        proposal_sd_x=args.proposal_sd, proposal_sd_z=args.proposal_sd, n_chains=args.chains,
        parallel_sweeps=args.parallel_sweeps, probe_knots=probes,
    )
    offset = baseline_rate(data)
    logger.info("fitting %s: %dx%d knots, mu0=%.6g, %d chain(s)", data.label, *data.shape,
                offset.mu0, config.n_chains)
    chains = run_chains(data, config, offset=offset)
    estimates = posterior_means(chains, offset)
    surfaces = decompose(estimates, data)
    summary_ratio = precision_ratio(estimates.gamma_x_hat, estimates.gamma_z_hat)
    report = convergence_report(chains)

    out = _prepare_out(args.out)
    outputs = []
    heat = {}
    for name, matrix in surfaces.as_dict().items():
        write_matrix_csv(os.path.join(out, f"{name}.csv"), matrix, data.lattice)
        outputs.append(f"{name}.csv")
        if args.heatmap:
            lo, hi = write_pgm(os.path.join(out, f"{name}.pgm"), matrix)
            heat[f"{name}.pgm"] = {"min": lo, "max": hi}
            outputs.append(f"{name}.pgm")
    names = [f"gamma_x_chain{i}" for i in range(len(chains))] + [f"gamma_z_chain{i}" for i in range(len(chains))]
    write_trace_csv(os.path.join(out, "gamma_trace.csv"),
                    [c.gamma_trace_x for c in chains] + [c.gamma_trace_z for c in chains], names)
    outputs.append("gamma_trace.csv")
    write_json(os.path.join(out, "convergence.json"), report.as_dict())
    outputs.append("convergence.json")
    summary = {
        "label": data.label,
        "sex": args.sex,
        "mu0": offset.mu0,
        "log_mu0": offset.log_mu0,
        "gamma_x_hat": estimates.gamma_x_hat,
        "gamma_z_hat": estimates.gamma_z_hat,
        "rho": summary_ratio.rho,
        "cluster": summary_ratio.cluster,
        "x_hat_mean": estimates.x_level,
        "converged": report.converged,
        "domain": lattice_metadata(data.lattice),
    }
    write_json(os.path.join(out, "summary.json"), summary)
    outputs.append("summary.json")
    _write_manifest(out, args, argv, [args.deaths, args.exposures], outputs, started,
                    {"seeds": [c.seed_used for c in chains], "heatmaps": heat or None})
    if args.strict and not report.converged:
        if report.converged is None:
            logger.error("--strict needs at least 2 chains with 10 retained draws for the PSRF")
        else:
            logger.error("PSRF above threshold: gamma_x %.4f, gamma_z %.4f",
                         report.psrf_gamma_x, report.psrf_gamma_z)
        return EXIT_CONVERGENCE
    return EXIT_OK


def cmd_simulate(args, argv):
    _require(args, "seed", "out")
    started = time.time()
    spec = SyntheticSpec(
        n_years=args.T, n_ages=args.A, exposure=args.exposure, smooth_amplitude=args.smooth_amp,
        band_ages=tuple(args.band), band_slope=args.slope, band_amplitude=args.band_amp,
        spike_year=args.spike_year, spike_amplitude=args.spike_amp, mu0=args.mu0, seed=args.seed,
        year_origin=args.year_origin, age_origin=args.age_origin,
    )
    ds = generate_synthetic(spec)
    out = _prepare_out(args.out)
    preamble = [f"Synthetic Lexis data, seed {spec.seed} (lexisbayes {__version__})"]
    deaths, exposures = to_hmd_tables({"total": ds.data}, preamble)
    write_hmd_table(os.path.join(out, "Deaths_1x1.txt"), deaths)
    write_hmd_table(os.path.join(out, "Exposures_1x1.txt"), exposures)
    lattice = ds.data.lattice
    write_matrix_csv(os.path.join(out, "truth_x.csv"), ds.x, lattice)
    write_matrix_csv(os.path.join(out, "truth_z.csv"), ds.z, lattice)
    outputs = ["Deaths_1x1.txt", "Exposures_1x1.txt", "truth_x.csv", "truth_z.csv"]
    _write_manifest(out, args, argv, [], outputs, started, {"mu0": spec.mu0})
    return EXIT_OK


def cmd_aggregate(args, argv):
    _require(args, "out")
    if len(args.pair) < 2:
        raise UsageError("aggregate needs at least two --pair DEATHS EXPOSURES inputs")
    started = time.time()
    tables = [(parse_hmd_table(d), parse_hmd_table(e)) for d, e in args.pair]
    by_sex = {}
    errors = {}
    for sex in SEXES:
        try:
            parts = [to_mortality_data(d, e, sex, ages=args.ages, label=os.path.basename(p[0]))
                     for (d, e), p in zip(tables, args.pair)]
            by_sex[sex] = aggregate(parts, label=args.label)
        except LexisError as exc:
            errors[sex] = str(exc)
    if not by_sex:
        raise UsageError("no sex could be aggregated: " + "; ".join(f"{k}: {v}" for k, v in errors.items()))
    lattices = {ds.lattice for ds in by_sex.values()}
    if len(lattices) > 1:
        # Keep the sexes sharing the most common domain.
        keep = max(lattices, key=lambda lat: sum(ds.lattice == lat for ds in by_sex.values()))
        for sex in [s for s, ds in by_sex.items() if ds.lattice != keep]:
            errors[sex] = "domain differs from the other sexes"
            del by_sex[sex]
    for sex, msg in errors.items():
        logger.warning("%s written as missing: %s", sex, msg)
    lattice = next(iter(by_sex.values())).lattice
    out = _prepare_out(args.out)
    label = args.label or " + ".join(os.path.basename(d) for d, _ in args.pair)
    preamble = [f"Aggregate of {len(args.pair)} populations ({label}), "
                f"{lattice.years[0]}-{lattice.years[-1]}"]
    deaths, exposures = to_hmd_tables(by_sex, preamble)
    write_hmd_table(os.path.join(out, "Deaths_1x1.txt"), deaths)
    write_hmd_table(os.path.join(out, "Exposures_1x1.txt"), exposures)
    inputs = [p for pair in args.pair for p in pair]
    _write_manifest(out, args, argv, inputs, ["Deaths_1x1.txt", "Exposures_1x1.txt"], started,
                    {"domain": lattice_metadata(lattice), "sexes": sorted(by_sex)})
    return EXIT_OK


COMMANDS = {"fit": cmd_fit, "simulate": cmd_simulate, "aggregate": cmd_aggregate}


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse_args(argv)
    except UsageError as exc:
        print(f"lexisbayes: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SystemExit as exc:  # argparse usage errors exit with 2 already
        return exc.code if isinstance(exc.code, int) else EXIT_INPUT
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args, argv)
    except (UsageError, LexisError, OSError, ValueError) as exc:
        print(f"lexisbayes: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception:
        logger.exception("internal error")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
