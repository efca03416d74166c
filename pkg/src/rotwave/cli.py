"""``rotwave`` command line.

Exit codes: 0 success, 1 failed check or unhealthy run, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import sys
import warnings
from pathlib import Path

import numpy as np

from . import config as cfgmod
from . import propagator, snapshot, verify
from .bands import norm_B, norm_Hneg1, norm_sobolev
from .solver import DiagnosticsRow, lifespan_experiment, run_simulation, stabilization_votes, velocity_of
from .spectral import SpectralField

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _csv_writer(fh):
    return csv.writer(fh, lineterminator="\n")


def _fmt(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def build_parser():
    parser = argparse.ArgumentParser(prog="rotwave", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="key = value config file")
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument("--seed", type=int, help="random seed")
    common.add_argument("--set", dest="sets", action="append", default=[], metavar="KEY=VALUE", help="override a config key")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("verify", parents=[common], help="run identity and property suites")
    p.add_argument("--suite", metavar="NAME", help="phase-identities, formulation, multipliers, bands, all (comma separated)")
    sub.add_parser("decay", parents=[common], help="dispersive decay curve of a preset profile")
    sub.add_parser("simulate", parents=[common], help="time-step axisymmetric data, write diagnostics and snapshots")
    sub.add_parser("lifespan", parents=[common], help="proxy lifespan sweep with rotation on and off")
    p = sub.add_parser("norms", parents=[common], help="print norms of the fields in a snapshot")
    p.add_argument("snapshot_path", nargs="?", metavar="SNAPSHOT")
    return parser


def resolve_config(args):
    raw = cfgmod.load_raw(args.config) if args.config else {}
    here = Path.cwd()
    for item in args.sets:
        if "=" not in item:
            raise cfgmod.ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = (s.strip() for s in item.split("=", 1))
        if key not in cfgmod._PARSERS:
            raise cfgmod.ConfigError(f"unknown key {key!r}")
        raw[key] = (value, here)
    overrides = {}
    if args.out is not None:
        overrides["out"] = str(Path(args.out).resolve())
    if args.seed is not None:
        overrides["seed"] = args.seed
    if getattr(args, "suite", None) is not None:
        overrides["suite"] = args.suite
    if getattr(args, "snapshot_path", None):
        overrides["snapshot"] = str(Path(args.snapshot_path).resolve())
    return cfgmod.build(raw, overrides)


def prepare_out(config):
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.resolved").write_text(config.echo())
    return out


# subcommands ---------------------------------------------------------------------


def cmd_verify(config):
    if not config.suite.strip():
        raise UsageError("verify needs a suite: --suite phase-identities|formulation|multipliers|bands|all")
    try:
        names = verify.expand_suites(config.suite)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out = prepare_out(config)
    failures = []
    for name in names:
        rng = np.random.default_rng(np.random.SeedSequence([config.seed, verify.SUITES.index(name)]))
        reports = []
        checks = verify.run_suite(name, rng, config.samples, reports)
        verify.write_outputs(out, name, checks, reports)
        bad = [c for c in checks if not c.passed]
        failures.extend(bad)
        print(f"{name}: {len(checks) - len(bad)}/{len(checks)} checks passed")
    verify.write_checks_csv(out / "failures.csv", failures)
    if failures:
        writer = _csv_writer(sys.stdout)
        writer.writerow(verify.CHECK_HEADER)
        for c in failures:
            writer.writerow(c.row())
        return EXIT_FAIL
    return EXIT_OK


def decay_profile(config):
    if config.profile == "horizontal_gaussian":
        return propagator.horizontal_gaussian(config.band_k, config.n_rho, config.n_lam)
    if config.profile == "radial_gaussian":
        return propagator.radial_gaussian(config.band_k, config.n_rho, config.n_lam)
    return propagator.localized_bump(config.band_k, config.lam0, n_rho=config.n_rho, n_lam=config.n_lam)


def cmd_decay(config):
    if not config.times:
        raise UsageError("decay needs a nonempty times list")
    out = prepare_out(config)
    f = decay_profile(config)
    similarity = (np.array([0.0]), np.array([0.0])) if config.x_set == "origin" else None
    with warnings.catch_warnings():
        warnings.simplefilter("error", propagator.QuadratureResolutionWarning)
        try:
            study = propagator.decay_study(f, config.band_k, config.times, similarity, refine=config.x_set != "origin")
        except (propagator.QuadratureResolutionWarning, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            print("hint: raise n_rho / n_lam or shorten the times list", file=sys.stderr)
            return EXIT_FAIL
    with open(out / "decay.csv", "w", newline="") as fh:
        writer = _csv_writer(fh)
        writer.writerow(["t", "sup", "empirical_constant"])
        for t, s, c in zip(study.times, study.sups, study.constants):
            writer.writerow([_fmt(t), _fmt(s), _fmt(c)])
        fh.write(f"# slope={_fmt(study.slope)}\n# d_norm={_fmt(study.d_norm)}\n")
    print(f"slope {study.slope:.4f}, max empirical constant {np.max(study.constants):.4g}")
    return EXIT_OK


def cmd_simulate(config):
    out = prepare_out(config)
    sim = config.sim_config()
    grid = sim.grid
    rotation = 1.0 if sim.rotation_on else 0.0
    snap_dir = out / "snapshots"

    def writer(state, index):
        snap_dir.mkdir(exist_ok=True)
        snapshot.write(snap_dir / f"step_{index:07d}.rweu", snapshot.velocity_snapshot(grid, state.time, velocity_of(state, grid, rotation)))

    result = run_simulation(sim, snapshot_writer=writer)
    with open(out / "diagnostics.csv", "w", newline="") as fh:
        w = _csv_writer(fh)
        w.writerow(DiagnosticsRow.FIELDS)
        for row in result.rows:
            w.writerow([_fmt(v) for v in row.values()])
        if not result.healthy:
            fh.write(f"# unhealthy: stopped after {result.steps} steps\n")
    if result.healthy:
        snapshot.write(out / "final.rweu", snapshot.velocity_snapshot(grid, result.final.time, velocity_of(result.final, grid, rotation)))
        return EXIT_OK
    print(f"run became unhealthy after {result.steps} steps", file=sys.stderr)
    return EXIT_FAIL


LIFESPAN_HEADER = ["eps", "rotation", "seed", "T_star", "censored"]


def cmd_lifespan(config):
    out = prepare_out(config)
    template = config.sim_config()
    rows = lifespan_experiment(config.eps_list, config.seeds, template, config.factor, config.check_stride)
    with open(out / "lifespan.csv", "w", newline="") as fh:
        w = _csv_writer(fh)
        w.writerow(LIFESPAN_HEADER)
        for r in rows:
            w.writerow([_fmt(r.eps), "on" if r.rotation else "off", r.seed, _fmt(r.t_star), _fmt(r.censored)])
    wins, decided = stabilization_votes(rows)
    print(f"rotation-on T* >= rotation-off T* in {wins} of {decided} decided pairs")
    return EXIT_OK


NORMS_HEADER = ["field", "norm_B", "band_k", "band_p", "band_q", "h_s", "h_neg1"]


def cmd_norms(config):
    if not config.snapshot:
        raise UsageError("norms needs a snapshot path")
    try:
        snap = snapshot.read(config.snapshot)
    except (OSError, snapshot.SnapshotError) as exc:
        raise UsageError(f"cannot read snapshot: {exc}") from None
    out = prepare_out(config)
    rows = []
    for name, coeffs in snap.fields.items():
        F = SpectralField(snap.grid, coeffs)
        b_value, band = norm_B(F)
        k, p, q = (band.k, band.p, band.q) if band is not None else ("", "", "")
        rows.append([name, _fmt(b_value), k, p, q, _fmt(norm_sobolev(F, config.hs)), _fmt(norm_Hneg1(F))])
    for target in (sys.stdout, None):
        fh = sys.stdout if target is not None else open(out / "norms.csv", "w", newline="")
        w = _csv_writer(fh)
        w.writerow(NORMS_HEADER)
        w.writerows(rows)
        if target is None:
            fh.close()
    print("# D norm applies to continuum profiles only; see `rotwave decay`", file=sys.stderr)
    return EXIT_OK


COMMANDS = {"verify": cmd_verify, "decay": cmd_decay, "simulate": cmd_simulate, "lifespan": cmd_lifespan, "norms": cmd_norms}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = resolve_config(args)
        return COMMANDS[args.command](config)
    except (cfgmod.ConfigError, UsageError) as exc:
        parser.print_usage(sys.stderr)
        print(f"rotwave {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
