"""Command-line entry point: ``matdyn <subcommand> --config <path> [--out DIR] [--workers N]``."""
from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from .config import ExperimentConfig, load_config
from .equilibria import equilibrium_catalog
from .exceptions import ConfigError, MatdynError
from .integrate import integrate
from .model import ControlSettings, Variant
from .output import (COLUMN_DOC, write_basins, write_bifurcation, write_csv, write_equilibria,
                     write_thresholds, write_trajectory)
from .phase import GridSpec, basin_grid, bifurcation_curve, comparison_census
from .repro import REPRO, run_repro
from .svg import Figure
from .thresholds import threshold_sweep, yp_double_star

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2
SUBCOMMANDS = ("simulate", "equilibria", "thresholds", "bifurcation", "basins", "verify-bounds", "repro")


class NumericalFailure(MatdynError):
    """A run finished but its result failed a check."""


def _simulate(cfg: ExperimentConfig, out: Path, workers: int):
    o = cfg.options
    c = cfg.control
    default = "full_control" if (c.Y_P > 0 or c.alpha > 0) else "full_no_control"
    variant = Variant(o.get("variant", default))
    s0 = np.asarray(o.get("initial_state", [100.0, 100.0, 100.0, 100.0]))
    t_eval = np.linspace(0.0, cfg.solver.t_end, o["n_samples"]) if "n_samples" in o else None
    tr = integrate(variant, cfg.parameters, c, s0, cfg.solver, t_eval=t_eval)
    write_trajectory(out / "trajectory.csv", cfg.parameters, c, tr)
    if o.get("plots", True):
        fig = Figure(f"{variant.value}", "t (days)", "population")
        for k, name in enumerate("IYFM"):
            fig.line(tr.times, tr.states[:, k], label=name)
        fig.save(out / "trajectory.svg")
    print(f"final state {tuple(round(float(v), 6) for v in tr.final)}; "
          f"{tr.step_stats['accepted']} steps, {len(tr.crossings)} regime crossings")


def _equilibria(cfg, out, workers):
    cat = equilibrium_catalog(cfg.parameters, cfg.control)
    write_equilibria(out / "equilibria.csv", cat)
    print(f"case {cat.case}, consistent={cat.consistent}")
    for e in cat.equilibria:
        print(f"  {e.label:10s} {tuple(round(v, 4) for v in e.state)} {e.stability.value}"
              f"{'' if e.admissible else ' (inadmissible)'}")
    for w in cat.warnings:
        print(f"warning: {w}")


def _thresholds(cfg, out, workers):
    reps = threshold_sweep(cfg.parameters, cfg.options.get("alpha_grid", [0.0, 0.1]), workers=workers)
    write_thresholds(out / "thresholds.csv", reps)
    for r in reps:
        print(f"alpha={r.alpha:g}: Y_P*={r.yp_star}, Y_P**={r.yp_dstar}, tilde={r.yp_dstar_tilde}"
              + (f" [{r.error}]" if r.error else ""))
    failed = [r for r in reps if not r.ok]
    if failed:
        raise NumericalFailure(f"{len(failed)} of {len(reps)} threshold rows failed")


def _bifurcation(cfg, out, workers):
    alpha = cfg.control.alpha
    grid = cfg.options.get("yp_grid")
    if grid is not None and any(b <= a for a, b in zip(grid, grid[1:])):
        raise ConfigError("options/yp_grid must be strictly ascending")
    if grid is None:
        yd, _ = yp_double_star(cfg.parameters, alpha)
        grid = np.linspace(0.0, 1.05 * yd, 201)[1:]
    curve = bifurcation_curve(cfg.parameters, alpha, grid)
    write_bifurcation(out / "bifurcation.csv", curve)
    if cfg.options.get("plots", True):
        fig = Figure(f"Bifurcation diagram, alpha = {alpha:g}", "Y_P", "Y+F")
        for lab in sorted({r[1] for r in curve.rows}):
            pts = [(r[0], r[2]) for r in curve.rows if r[1] == lab]
            x, y = zip(*pts)
            fig.line(x, y, label=lab, dashed=lab == "EE_MD1")
        fig.save(out / "bifurcation.svg")
    print(f"{len(curve.rows)} rows; Y_P* = {curve.yp_star}, Y_P** = {curve.yp_dstar}")


def _basins(cfg, out, workers):
    o = cfg.options
    keys = ("x_axis", "y_axis", "x_range", "y_range", "nx", "ny")
    try:
        spec = GridSpec(**{k: tuple(o[k]) if k.endswith("range") else o[k] for k in keys if k in o})
    except ValueError as exc:
        raise ConfigError(f"options: {exc}") from exc
    g = basin_grid(cfg.parameters, cfg.control, spec, cfg.solver, workers=workers)
    write_basins(out / "basins.csv", g)
    if o.get("plots", True):
        fig = Figure(f"Basins, Y_P = {cfg.control.Y_P:g}, alpha = {cfg.control.alpha:g}",
                     spec.x_axis, spec.y_axis)
        for lab in sorted(g.counts):
            m = g.labels == lab
            fig.scatter(g.X[m], g.Y[m], label=lab, size=2)
        fig.save(out / "basins.svg")
    print(f"counts {g.counts}; nonconvergent fraction {g.nonconvergent_fraction:.4f}")
    if g.nonconvergent_fraction > 0:
        raise NumericalFailure("some cells did not converge within t_end")


def _verify_bounds(cfg, out, workers):
    S0 = cfg.options.get("initial_states", [[500.0, 200.0, 700.0, 800.0]])
    reps = comparison_census(cfg.parameters, cfg.control, S0, cfg.solver.t_end)
    rows = [(k, r.holds, r.max_excess, *(r.first_violation or (None, None))) for k, r in enumerate(reps)]
    write_csv(out / "bounds.csv", ("ic", "holds", "max_excess", "violation_t", "violation_component"), rows)
    bad = [k for k, r in enumerate(reps) if not r.holds]
    print(f"bound holds on {len(reps) - len(bad)} of {len(reps)} initial states")
    if bad:
        raise NumericalFailure(f"comparison bound violated for initial states {bad}")


RUNNERS = {
    "simulate": _simulate,
    "equilibria": _equilibria,
    "thresholds": _thresholds,
    "bifurcation": _bifurcation,
    "basins": _basins,
    "verify-bounds": _verify_bounds,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="matdyn",
        description="Pest population model under mating disruption and trapping.",
        epilog=COLUMN_DOC,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name, epilog=COLUMN_DOC, formatter_class=argparse.RawDescriptionHelpFormatter)
        if name == "repro":
            sp.add_argument("id", help=f"experiment id: {', '.join(REPRO)}")
        sp.add_argument("--config", type=Path, help="JSON config; omitted blocks take the default values")
        sp.add_argument("--out", type=Path, default=Path("results"), help="output directory (default: results)")
        sp.add_argument("--workers", type=int, default=os.cpu_count() or 1,
                        help="worker processes for basins and sweeps (default: CPU count)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else ExperimentConfig()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if cfg.experiment is not None and cfg.experiment != args.command:
        print(f"config error: config is for '{cfg.experiment}', not '{args.command}'", file=sys.stderr)
        return EXIT_CONFIG
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    workers = max(1, args.workers)
    marker = out / f"{args.command if args.command != 'repro' else args.id}.failed"
    if marker.exists():
        marker.unlink()
    try:
        if args.command == "repro":
            res = run_repro(args.id, out, workers)
            print(res.report())
            if not res.ok:
                raise NumericalFailure(f"repro {args.id} did not meet its acceptance tolerance")
        else:
            RUNNERS[args.command](cfg, out, workers)
    except KeyError as exc:
        print(f"error: {exc.args[0]}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (MatdynError, ArithmeticError, np.linalg.LinAlgError, ValueError) as exc:
        marker.write_text(f"{type(exc).__name__}: {exc}\n")
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
