"""Command-line entry point: ``maskperc <command> --config FILE``."""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from . import analytic
from .config import AXES, ConfigError, ExperimentSpec, load_config
from .experiment import find_threshold, run_experiment, write_csv
from .simulate import SimulationConfig, run_ensemble, write_trials_csv

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_IO = 0, 1, 2, 3


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="experiment config file")
    common.add_argument("--seed", type=int, help="master seed (overrides sim.master_seed)")
    common.add_argument("--out", help="output CSV path (overrides output.csv)")
    common.add_argument("--workers", type=int, help="worker processes for Monte Carlo trials")
    common.add_argument("--simple-graph", action="store_true",
                        help="drop self-loops and parallel edges from generated networks")
    common.add_argument("--trials", type=int, help="trials per ensemble (overrides sim.trials)")

    p = argparse.ArgumentParser(prog="maskperc", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("solve", parents=[common], help="analytic predictions over the sweep grid")
    sub.add_parser("simulate", parents=[common],
                   help="one Monte Carlo ensemble at the configured point; writes per-trial CSV")
    sw = sub.add_parser("sweep", parents=[common], help="full experiment: CSV plus PNG figure")
    sw.add_argument("--no-plot", action="store_true", help="skip the PNG figure")
    th = sub.add_parser("threshold", parents=[common], help="critical value where R0 = 1")
    th.add_argument("--axis", choices=AXES, help="parameter to solve for (default threshold.axis)")
    th.add_argument("--bracket", nargs=2, type=float, metavar=("LO", "HI"),
                    help="search interval (default threshold.bracket)")
    cm = sub.add_parser("compare-mutation", parents=[common],
                        help="mask-model vs two-strain mutation-model epidemic size")
    cm.add_argument("--check", action="store_true",
                    help="exit 2 unless sizes agree within 0.01 wherever the mask model is subcritical")
    return p


def _spec(args: argparse.Namespace) -> ExperimentSpec:
    spec = load_config(args.config).with_overrides(
        seed=args.seed, out=args.out, workers=args.workers, simple_graph=args.simple_graph)
    if args.trials is not None:
        if args.trials < 0:
            raise ConfigError(["trials must be >= 0"])
        spec = replace(spec, trials=args.trials)
    return spec


def _print_table(rows: list[dict], cols: list[str]) -> None:
    print("\t".join(cols))
    for r in rows:
        print("\t".join(f"{r[c]:.6g}" if isinstance(r[c], float) else str(r[c]) for c in cols))


def cmd_solve(args: argparse.Namespace) -> int:
    spec = replace(_spec(args), trials=0)
    if spec.kind == "threshold":
        spec = replace(spec, scan_grid=())
    result = run_experiment(spec, write=args.out is not None)
    key = ["value", "critical_analytic"] if spec.kind == "threshold" else \
        ["value", "R0", "emerge_masked", "emerge_unmasked", "emerge_mixed", "S1", "S2", "S"]
    _print_table(result.rows, key)
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    spec = _spec(args)
    if spec.trials < 1:
        raise ConfigError(["simulate needs trials >= 1"])
    cfg = SimulationConfig(params=spec.params, trials=spec.trials, cutoff_floor=spec.cutoff_floor,
                           cutoff_fraction=spec.cutoff_fraction, patient_zero=spec.patient_zero,
                           regenerate_network=spec.regenerate_network, master_seed=spec.master_seed,
                           simple_graph=spec.simple_graph, undirected=spec.undirected)
    summary = run_ensemble(cfg, spec.dist, spec.n, workers=spec.workers)
    out = Path(args.out) if args.out else spec.csv.with_name(spec.csv.stem + "_trials.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    write_trials_csv(summary.records, out)
    for k, v in summary.as_dict().items():
        print(f"{k} = {v}")
    print(f"trials_csv = {out}")
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    spec = _spec(args)
    sys.stderr.write(spec.resolved_text())

    def progress(i: int, total: int) -> None:
        sys.stderr.write(f"[{i}/{total}] grid points done\n")

    result = run_experiment(spec, progress=progress)
    print(f"csv = {result.csv_path}")
    if spec.plot and not args.no_plot:
        from .plotting import render
        print(f"figure = {render(result)}")
    return EXIT_OK


def cmd_threshold(args: argparse.Namespace) -> int:
    spec = _spec(args)
    axis = args.axis or spec.threshold_axis
    bracket = tuple(args.bracket) if args.bracket else spec.bracket
    try:
        value = find_threshold(spec, axis, bracket)
    except ValueError as exc:
        raise ConfigError([str(exc)]) from None
    print(f"{axis} = {value:.8g}")
    if args.out:
        row = {**spec.resolved(), "threshold_axis": axis, "bracket_lo": bracket[0],
               "bracket_hi": bracket[1], "critical": value}
        write_csv(args.out, list(row), [row])
    return EXIT_OK


def cmd_compare_mutation(args: argparse.Namespace) -> int:
    spec = replace(_spec(args), kind="mutation_compare")
    result = run_experiment(spec, write=args.out is not None)
    _print_table(result.rows, ["value", "R0", "S", "mut_total", "size_gap"])
    if args.check:
        bad = [r for r in result.rows if r["R0"] <= 1 and abs(r["size_gap"]) > 0.01]
        if bad:
            sys.stderr.write(f"sizes disagree below threshold at {[r['value'] for r in bad]}\n")
            return EXIT_SOLVER
    return EXIT_OK


COMMANDS = {"solve": cmd_solve, "simulate": cmd_simulate, "sweep": cmd_sweep,
            "threshold": cmd_threshold, "compare-mutation": cmd_compare_mutation}


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        for e in exc.errors:
            sys.stderr.write(f"config error: {e}\n")
        return EXIT_CONFIG
    except analytic.SolverError as exc:
        sys.stderr.write(f"solver error: {exc}\n")
        return EXIT_SOLVER
    except OSError as exc:
        sys.stderr.write(f"I/O error: {exc}\n")
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
