"""Command line entry point.

Subcommands::

    run          single trajectory; ledger.csv, snapshots, report.json
    sweep-delta  quasi-stress sweep over the ellipticity shift
    refine-tau   Cauchy study over halved time steps
    contdep      twin runs with perturbed data
    check        the acceptance suite

Without ``--config`` each subcommand starts from its reference scenario.
The exit code is 0 iff every check of the invocation passes.
"""
from __future__ import annotations

import argparse
import csv
import os
import sys

import numpy as np

from . import acceptance, presets
from . import diagnostics as dg
from .config import apply_overrides, dumps, load_config
from .grid import build_mesh, write_snapshot
from .stepper import StepFailure, report_columns, run


def _config(args, default):
    cfg = load_config(args.config) if args.config else default()
    return apply_overrides(cfg, args.override)


def _fmt17(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def write_ledger(path, reports):
    cols = report_columns()
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(cols)
        for r in reports:
            row = r.row()
            wr.writerow([_fmt17(row[c]) for c in cols])


def trajectory_checks(traj) -> dict:
    """Invariant checks applicable to a single run."""
    model, reps = traj.model, traj.reports
    checks = {}
    if model.mu == 0:
        checks["energy_ledger"] = dg.energy_ledger_check(reps, mu=0, tol=1e-8)["ok"]
    else:
        checks["energy_inequality"] = dg.chi_energy_inequality(reps, tol=1e-9)["ok"]
        checks["chi_nonincreasing"] = all(r.chi_nonincreasing for r in reps)
        checks["vi_residual"] = all(r.vi_residual <= 10 * traj.stepper.tol.chi_tol for r in reps)
    checks["chi_converged"] = all(r.chi_converged for r in reps)
    checks["finite"] = all(np.all(np.isfinite([s.w, s.chi])) and np.all(np.isfinite(s.u))
                           for s in traj.states)
    return checks


def cmd_run(args) -> int:
    cfg = _config(args, lambda: presets.reference("reversible"))
    out = args.out or cfg.output.dir
    os.makedirs(out, exist_ok=True)
    every = cfg.output.snapshot_every
    mesh = build_mesh(cfg.mesh.dim, cfg.mesh.extent, cfg.mesh.n)

    def snapshot(state, _rep=None):
        write_snapshot(os.path.join(out, f"fields_k{state.k}.txt"), mesh,
                       {"w": state.w, "chi": state.chi, "u": state.u}, state.t)

    def maybe_snapshot(state, rep):
        if every > 0 and state.k % every == 0:
            snapshot(state)

    try:
        traj = run(cfg, callback=maybe_snapshot)
    except StepFailure as exc:
        print(f"step failed: {exc}", file=sys.stderr)
        return 1
    if every > 0:
        snapshot(traj.states[0])
    snapshot(traj.states[-1])
    write_ledger(os.path.join(out, "ledger.csv"), traj.reports)
    checks = trajectory_checks(traj)
    report = {"experiment": "single_run", "config_hash": cfg.hash(), "scheme": cfg.scheme,
              "steps": len(traj.reports), "checks": checks, "pass": all(checks.values())}
    dg.write_report(os.path.join(out, "report.json"), report)
    with open(os.path.join(out, "config.txt"), "w") as fh:
        fh.write(dumps(cfg))
    return 0 if report["pass"] else 1


def _experiment(args, default, fn) -> int:
    cfg = _config(args, default)
    out = args.out or cfg.output.dir
    os.makedirs(out, exist_ok=True)
    report = fn(cfg)
    dg.write_report(os.path.join(out, "report.json"), report)
    print(f"{report['experiment']}: {'PASS' if report['pass'] else 'FAIL'}")
    return 0 if report["pass"] else 1


def cmd_sweep_delta(args) -> int:
    return _experiment(args, presets.complete_damage, lambda c: dg.delta_sweep(
        c, c.experiment.deltas, c.experiment.chi_thresh, c.experiment.factor))


def cmd_refine_tau(args) -> int:
    return _experiment(args, lambda: presets.reference("irreversible", T=0.02, tau=2e-3),
                       lambda c: dg.tau_refinement(c, c.experiment.levels, c.experiment.min_rate))


def cmd_contdep(args) -> int:
    return _experiment(args, presets.continuous_dependence,
                       lambda c: dg.continuous_dependence_experiment(c, c.experiment.epsilons))


def cmd_check(args) -> int:
    numbers = [int(x) for x in args.only.split(",")] if args.only else None
    results = acceptance.run_all(numbers, seed=args.seed)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        report = {"experiment": "acceptance", "config_hash": None,
                  "table": [{"number": r.number, "name": r.name, "pass": r.passed,
                             "seconds": r.seconds, **r.detail} for r in results],
                  "pass": all(r.passed for r in results)}
        dg.write_report(os.path.join(args.out, "report.json"), report)
    return 0 if all(r.passed for r in results) else 1


COMMANDS = {"run": cmd_run, "sweep-delta": cmd_sweep_delta, "refine-tau": cmd_refine_tau,
            "contdep": cmd_contdep, "check": cmd_check}


def build_parser():
    parser = argparse.ArgumentParser(prog="thermodamage", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int, default=None, help="seed for randomized suites")
        p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                       help="set a config key (repeatable)")
        if name == "check":
            p.add_argument("--only", help="comma separated criterion numbers")
    return parser


def main(args=None) -> int:
    ns = build_parser().parse_args(args)
    try:
        return COMMANDS[ns.command](ns)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
