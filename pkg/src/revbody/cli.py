"""Command-line interface.

Exit codes: 0 success, 1 usage or configuration error, 2 numerical failure,
3 invariant-suite failure.  Failures print a JSON error document on stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import io as rio
from .dynamics import FieldKind, VectorField
from .equilibria import Equilibrium, Family, e2_point, equilibria_on_level
from .integrate import Direction, IntegrationError, integrate
from .model import hamiltonian
from .stability import (
    Inconclusive,
    classify,
    empirical_verdict,
    limit_report,
    probe_stability,
    random_direction,
)
from .verify import run_suite

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_SUITE = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _load(args):
    try:
        with open(args.config, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read config: {exc}") from None
    return rio.parse_config(text)


def _require_x0(rc):
    if rc.x0 is None:
        raise UsageError("config has no x0")
    return np.array(rc.x0)


def _emit(text, path):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        rio.write_text(path, text)


def _output(args, rc):
    return args.output if args.output is not None else rc.output_path


def _simulate(rc, x0, t_end=None, direction=None, field="revised"):
    settings = rc.settings
    changes = {}
    if t_end is not None:
        changes["t_end"] = t_end
    if direction is not None:
        changes["direction"] = Direction(direction)
    if changes:
        settings = settings.replace(**changes)
    kind = FieldKind.EPSILON_REVISED if field == "revised" else FieldKind.HAMILTON_POISSON
    return integrate(VectorField(kind, rc.system), x0, settings)


def cmd_simulate(args):
    rc = _load(args)
    traj = _simulate(rc, _require_x0(rc), args.t_end, args.direction, args.field)
    _emit(rio.trajectory_csv(traj), _output(args, rc))
    return EXIT_OK


def cmd_equilibria(args):
    rc = _load(args)
    level = args.level
    if level is None:
        level = hamiltonian(rc.system, _require_x0(rc))
    eqs = equilibria_on_level(rc.system, level)
    doc = rio.document(
        "equilibria",
        {
            "system": rio.system_record(rc.system),
            "level": float(level),
            "equilibria": [rio.equilibrium_record(e) for e in eqs],
        },
    )
    _emit(rio.dumps(doc), _output(args, rc))
    return EXIT_OK


def _classify_row(cfg, eq, args):
    if cfg.epsilon > 0:
        verdict = classify(cfg, eq)
    else:
        verdict = empirical_verdict(
            cfg, eq, delta=args.delta, horizon=args.horizon, n_samples=args.samples, seed=args.seed
        )
    row = {"equilibrium": rio.equilibrium_record(eq), "verdict": rio.verdict_record(verdict)}
    if args.probe:
        try:
            outcome = probe_stability(
                cfg, eq, delta=args.delta, horizon=args.horizon, n_samples=args.samples, seed=args.seed
            ).value
        except Inconclusive:
            outcome = "Inconclusive"
        row["probe"] = outcome
    return row


def cmd_classify(args):
    rc = _load(args)
    cfg = rc.system
    if args.seed is None:
        args.seed = rc.seed
    eqs = []
    if args.include_origin:
        eqs.append(Equilibrium.create(cfg, np.zeros(3), Family.E1))
    eqs.extend(e2_point(cfg, lam) for lam in args.lambdas)
    rows = [_classify_row(cfg, eq, args) for eq in eqs]
    doc = rio.document("classification", {"system": rio.system_record(cfg), "rows": rows})
    _emit(rio.dumps(doc), _output(args, rc))
    return EXIT_OK


def _limits_doc(cfg, x0, horizon):
    report = limit_report(cfg, x0, horizon)
    body = {"system": rio.system_record(cfg), "x0": [float(v) for v in x0], "horizon": float(horizon)}
    body.update(rio.limit_record(report))
    return rio.document("limits", body)


def cmd_limits(args):
    rc = _load(args)
    doc = _limits_doc(rc.system, _require_x0(rc), args.horizon)
    _emit(rio.dumps(doc), _output(args, rc))
    return EXIT_OK


def cmd_verify(args):
    rc = _load(args)
    results = run_suite(rc.system, samples=args.samples, seed=rc.seed)
    failures = 0
    for r in results:
        failures += not r.passed
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}: {r.detail}")
    print(f"{len(results)} checks, {failures} failures")
    return EXIT_OK if failures == 0 else EXIT_SUITE


def _sweep_cell(job):
    index, rc, param, value, mode, delta, horizon, t_end, out_dir = job
    cfg = rc.system
    if param == "epsilon":
        cfg = cfg.with_epsilon(value)
        x0 = _require_x0(rc)
    else:
        x0 = e2_point(cfg, value).point + delta * random_direction(rc.seed, index)
    if mode == "simulate":
        traj = _simulate(rio.RunConfig(cfg, tuple(x0), rc.settings, rc.seed), x0, t_end)
        path = os.path.join(out_dir, f"simulate_{param}_{index:03d}.csv")
        rio.write_text(path, rio.trajectory_csv(traj))
        summary = f"{len(traj)} samples, final={rio.fmt(traj.final_time)}"
    else:
        doc = _limits_doc(cfg, x0, horizon)
        doc[param] = float(value)
        path = os.path.join(out_dir, f"limits_{param}_{index:03d}.json")
        rio.write_text(path, rio.dumps(doc))
        summary = f"d_forward={doc['d_forward']:.3e} d_backward={doc['d_backward']:.3e}"
    return f"{index:03d} {param}={rio.fmt(value)} -> {os.path.basename(path)}: {summary}"


def cmd_sweep(args):
    rc = _load(args)
    if args.param == "epsilon" and rc.x0 is None:
        raise UsageError("epsilon sweeps need x0 in the config")
    os.makedirs(args.out_dir, exist_ok=True)
    jobs = [
        (i, rc, args.param, v, args.mode, args.delta, args.horizon, args.t_end, args.out_dir)
        for i, v in enumerate(args.values)
    ]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            lines = list(pool.map(_sweep_cell, jobs))
    else:
        lines = [_sweep_cell(job) for job in jobs]
    for line in lines:
        print(line)
    return EXIT_OK


def build_parser():
    p = _Parser(prog="revbody", description="Revised rigid body with three linear controls")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--config", required=True, help="run configuration file")
        sp.add_argument("--output", default=None, help="output file (default: stdout or output_path)")

    sp = sub.add_parser("simulate", help="integrate and write a trajectory CSV")
    common(sp)
    sp.add_argument("--t-end", type=float, default=None)
    sp.add_argument("--direction", choices=[d.value for d in Direction], default=None)
    sp.add_argument("--field", choices=["revised", "hamilton-poisson"], default="revised")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("equilibria", help="equilibria on an energy level")
    common(sp)
    sp.add_argument("--level", type=float, default=None, help="energy level k (default H(x0))")
    sp.set_defaults(func=cmd_equilibria)

    sp = sub.add_parser("classify", help="stability verdicts over a lambda grid")
    common(sp)
    sp.add_argument("--lambdas", type=_floats, required=True, help="comma-separated lambda values")
    sp.add_argument("--include-origin", action="store_true")
    sp.add_argument("--probe", action="store_true", help="add the empirical probe outcome")
    sp.add_argument("--delta", type=float, default=1e-3)
    sp.add_argument("--horizon", type=float, default=200.0)
    sp.add_argument("--samples", type=int, default=20)
    sp.add_argument("--seed", type=int, default=None)
    sp.set_defaults(func=cmd_classify)

    sp = sub.add_parser("limits", help="forward/backward limit report")
    common(sp)
    sp.add_argument("--horizon", type=float, default=500.0)
    sp.set_defaults(func=cmd_limits)

    sp = sub.add_parser("verify", help="run the invariant suite")
    common(sp)
    sp.add_argument("--samples", type=int, default=1000)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("sweep", help="repeat simulate/limits over a parameter grid")
    common(sp)
    sp.add_argument("--param", choices=["epsilon", "lambda"], required=True)
    sp.add_argument("--values", type=_floats, required=True)
    sp.add_argument("--mode", choices=["simulate", "limits"], default="simulate")
    sp.add_argument("--out-dir", required=True)
    sp.add_argument("--delta", type=float, default=1e-3, help="perturbation size for lambda sweeps")
    sp.add_argument("--horizon", type=float, default=500.0)
    sp.add_argument("--t-end", type=float, default=None)
    sp.add_argument("--jobs", type=int, default=1)
    sp.set_defaults(func=cmd_sweep)
    return p


def _fail(code, exc):
    doc = {"schema": rio.SCHEMA_VERSION, "error": type(exc).__name__, "message": str(exc)}
    sys.stderr.write(json.dumps(doc) + "\n")
    return code


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except (UsageError, rio.ParseError, rio.InvariantViolation, OSError) as exc:
        return _fail(EXIT_USAGE, exc)
    except (IntegrationError, Inconclusive, ArithmeticError, ValueError) as exc:
        return _fail(EXIT_NUMERIC, exc)


if __name__ == "__main__":
    sys.exit(main())
