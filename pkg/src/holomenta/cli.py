"""Command-line interface: simulate, analyze, check."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import exprlang
from . import symmetry as sym
from .config import ConfigError, SystemConfig
from .geomcore import DirectSumViolation
from .integrate import StepFailure, integrate
from .mechanics import DegenerateForm, MechanicalSystem, ModelError, MPoint, hamiltonian_M
from .systems import NAMES, UnknownBuiltin, builtin

EXIT_OK, EXIT_NOT_CERTIFIED, EXIT_CONFIG, EXIT_INTEGRATION = 0, 1, 2, 3


class UsageError(Exception):
    pass


@dataclass
class Problem:
    """A system to run, from a builtin fixture or a JSON config."""

    name: str
    system: MechanicalSystem
    action: sym.LieAlgebraAction
    chart_box: np.ndarray | None
    sample_points: list[np.ndarray] | None
    q0: np.ndarray | None = None
    v0: np.ndarray | None = None

    def samples(self, count: int, seed: int) -> list[MPoint]:
        rng = np.random.default_rng(seed)
        r = self.system.r
        if self.sample_points:
            qs = [np.asarray(p, dtype=float) for p in self.sample_points]
        elif self.chart_box is not None:
            lo, hi = self.chart_box[:, 0], self.chart_box[:, 1]
            qs = [lo + (hi - lo) * rng.random(lo.size) for _ in range(count)]
        else:
            raise ConfigError("config needs sample_points or chart_box for analysis")
        return [MPoint(q, rng.uniform(-1.0, 1.0, r)) for q in qs]


def _floats(text: str, label: str, size: int) -> np.ndarray:
    try:
        vals = np.array([float(x) for x in text.split(",")], dtype=float)
    except ValueError:
        raise ConfigError(f"{label}: expected comma-separated numbers, got {text!r}") from None
    if vals.size != size:
        raise ConfigError(f"{label}: expected {size} values, got {vals.size}")
    if not np.all(np.isfinite(vals)):
        raise ConfigError(f"{label}: values must be finite")
    return vals


def load_problem(args) -> Problem:
    if args.builtin and args.config:
        raise UsageError("give only one of --builtin and --config")
    if args.builtin:
        try:
            fx = builtin(args.builtin, getattr(args, "complement", None))
        except UnknownBuiltin as exc:
            raise ConfigError(f"{exc}; choose from {', '.join(NAMES)}") from None
        except KeyError as exc:
            raise ConfigError(exc.args[0]) from None
        return Problem(fx.name, fx.system, fx.action, fx.chart_box, None, fx.q0, fx.v0)
    if args.config:
        cfg = SystemConfig.load(args.config)
        system, action = cfg.build()
        box = np.asarray(cfg.chart_box, dtype=float) if cfg.chart_box is not None else None
        points = [np.asarray(p, dtype=float) for p in cfg.sample_points] if cfg.sample_points else None
        if points:
            system.validate(points)
        return Problem(cfg.name, system, action, box, points)
    raise UsageError("one of --builtin or --config is required")


def write_atomic(path: str | Path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _residual_tol() -> float:
    raw = os.environ.get("HOLOMENTA_TOL")
    if raw is None:
        return sym.RESIDUAL_TOL
    try:
        val = float(raw)
    except ValueError:
        raise ConfigError(f"HOLOMENTA_TOL must be a number, got {raw!r}") from None
    if not val > 0:
        raise ConfigError("HOLOMENTA_TOL must be positive")
    return val


# -- simulate ------------------------------------------------------------------


def cmd_simulate(args) -> int:
    prob = load_problem(args)
    n, r = prob.system.n, prob.system.r
    q0 = _floats(args.q0, "--q0", n) if args.q0 else prob.q0
    v0 = _floats(args.v0, "--v0", r) if args.v0 else prob.v0
    if q0 is None or v0 is None:
        raise ConfigError("--q0 and --v0 are required for config systems")
    if not args.t_final > 0:
        raise ConfigError("t_final must be positive")
    if args.n_samples < 2:
        raise ConfigError("--n-samples must be at least 2")
    if args.integrator == "rk4" and args.dt is None:
        raise ConfigError("rk4 requires --dt")
    m0 = MPoint(q0, v0)

    observables: list[tuple[str, Callable[[MPoint], float]]] = []
    if args.observables == "auto":
        if prob.chart_box is None and not prob.sample_points:
            print("holomenta: no sample domain in config; writing no gauge momenta", file=sys.stderr)
        else:
            reports = sym.horizontal_gauge_momenta(
                prob.system,
                prob.action,
                prob.samples(args.samples, args.seed),
                sym.TrajectoryOptions(q0=q0, v0=v0, t_final=args.t_final, tol=args.tol, n_samples=args.n_samples),
                residual_tol=_residual_tol(),
            )
            observables = [(f"f_eta_{i}", rep.observable) for i, rep in enumerate(reports) if rep.verdict == "certified"]

    traj = integrate(
        prob.system,
        m0,
        args.t_final,
        method=args.integrator,
        tol=args.tol,
        dt=args.dt,
        n_samples=args.n_samples,
    )
    header = ["t", *prob.system.coord_names, *(f"v_{j}" for j in range(r)), "energy", *(name for name, _ in observables)]
    lines = [",".join(header)]
    for t, m in zip(traj.times, traj.states):
        row = [t, *m.q, *m.v, hamiltonian_M(prob.system, m), *(fn(m) for _, fn in observables)]
        lines.append(",".join(format(float(x), ".17g") for x in row))
    text = "\n".join(lines) + "\n"
    if args.out:
        write_atomic(args.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# -- analyze -------------------------------------------------------------------


def analysis_report(prob: Problem, n_samples: int, seed: int, residual_tol: float) -> tuple[dict, bool]:
    samples = prob.samples(n_samples, seed)
    qs = [m.q for m in samples]
    dim_ok = all(sym.dimension_assumption(prob.system, prob.action, q) for q in qs)
    report = {
        "dimension_assumption": dim_ok,
        "rank_S": None,
        "vertical_symmetry": None,
        "candidates": [],
        "tolerances": {"residual": residual_tol, "drift": sym.DRIFT_TOL, "subspace_angle": sym.ANGLE_TOL},
        "samples": len(samples),
        "seed": seed,
    }
    if not dim_ok:
        return report, False
    report["rank_S"] = sym.algebra_splitting(prob.system, prob.action, qs[0]).rank_s
    report["vertical_symmetry"] = sym.vertical_symmetry_condition(prob.system, prob.action, qs) if len(qs) > 1 else True
    opts = sym.TrajectoryOptions(q0=prob.q0, v0=prob.v0)
    reps = sym.horizontal_gauge_momenta(prob.system, prob.action, samples, opts, residual_tol=residual_tol)
    report["candidates"] = [r.to_json() for r in reps]
    return report, all(r.verdict == "certified" for r in reps)


def cmd_analyze(args) -> int:
    prob = load_problem(args)
    if args.samples < 2:
        raise ConfigError("--samples must be at least 2")
    report, ok = analysis_report(prob, args.samples, args.seed, _residual_tol())
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if args.report:
        write_atomic(args.report, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK if ok else EXIT_NOT_CERTIFIED


# -- check ---------------------------------------------------------------------


def cmd_check(args) -> int:
    from .checks import run_all

    try:
        fx = builtin(args.builtin, args.complement)
    except UnknownBuiltin as exc:
        raise ConfigError(f"{exc}; choose from {', '.join(NAMES)}") from None
    except KeyError as exc:
        raise ConfigError(exc.args[0]) from None
    results = run_all(fx, n_states=args.states, seed=args.seed)
    print(f"check {fx.name} (complement {fx.complement})")
    for res in results:
        print(res.line())
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} passed")
    return EXIT_OK if failed == 0 else EXIT_NOT_CERTIFIED


# -- entry point ---------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="holomenta", description="Nonholonomic systems with symmetry: simulate and find gauge momenta.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def source(p, config=True):
        p.add_argument("--builtin", help=f"one of {', '.join(NAMES)}")
        if config:
            p.add_argument("--config", help="JSON system definition")
        p.add_argument("--complement", help="named vertical complement of a builtin (particle: Wz, Wrescaled)")

    sim = sub.add_parser("simulate", help="integrate the nonholonomic dynamics and write CSV")
    source(sim)
    sim.add_argument("--q0")
    sim.add_argument("--v0")
    sim.add_argument("--t-final", type=float, default=10.0)
    step = sim.add_mutually_exclusive_group()
    step.add_argument("--dt", type=float)
    step.add_argument("--tol", type=float, default=1e-10)
    sim.add_argument("--integrator", choices=("rk4", "rk45"), default="rk45")
    sim.add_argument("--n-samples", type=int, default=201)
    sim.add_argument("--observables", choices=("auto", "none"), default="auto")
    sim.add_argument("--samples", type=int, default=50, help="states used to certify observables in auto mode")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out")
    sim.set_defaults(func=cmd_simulate)

    ana = sub.add_parser("analyze", help="search for horizontal gauge momenta and write a JSON report")
    source(ana)
    ana.add_argument("--samples", type=int, default=50)
    ana.add_argument("--seed", type=int, default=0)
    ana.add_argument("--report")
    ana.set_defaults(func=cmd_analyze)

    chk = sub.add_parser("check", help="run the invariant and drift suite of a builtin")
    chk.add_argument("--builtin", required=True, help=f"one of {', '.join(NAMES)}")
    chk.add_argument("--complement")
    chk.add_argument("--states", type=int, default=100)
    chk.add_argument("--seed", type=int, default=0)
    chk.set_defaults(func=cmd_check)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"holomenta: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, ConfigError, exprlang.ParseError, exprlang.EvaluationError, ModelError) as exc:
        print(f"holomenta: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (sym.SplitFailure, sym.DimensionAssumptionFailure, DirectSumViolation, DegenerateForm) as exc:
        print(f"holomenta: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StepFailure as exc:
        print(f"holomenta: integration failed: {exc}", file=sys.stderr)
        return EXIT_INTEGRATION


if __name__ == "__main__":
    sys.exit(main())
