"""Command-line front end.

    liouville-lab [--tol T] [--critical-tol T] [--seed S] [--out-dir DIR] <command> [options]

Every command prints its JSON result on standard output and writes it, together with any CSV data,
into the output directory (``--out-dir``, else $LIOUVILLE_LAB_OUT_DIR, else ./outputs). Exit codes:
0 on success, 2 for invalid input, 3 for numerical failures and failed confinement or sweep reports.
"""
import argparse
import contextlib
import dataclasses
import json
import logging
import os
import sys
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
import pandas as pd
from omegaconf import OmegaConf
from omegaconf.errors import OmegaConfBaseException
from rich.console import Console
from rich.logging import RichHandler

from src import doubling, emden_fowler, intersections, parabolic, radial_ode, supersolution
from src.config import config
from src.errors import ConfigError, DomainError, Error, NumericalError, ValidationError
from src.exponents import ProblemParams, Regime, classify_regime, exponent_table, singular_amplitude
from src.mesh import snapped
from src.utils import pylogger
from src.utils.instantiators import instantiate_mesh, instantiate_schedule, instantiate_state
from src.utils.io_utils import dumps_json, write_csv, write_json

log = pylogger.ContextLogger(__name__)

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3


@dataclasses.dataclass
class InitialConfig:
    kind: str = "zero"
    lam: float = 1.0
    fraction: float = 1.0
    cap: Optional[float] = None
    factor: float = 1.0
    path: Optional[str] = None


@dataclasses.dataclass
class BoundaryConfig:
    kind: str = "zero"
    lam: float = 1.0
    fraction: float = 1.0
    value: float = 0.0


@dataclasses.dataclass
class ScheduleConfig:
    lam_start: float = 2.0
    lam_end: float = 0.01
    count: int = 41


@dataclasses.dataclass
class EvolveRunConfig:
    dim: int = 3
    p: float = 5.0
    R: float = 5.0
    inner: float = 0.0
    mesh_nodes: int = 257
    initial: InitialConfig = dataclasses.field(default_factory=InitialConfig)
    boundary: BoundaryConfig = dataclasses.field(default_factory=BoundaryConfig)
    horizon: float = 1.0
    checkpoints: int = 11
    ceiling: float = 1e6
    dt: Optional[float] = None
    reaction: bool = True


@dataclasses.dataclass
class SweepRunConfig:
    dim: int = 3
    p: float = 5.0
    R: float = 20.0
    mesh_nodes: int = 257
    initial: InitialConfig = dataclasses.field(default_factory=InitialConfig)
    boundary: BoundaryConfig = dataclasses.field(default_factory=lambda: BoundaryConfig(kind="schedule"))
    schedule: ScheduleConfig = dataclasses.field(default_factory=ScheduleConfig)
    horizon: float = 200.0
    delaunay_min: Optional[float] = None


def load_run_config(path: Path, schema: type):
    """Merges a JSON run file into the structured schema; unknown keys and bad types are rejected."""
    try:
        document = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as ex:
        raise ConfigError(f"cannot read run config {path}: {ex}") from ex
    if not isinstance(document, dict):
        raise ConfigError(f"run config {path} must hold a JSON object")
    try:
        return OmegaConf.merge(OmegaConf.structured(schema), document)
    except OmegaConfBaseException as ex:
        raise ConfigError(f"invalid run config {path}: {ex}") from ex


def _out_dir(args) -> Path:
    if args.out_dir:
        return Path(args.out_dir)
    return Path(os.environ.get(config.cli.out_dir_env) or config.cli.default_out_dir)


def _emit(args, name: str, result, frame: Optional[pd.DataFrame] = None) -> None:
    out = _out_dir(args)
    if frame is not None:
        write_csv(out / f"{name}.csv", frame)
    write_json(out / f"{name}.json", result)
    sys.stdout.write(dumps_json(result))


def cmd_exponents(args) -> int:
    result = exponent_table(args.dim).to_json()
    if args.p is not None:
        params = ProblemParams(N=args.dim, p=args.p)
        regime = classify_regime(params)
        result["p"] = params.p
        result["regime"] = regime.value
        if regime != Regime.BELOW_SERRIN:
            result["L"] = singular_amplitude(params)
    _emit(args, "exponents", result)
    return EXIT_OK


def cmd_shoot(args) -> int:
    profile = radial_ode.integrate_regular(ProblemParams(N=args.dim, p=args.p), args.rmax)
    if args.lam != 1.0:
        profile = radial_ode.rescale_profile(profile, args.lam)
    frame = pd.DataFrame({"r": profile.grid, "value": profile.values, "derivative": profile.derivatives})
    result = {
        "N": args.dim,
        "p": args.p,
        "lambda": args.lam,
        "r_max": profile.r_max,
        "first_root": profile.first_root,
        "error_estimate": profile.error_estimate,
    }
    _emit(args, "shoot", result, frame)
    return EXIT_OK


def _delaunay_for(N: int, min_value: float) -> emden_fowler.DelaunayParams:
    if np.isclose(min_value, emden_fowler.equilibrium(N), rtol=1e-12, atol=0.0):
        return emden_fowler.constant_orbit(N)
    return emden_fowler.periodic_orbit(N, min_value)


def cmd_intersections(args) -> int:
    params = ProblemParams(N=args.dim, p=args.p)
    if args.delaunay_min is None:
        result = intersections.regime_intersection_census(params, args.rmax).to_json()
    else:
        if args.lam is None:
            raise DomainError("--delaunay-min needs --lambda")
        d = _delaunay_for(args.dim, args.delaunay_min)
        barrier = supersolution.build_z_lambda_delaunay(args.dim, d, args.lam)
        found = intersections.radial_intersections(
            barrier.inner, intersections.RadialFunction.delaunay(d), (config.intersections.origin_offset, args.rmax)
        )
        result = found.to_json()
        result.update({"N": args.dim, "p": params.p, "regime": classify_regime(params).value, "tau_lambda": barrier.junction})
        result["consistent"] = bool(found.count) and np.isclose(found.radii[0], barrier.junction, rtol=1e-8)
    _emit(args, "intersections", result)
    return EXIT_OK


def cmd_census(args) -> int:
    pairs = []
    for item in args.pairs.split(","):
        try:
            N, p = item.split(":")
            pairs.append((int(N), float(p)))
        except ValueError as ex:
            raise ConfigError(f"cannot parse pair {item!r}; use N:p") from ex
    frame = intersections.census_grid(pairs, args.rmax)
    _emit(args, "census", {"R": args.rmax, "rows": frame.to_dict(orient="records")}, frame)
    return EXIT_OK


def cmd_delaunay(args) -> int:
    d = _delaunay_for(args.dim, args.min_value)
    samples = config.emden_fowler.samples_per_period * args.periods
    t = np.linspace(0.0, args.periods * d.period, samples + 1)
    v, v_prime = d.h(t)
    result = {
        "N": args.dim,
        "min_value": d.min_value,
        "period": d.period,
        "energy": d.orbit.energy,
        "v_star": emden_fowler.equilibrium(args.dim),
        "energy_drift": d.orbit.energy_drift(),
    }
    _emit(args, "delaunay", result, pd.DataFrame({"t": t, "v": v, "v_prime": v_prime}))
    return EXIT_OK


def cmd_heteroclinic(args) -> int:
    params = ProblemParams(N=args.dim, p=args.p)
    orbit = emden_fowler.heteroclinic_subcritical(params)
    result = {
        "N": args.dim,
        "p": params.p,
        "L": singular_amplitude(params),
        "backward_limit": orbit.backward_limit,
        "decay_rate": orbit.decay_rate,
        "expected_decay_rate": args.dim - 2.0 - params.self_similar_exponent,
    }
    _emit(args, "heteroclinic", result, pd.DataFrame({"t": orbit.t_grid, "v": orbit.v, "v_prime": orbit.v_prime}))
    return EXIT_OK


def cmd_supersolution(args) -> int:
    params = ProblemParams(N=args.dim, p=args.p)
    if args.delaunay_min is None:
        barrier = supersolution.build_z_lambda(params, args.lam)
    else:
        barrier = supersolution.build_z_lambda_delaunay(args.dim, _delaunay_for(args.dim, args.delaunay_min), args.lam)
    rmax = args.rmax if args.rmax is not None else 4.0 * barrier.junction
    r = np.union1d(np.linspace(0.0, rmax, 1001), [barrier.junction])
    result = barrier.to_json()
    if args.mesh_h is not None:
        mesh = snapped(args.dim, 0.0, rmax, args.mesh_h, barrier.junction)
        result.update(supersolution.discrete_supersolution_residual(barrier, mesh).to_json())
    frame = pd.DataFrame({"r": r, "z": barrier(r), "z_prime": barrier.derivative(r)})
    _emit(args, "supersolution", result, frame)
    return EXIT_OK


def cmd_evolve(args) -> int:
    run = load_run_config(args.config, EvolveRunConfig)
    params = ProblemParams(N=run.dim, p=run.p)
    mesh = instantiate_mesh({"R": run.R, "inner": run.inner, "nodes": run.mesh_nodes}, params.N)
    state = instantiate_state(params, mesh, run.initial, run.boundary, reaction=run.reaction)
    trajectory = parabolic.evolve(
        state, run.horizon, dt="auto" if run.dt is None else run.dt, checkpoints=run.checkpoints, ceiling=run.ceiling
    )
    _emit(args, "evolve", trajectory.to_json(), trajectory.to_frame())
    return EXIT_OK


def cmd_sweep(args) -> int:
    run = load_run_config(args.config, SweepRunConfig)
    params = ProblemParams(N=run.dim, p=run.p)
    mesh = instantiate_mesh({"R": run.R, "nodes": run.mesh_nodes}, params.N)
    state = instantiate_state(params, mesh, run.initial)
    schedule = instantiate_schedule({**OmegaConf.to_container(run.schedule), "horizon": run.horizon})
    delaunay = None if run.delaunay_min is None else _delaunay_for(run.dim, run.delaunay_min)
    report = parabolic.sweep(state, schedule, boundary=run.boundary.kind, delaunay=delaunay)
    _emit(args, "sweep", report.to_json(), report.trajectory.to_frame())
    return EXIT_OK if report.completed else EXIT_NUMERICAL


def cmd_doubling(args) -> int:
    rng = np.random.default_rng(args.seed)
    out = _out_dir(args)
    if args.input is not None:
        try:
            document = json.loads(Path(args.input).read_text())
        except (OSError, json.JSONDecodeError) as ex:
            raise ConfigError(f"cannot read {args.input}: {ex}") from ex
        space, M = doubling.load_space(document)
    else:
        space = doubling.random_space(args.random, args.space_dim, rng)
        M = doubling.random_weights(space.size, rng)
        write_json(out / "space.json", {"points": space.points, "dist": space.dist, "M": M.values})
    y = args.y if args.y is not None else space.points[int(np.argmin(M.values))]
    if y not in space.points and isinstance(y, str) and y.isdigit():
        y = int(y)
    result = doubling.doubling_point(space, M, y, args.k)
    report = result.to_json()
    report["verified"] = doubling.verify_doubling(space, M, y, args.k, result.index)
    _emit(args, "doubling", report)
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="liouville-lab", description="Radial steady states, barriers and sweeps")
    parser.add_argument("--tol", type=float, default=None, help="relative tolerance of the radial integrator")
    parser.add_argument("--critical-tol", type=float, default=None, help="relative tolerance of the p = p_S test")
    parser.add_argument("--seed", type=int, default=0, help="seed of the random generator")
    parser.add_argument("--out-dir", default=None, help=f"output directory (default ${config.cli.out_dir_env} or ./outputs)")
    parser.add_argument("--verbose", "-v", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, fn: Callable, help: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help)
        p.set_defaults(func=fn)
        return p

    p = add("exponents", cmd_exponents, "critical exponents of a dimension")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--p", type=float, default=None)

    p = add("shoot", cmd_shoot, "regular radial profile φ_λ")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--rmax", type=float, required=True)

    p = add("intersections", cmd_intersections, "intersections with the singular solution")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--rmax", type=float, default=100.0)
    p.add_argument("--delaunay-min", type=float, default=None)
    p.add_argument("--lambda", dest="lam", type=float, default=None)

    p = add("census", cmd_census, "intersection census over (N, p) pairs")
    p.add_argument("--pairs", required=True, help="comma separated N:p pairs")
    p.add_argument("--rmax", type=float, default=100.0)

    p = add("delaunay", cmd_delaunay, "periodic orbit of the critical cylinder equation")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--min-value", type=float, required=True)
    p.add_argument("--periods", type=int, default=1)

    p = add("heteroclinic", cmd_heteroclinic, "heteroclinic orbit for p_sg < p < p_S")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--p", type=float, required=True)

    p = add("supersolution", cmd_supersolution, "piecewise barrier z_λ")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--delaunay-min", type=float, default=None)
    p.add_argument("--mesh-h", type=float, default=None)
    p.add_argument("--rmax", type=float, default=None)

    p = add("evolve", cmd_evolve, "evolve the parabolic problem from a run config")
    p.add_argument("--config", type=Path, required=True)

    p = add("sweep", cmd_sweep, "sweep the barrier family along a schedule")
    p.add_argument("--config", type=Path, required=True)

    p = add("doubling", cmd_doubling, "doubling lemma on a finite metric space")
    p.add_argument("--input", type=Path, default=None, help="JSON with points, dist and M")
    p.add_argument("--random", type=int, default=50, help="size of a seeded random space when no input is given")
    p.add_argument("--space-dim", type=int, default=2)
    p.add_argument("--k", type=float, required=True)
    p.add_argument("--y", default=None)
    return parser


@contextlib.contextmanager
def _overrides(args):
    """Applies the global tolerance flags to the shared config for the duration of one command."""
    saved = (config.radial_ode.rel_tol, config.radial_ode.abs_tol, config.exponents.critical_rel_tol)
    try:
        if args.tol is not None:
            if not 0.0 < args.tol <= 1e-3:
                raise ConfigError(f"--tol must lie in (0, 1e-3], got {args.tol}")
            config.radial_ode.rel_tol = args.tol
            config.radial_ode.abs_tol = min(config.radial_ode.abs_tol, args.tol)
        if args.critical_tol is not None:
            if not 0.0 <= args.critical_tol < 1.0:
                raise ConfigError(f"--critical-tol must lie in [0, 1), got {args.critical_tol}")
            config.exponents.critical_rel_tol = args.critical_tol
        yield
    finally:
        config.radial_ode.rel_tol, config.radial_ode.abs_tol, config.exponents.critical_rel_tol = saved


def _report_error(ex: Error) -> None:
    sys.stderr.write(json.dumps({"error": type(ex).__name__, "message": str(ex)}, sort_keys=True) + "\n")


def dispatch(argv: Optional[Sequence[str]] = None) -> int:
    """Runs one command and returns its exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as ex:
        return EXIT_INVALID if ex.code else EXIT_OK

    level = (logging.WARNING, logging.INFO, logging.DEBUG)[min(args.verbose, 2)]
    logging.basicConfig(
        level=level,
        format="%(message)s",
        handlers=[RichHandler(console=Console(stderr=True), show_path=False)],
        force=True,
    )
    try:
        with _overrides(args):
            return args.func(args)
    except ValidationError as ex:
        _report_error(ex)
        return EXIT_INVALID
    except NumericalError as ex:
        _report_error(ex)
        return EXIT_NUMERICAL


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
