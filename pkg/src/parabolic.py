"""Monotone radial solver for u_t = Δu + |u|^{p-1}u on a ball or an annulus.

The spatial operator is the vertex-centred finite-volume Laplacian of ``RadialMesh``; time stepping
is forward Euler. With a_i, b_i the weights of the two neighbours at node i, the update

    u_i <- u_i + dt (a_i (u_{i+1} - u_i) + b_i (u_{i-1} - u_i) + |u_i|^{p-1} u_i)

is order-preserving as long as dt (a_i + b_i) <= 1 at every updated node, because the reaction is
nondecreasing in u. ``step`` enforces the stricter bound dt (max_i (a_i + b_i) + p U^{p-1}) <= 1,
with U the sup norm, which also keeps a single explicit step from overshooting the reaction.
"""
import dataclasses
import math
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from tqdm import tqdm

from src.config import config
from src.emden_fowler import DelaunayParams
from src.errors import DomainError, StepError
from src.exponents import ProblemParams
from src.mesh import RadialMesh
from src.radial_ode import odd_power
from src.supersolution import PiecewiseBarrier, barrier_family
from src.utils import pylogger

log = pylogger.ContextLogger(__name__)

SWEEP_LABEL = "truncated-domain demonstration"


@dataclasses.dataclass(frozen=True)
class ConstantBoundary:
    value: float = 0.0

    def __call__(self, t: float) -> float:
        return self.value


@dataclasses.dataclass(frozen=True)
class TabulatedBoundary:
    """Piecewise-linear boundary data through (times, values); constant outside the table."""

    times: np.ndarray
    values: np.ndarray

    def __call__(self, t: float) -> float:
        return float(np.interp(t, self.times, self.values))


def _negated(fn: Optional[Callable[[float], float]]):
    if fn is None:
        return None
    if isinstance(fn, ConstantBoundary):
        return ConstantBoundary(-fn.value)
    return lambda t: -fn(t)


@dataclasses.dataclass(frozen=True)
class ParabolicState:
    """Nodal values of u at one time, with the Dirichlet data the run is driven by.

    ``boundary`` gives u(R, t); annulus meshes also need ``inner_boundary`` for u(inner, t). With
    ``reaction=False`` the solver integrates the heat equation; ``source(r, t)`` adds a forcing term.
    Both are diagnostic modes.
    """

    params: ProblemParams
    mesh: RadialMesh
    time: float
    values: np.ndarray
    boundary: Callable[[float], float] = ConstantBoundary(0.0)
    inner_boundary: Optional[Callable[[float], float]] = None
    reaction: bool = True
    source: Optional[Callable[[np.ndarray, float], np.ndarray]] = None

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != self.mesh.nodes.shape:
            raise DomainError(f"state has {values.size} values for a mesh of {self.mesh.size} nodes")
        if not np.all(np.isfinite(values)):
            raise DomainError("state values must be finite")
        if self.mesh.N != self.params.N:
            raise DomainError(f"mesh dimension {self.mesh.N} does not match N={self.params.N}")
        if not self.mesh.is_ball and self.inner_boundary is None:
            raise DomainError("an annulus state needs inner boundary data")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "time", float(self.time))

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def negated(self) -> "ParabolicState":
        """-u with negated boundary data and source."""
        source = self.source
        return dataclasses.replace(
            self,
            values=-self.values,
            boundary=_negated(self.boundary),
            inner_boundary=_negated(self.inner_boundary),
            source=None if source is None else (lambda r, t: -source(r, t)),
        )


def sampled_state(
    params: ProblemParams,
    mesh: RadialMesh,
    fn: Callable[[np.ndarray], np.ndarray],
    boundary: Optional[Callable[[float], float]] = None,
    inner_boundary: Optional[Callable[[float], float]] = None,
    time: float = 0.0,
    **kwargs,
) -> ParabolicState:
    """A state with values fn(nodes); the boundary defaults to the sampled end values, held constant."""
    values = np.asarray(fn(mesh.nodes), dtype=float) * np.ones(mesh.size)
    if boundary is None:
        boundary = ConstantBoundary(float(values[-1]))
    if inner_boundary is None and not mesh.is_ball:
        inner_boundary = ConstantBoundary(float(values[0]))
    return ParabolicState(
        params=params,
        mesh=mesh,
        time=time,
        values=values,
        boundary=boundary,
        inner_boundary=inner_boundary,
        **kwargs,
    )


def _stability_number(mesh: RadialMesh, sup: float, p: float, reaction: bool) -> float:
    upper, lower = mesh.coefficients
    active = mesh.active
    number = float(np.max(upper[active] + lower[active]))
    if reaction:
        number += p * sup ** (p - 1.0)
    return number


def max_stable_dt(state: ParabolicState) -> float:
    """Largest dt for which the forward Euler step is monotone."""
    return 1.0 / _stability_number(state.mesh, state.sup_norm, state.params.p, state.reaction)


def _rate(state: ParabolicState, values: np.ndarray, t: float) -> np.ndarray:
    upper, lower = state.mesh.coefficients
    rate = np.zeros_like(values)
    diff = np.diff(values)
    rate[:-1] += upper[:-1] * diff
    rate[1:] -= lower[1:] * diff
    if state.reaction:
        rate += odd_power(values, state.params.p)
    if state.source is not None:
        rate += state.source(state.mesh.nodes, t)
    return rate


def _advance(state: ParabolicState, values: np.ndarray, t: float, dt: float) -> np.ndarray:
    new = values + dt * _rate(state, values, t)
    new[-1] = state.boundary(t + dt)
    if not state.mesh.is_ball:
        new[0] = state.inner_boundary(t + dt)
    return new


def _check_dt(dt: float, number: float) -> None:
    if not dt > 0.0:
        raise StepError(f"time step must be positive, got {dt}")
    if dt * number > 1.0 + 1e-12:
        raise StepError(f"dt={dt:.6g} violates the monotonicity bound dt <= {1.0 / number:.6g}")


def step(state: ParabolicState, dt: float) -> ParabolicState:
    """One forward Euler step of size ``dt``.

    Raises:
        StepError: if dt breaks the monotonicity restriction.
    """
    _check_dt(dt, _stability_number(state.mesh, state.sup_norm, state.params.p, state.reaction))
    values = _advance(state, state.values, state.time, dt)
    return dataclasses.replace(state, time=state.time + dt, values=values)


@dataclasses.dataclass(frozen=True)
class Trajectory:
    """Checkpointed values of one evolution. Runs stopped by the ceiling carry ``blowup_time``."""

    initial: ParabolicState
    times: np.ndarray
    values: np.ndarray
    sup_norms: np.ndarray
    steps: int
    blowup_time: Optional[float] = None

    @property
    def mesh(self) -> RadialMesh:
        return self.initial.mesh

    @property
    def params(self) -> ProblemParams:
        return self.initial.params

    @property
    def blew_up(self) -> bool:
        return self.blowup_time is not None

    def state_at(self, k: int) -> ParabolicState:
        return dataclasses.replace(self.initial, time=float(self.times[k]), values=self.values[k])

    def to_frame(self) -> pd.DataFrame:
        """Long table with columns t, r, u."""
        nodes = self.mesh.nodes
        return pd.DataFrame(
            {
                "t": np.repeat(self.times, nodes.size),
                "r": np.tile(nodes, self.times.size),
                "u": self.values.ravel(),
            }
        )

    def to_json(self) -> dict:
        return {
            "N": self.params.N,
            "p": self.params.p,
            "nodes": self.mesh.size,
            "steps": self.steps,
            "checkpoint_times": self.times,
            "sup_norm_trace": self.sup_norms,
            "blowup_time": self.blowup_time,
        }


def _checkpoint_times(t0: float, horizon: float, checkpoints: Union[None, int, Sequence[float]]) -> np.ndarray:
    if not horizon > 0.0:
        raise DomainError(f"horizon must be positive, got {horizon}")
    if checkpoints is None:
        checkpoints = config.parabolic.checkpoints
    if isinstance(checkpoints, (int, np.integer)):
        if checkpoints < 2:
            raise DomainError("need at least two checkpoints (start and end)")
        return np.linspace(t0, t0 + horizon, int(checkpoints))
    times = np.asarray(checkpoints, dtype=float)
    if times.ndim != 1 or times.size == 0 or np.any(np.diff(times) <= 0.0):
        raise DomainError("checkpoint times must be strictly increasing")
    if times[0] < t0 or times[-1] > t0 + horizon * (1.0 + 1e-12):
        raise DomainError(f"checkpoint times must lie in [{t0}, {t0 + horizon}]")
    return times


def _run(
    states: Sequence[ParabolicState],
    times: np.ndarray,
    dt: Union[str, float],
    ceiling: float,
    progress: bool,
) -> List[Trajectory]:
    """Evolves several states on one mesh with a shared dt sequence, recording them at ``times``."""
    first = states[0]
    mesh, p = first.mesh, first.params.p
    reaction = any(s.reaction for s in states)
    safety = config.parabolic.cfl_safety
    fixed = None if dt == "auto" else float(dt)
    if fixed is not None and not fixed > 0.0:
        raise StepError(f"time step must be positive, got {fixed}")

    values = [s.values.copy() for s in states]
    t = first.time
    records: List[List[np.ndarray]] = [[] for _ in states]
    recorded: List[float] = []
    steps = 0
    blowup_time = None
    rlog = log.bind(N=first.params.N, p=p)

    bar = tqdm(total=float(times[-1] - t), disable=not progress, desc="evolve", unit="t")
    try:
        for target in times:
            while t < target and blowup_time is None:
                sup = max(float(np.max(np.abs(v))) for v in values)
                number = _stability_number(mesh, sup, p, reaction)
                if fixed is None:
                    dt_n = safety / number
                else:
                    _check_dt(fixed, number)
                    dt_n = fixed
                landing = dt_n >= target - t
                if landing:
                    dt_n = target - t
                values = [_advance(s, v, t, dt_n) for s, v in zip(states, values)]
                t = float(target) if landing else t + dt_n
                steps += 1
                bar.update(dt_n)
                sup = max(float(np.max(np.abs(v))) for v in values)
                if not (np.isfinite(sup) and sup <= ceiling):
                    blowup_time = t
                    rlog.info(f"sup norm passed the ceiling {ceiling:g} at t={t:.10g} after {steps} steps")
            if blowup_time is not None:
                break
            recorded.append(float(target))
            for store, v in zip(records, values):
                store.append(v.copy())
    finally:
        bar.close()

    rlog.debug(f"evolved to t={t:.10g} in {steps} steps, {len(recorded)} checkpoints")
    out = []
    for state, store in zip(states, records):
        stacked = np.array(store).reshape(len(store), mesh.size)
        out.append(
            Trajectory(
                initial=state,
                times=np.array(recorded),
                values=stacked,
                sup_norms=np.max(np.abs(stacked), axis=1) if store else np.zeros(0),
                steps=steps,
                blowup_time=blowup_time,
            )
        )
    return out


def evolve(
    initial: ParabolicState,
    horizon: float,
    dt: Union[str, float] = "auto",
    checkpoints: Union[None, int, Sequence[float]] = None,
    ceiling: Optional[float] = None,
    progress: Optional[bool] = None,
) -> Trajectory:
    """Evolves ``initial`` over [t0, t0 + horizon].

    With ``dt="auto"`` each step uses ``cfl_safety`` times the current monotonicity bound; a fixed
    dt is validated at every step (StepError if the growing sup norm makes it inadmissible). Steps
    are shortened to land on checkpoints. A run whose sup norm exceeds ``ceiling`` stops and reports
    ``blowup_time``.
    """
    times = _checkpoint_times(initial.time, horizon, checkpoints)
    ceiling = config.parabolic.ceiling if ceiling is None else float(ceiling)
    progress = config.parabolic.progress if progress is None else progress
    return _run([initial], times, dt, ceiling, progress)[0]


@dataclasses.dataclass(frozen=True)
class ComparisonReport:
    preserved: bool
    max_violation: float
    times: np.ndarray

    def to_json(self) -> dict:
        return {"preserved": self.preserved, "max_violation": self.max_violation, "checkpoint_times": self.times}


def _sample_times(t0: float, horizon: float) -> np.ndarray:
    return np.linspace(t0, t0 + horizon, 201)


def comparison_check(
    u0: ParabolicState,
    v0: ParabolicState,
    horizon: float,
    checkpoints: Union[None, int, Sequence[float]] = None,
) -> ComparisonReport:
    """Evolves u0 <= v0 side by side and reports whether u <= v at every checkpoint.

    Raises:
        DomainError: if the meshes differ, u0 > v0 somewhere, or the boundary data are not ordered.
    """
    if u0.mesh.N != v0.mesh.N or not np.array_equal(u0.mesh.nodes, v0.mesh.nodes):
        raise DomainError("comparison needs both states on the same mesh")
    if u0.params != v0.params or u0.reaction != v0.reaction or u0.time != v0.time:
        raise DomainError("comparison needs the same equation and starting time for both states")
    if np.any(u0.values > v0.values):
        i = int(np.argmax(u0.values - v0.values))
        raise DomainError(f"initial data are not ordered at node {i} (r={u0.mesh.nodes[i]:.10g})")
    samples = _sample_times(u0.time, horizon)
    pairs = [(u0.boundary, v0.boundary)]
    if not u0.mesh.is_ball:
        pairs.append((u0.inner_boundary, v0.inner_boundary))
    for g, h in pairs:
        if any(g(t) > h(t) for t in samples):
            raise DomainError("boundary data are not ordered on the run horizon")
    if u0.source is not None or v0.source is not None:
        if any(np.any(u0.source(u0.mesh.nodes, t) > v0.source(v0.mesh.nodes, t)) for t in samples):
            raise DomainError("source terms are not ordered on the run horizon")

    scale = max(u0.sup_norm, v0.sup_norm) or 1.0
    times = _checkpoint_times(u0.time, horizon, checkpoints)
    u, v = _run([u0, v0], times, "auto", config.parabolic.ceiling, config.parabolic.progress)
    violation = float(max(np.max(u.values - v.values), 0.0)) if u.times.size else 0.0
    preserved = violation <= config.parabolic.order_tol * scale
    log.bind(N=u0.params.N, p=u0.params.p).debug(f"comparison: max violation {violation:.3e} (scale {scale:g})")
    return ComparisonReport(preserved=preserved, max_violation=violation, times=u.times)


@dataclasses.dataclass(frozen=True)
class ConfinementReport:
    """Whether |u| stayed below the barrier; ``failure`` is (time, node, radius, excess) of the first breach."""

    confined: bool
    lam: float
    max_excess: float
    failure: Optional[Tuple[float, int, float, float]]
    trajectory: Trajectory

    def to_json(self) -> dict:
        out = {
            "confined": self.confined,
            "lambda": self.lam,
            "max_excess": self.max_excess,
            "sup_norm_trace": self.trajectory.sup_norms,
            "checkpoint_times": self.trajectory.times,
            "blowup_time": self.trajectory.blowup_time,
        }
        if self.failure is not None:
            t, node, r, excess = self.failure
            out["failure"] = {"time": t, "node": node, "radius": r, "excess": excess}
        return out


def _check_below(values: np.ndarray, z: np.ndarray, what: str) -> None:
    scale = float(np.max(z))
    excess = np.abs(values) - z
    if np.any(excess > config.parabolic.confinement_tol * scale):
        i = int(np.argmax(excess))
        raise DomainError(f"{what} exceeds the barrier at node {i}: |u| - z = {excess[i]:.3e}")


def _check_boundary_below(state: ParabolicState, barrier: PiecewiseBarrier, samples: np.ndarray) -> None:
    mesh = state.mesh
    ends = [(state.boundary, mesh.R)]
    if not mesh.is_ball:
        ends.append((state.inner_boundary, mesh.inner))
    for g, r in ends:
        bound = float(barrier(r)) * (1.0 + config.parabolic.confinement_tol)
        if any(abs(g(t)) > bound for t in samples):
            raise DomainError(f"boundary data at r={r:.10g} exceed the barrier value {bound:.10g}")


def _first_breach(trajectory: Trajectory, barriers: Sequence[np.ndarray]):
    """Largest excess of |u| over the barrier per checkpoint, plus the first breach beyond tolerance."""
    nodes = trajectory.mesh.nodes
    excesses, failure = [], None
    for k, (u, z) in enumerate(zip(trajectory.values, barriers)):
        excess = np.abs(u) - z
        i = int(np.argmax(excess))
        excesses.append(float(excess[i]))
        if failure is None and excess[i] > config.parabolic.confinement_tol * float(np.max(z)):
            failure = (float(trajectory.times[k]), i, float(nodes[i]), float(excess[i]))
    return excesses, failure


def barrier_confinement(
    u0: ParabolicState,
    lambda_star: float,
    horizon: float,
    checkpoints: Union[None, int, Sequence[float]] = None,
    delaunay: Optional[DelaunayParams] = None,
) -> ConfinementReport:
    """Evolves u0 and checks -z <= u <= z at every checkpoint, with z = z_{λ*}.

    Raises:
        DomainError: if |u0| or the boundary data exceed the barrier.
    """
    family = barrier_family(u0.params, delaunay)
    barrier = family(lambda_star)
    z = np.asarray(barrier(u0.mesh.nodes))
    _check_below(u0.values, z, "initial data")
    _check_boundary_below(u0, barrier, _sample_times(u0.time, horizon))

    trajectory = evolve(u0, horizon, checkpoints=checkpoints)
    excesses, failure = _first_breach(trajectory, [z] * trajectory.times.size)
    confined = failure is None and not trajectory.blew_up
    clog = log.bind(N=u0.params.N, p=u0.params.p, lam=lambda_star)
    if confined:
        clog.info(f"confined below z over horizon {horizon:g}")
    else:
        clog.warning(f"confinement failed: {failure if failure else 'blow-up'}")
    return ConfinementReport(
        confined=confined,
        lam=float(lambda_star),
        max_excess=max(excesses) if excesses else 0.0,
        failure=failure,
        trajectory=trajectory,
    )


@dataclasses.dataclass(frozen=True)
class SweepSchedule:
    """Barrier parameters λ_k to reach at checkpoint times t_k; λ̄ = lambdas[0]."""

    lambdas: np.ndarray
    checkpoint_times: np.ndarray

    def __post_init__(self):
        lambdas = np.asarray(self.lambdas, dtype=float)
        times = np.asarray(self.checkpoint_times, dtype=float)
        if lambdas.ndim != 1 or lambdas.shape != times.shape or lambdas.size < 2:
            raise DomainError("a sweep schedule needs matching lambdas and times, at least two of each")
        if np.any(lambdas <= 0.0) or np.any(np.diff(lambdas) >= 0.0):
            raise DomainError("schedule lambdas must be positive and strictly decreasing")
        if np.any(np.diff(times) <= 0.0):
            raise DomainError("schedule times must be strictly increasing")
        object.__setattr__(self, "lambdas", lambdas)
        object.__setattr__(self, "checkpoint_times", times)

    @classmethod
    def geometric(cls, lam_start: float, lam_end: float, count: int, horizon: float, t0: float = 0.0) -> "SweepSchedule":
        return cls(
            lambdas=np.geomspace(lam_start, lam_end, count),
            checkpoint_times=np.linspace(t0, t0 + horizon, count),
        )

    @property
    def horizon(self) -> float:
        return float(self.checkpoint_times[-1] - self.checkpoint_times[0])

    def lam_at(self, t: float) -> float:
        """λ(t), interpolated linearly in log λ between checkpoints."""
        return float(np.exp(np.interp(t, self.checkpoint_times, np.log(self.lambdas))))


@dataclasses.dataclass(frozen=True)
class SweepRecord:
    time: float
    lam: float
    sup_norm: float
    margin: float
    dominated: bool


@dataclasses.dataclass(frozen=True)
class SweepReport:
    completed: bool
    boundary: str
    records: List[SweepRecord]
    initial_sup: float
    final_sup: float
    smallest_dominated_lambda: Optional[float]
    first_failure: Optional[Dict[str, float]]
    trajectory: Trajectory
    label: str = SWEEP_LABEL

    def to_json(self) -> dict:
        return {
            "label": self.label,
            "completed": self.completed,
            "boundary": self.boundary,
            "initial_sup": self.initial_sup,
            "final_sup": self.final_sup,
            "smallest_dominated_lambda": self.smallest_dominated_lambda,
            "first_failure": self.first_failure,
            "blowup_time": self.trajectory.blowup_time,
            "sweep_record": [dataclasses.asdict(r) for r in self.records],
        }


def _schedule_boundary(family, schedule: SweepSchedule, r: float, per_interval: int = 16) -> TabulatedBoundary:
    times = schedule.checkpoint_times
    fine = np.concatenate(
        [np.linspace(a, b, per_interval, endpoint=False) for a, b in zip(times[:-1], times[1:])] + [times[-1:]]
    )
    values = np.array([float(family(schedule.lam_at(t))(r)) for t in fine])
    return TabulatedBoundary(times=fine, values=values)


def sweep(
    u0: ParabolicState,
    schedule: SweepSchedule,
    boundary: str = "schedule",
    delaunay: Optional[DelaunayParams] = None,
    progress: Optional[bool] = None,
) -> SweepReport:
    """Serrin-type sweep: evolve u0 and check |u(·, t_k)| <= z_{λ_k} at each checkpoint.

    ``boundary="schedule"`` drives u(R, t) along z_{λ(t)}(R); ``"zero"`` holds it at 0. The run is
    on a truncated ball and forward in time only, and reports say so.

    Raises:
        DomainError: if |u0| exceeds z_{λ̄}, the schedule starts before u0, or the mesh is an annulus.
    """
    if not u0.mesh.is_ball:
        raise DomainError("sweeps run on a ball")
    if schedule.checkpoint_times[0] < u0.time:
        raise DomainError("the schedule starts before the initial state")
    family = barrier_family(u0.params, delaunay)
    nodes = u0.mesh.nodes
    _check_below(u0.values, np.asarray(family(schedule.lambdas[0])(nodes)), "initial data")

    if boundary == "schedule":
        g = _schedule_boundary(family, schedule, u0.mesh.R)
    elif boundary == "zero":
        g = ConstantBoundary(0.0)
    else:
        raise DomainError(f"unknown sweep boundary {boundary!r}; use 'schedule' or 'zero'")
    state = dataclasses.replace(u0, boundary=g)

    slog = log.bind(N=u0.params.N, p=u0.params.p)
    slog.info(f"{SWEEP_LABEL}: λ {schedule.lambdas[0]:g} -> {schedule.lambdas[-1]:g} over {schedule.horizon:g}")
    horizon = float(schedule.checkpoint_times[-1] - u0.time)
    if horizon > 0.0:
        trajectory = evolve(state, horizon, checkpoints=schedule.checkpoint_times, progress=progress)
    else:
        trajectory = Trajectory(state, schedule.checkpoint_times[:1], u0.values[None, :], np.array([u0.sup_norm]), 0)

    records, first_failure = [], None
    tol = config.parabolic.confinement_tol
    for k in range(trajectory.times.size):
        lam = float(schedule.lambdas[k])
        z = np.asarray(family(lam)(nodes))
        slack = z - np.abs(trajectory.values[k])
        i = int(np.argmin(slack))
        dominated = bool(slack[i] >= -tol * float(np.max(z)))
        records.append(
            SweepRecord(
                time=float(trajectory.times[k]),
                lam=lam,
                sup_norm=float(trajectory.sup_norms[k]),
                margin=float(slack[i]),
                dominated=dominated,
            )
        )
        if not dominated:
            first_failure = {"lambda": lam, "node": i, "radius": float(nodes[i]), "excess": float(-slack[i])}
            slog.warning(f"domination lost at λ={lam:g}, node {i} (r={nodes[i]:.6g})")
            break

    dominated = [r.lam for r in records if r.dominated]
    completed = first_failure is None and not trajectory.blew_up and len(records) == schedule.lambdas.size
    return SweepReport(
        completed=completed,
        boundary=boundary,
        records=records,
        initial_sup=u0.sup_norm,
        final_sup=float(trajectory.sup_norms[-1]) if trajectory.sup_norms.size else u0.sup_norm,
        smallest_dominated_lambda=min(dominated) if dominated else None,
        first_failure=first_failure,
        trajectory=trajectory,
    )


def _checkpoint_index(trajectory: Trajectory, t: float) -> int:
    k = int(np.argmin(np.abs(trajectory.times - t)))
    if trajectory.times.size == 0 or not math.isclose(trajectory.times[k], t, rel_tol=1e-12, abs_tol=1e-12):
        raise DomainError(f"t={t} is not a checkpoint of the trajectory")
    return k


def scaling_residual(trajectory: Trajectory, x0_index: int, t0: float, rho: float) -> float:
    """Scale-free PDE residual of v(y, s) = ρ^{2/(p-1)} u(ρy, t0 + ρ²s) at s = 0.

    v is sampled on the rescaled mesh y_i = r_i / ρ, v_s is a central difference over the
    neighbouring checkpoints and Δ_y is the finite-volume Laplacian of the rescaled mesh. The result
    is max |v_s - Δv - |v|^{p-1}v| / max (|Δv| + |v|^p) over the updated nodes. Only the centre of
    radial symmetry (index 0) can serve as x0.

    Raises:
        DomainError: for x0 other than the centre, ρ <= 0, a source-driven run, or a t0 without
            checkpoints on both sides.
    """
    if x0_index != 0:
        raise DomainError("radial trajectories can only be rescaled about the centre (x0_index=0)")
    if not rho > 0.0:
        raise DomainError(f"rho must be positive, got {rho}")
    if trajectory.initial.source is not None:
        raise DomainError("a source-driven run is not scale invariant")
    k = _checkpoint_index(trajectory, t0)
    if k == 0 or k == trajectory.times.size - 1:
        raise DomainError(f"t0={t0} needs checkpoints on both sides")

    p = trajectory.params.p
    m = 2.0 / (p - 1.0)
    mesh = RadialMesh(N=trajectory.mesh.N, nodes=trajectory.mesh.nodes / rho)
    before, now, after = (rho**m * trajectory.values[j] for j in (k - 1, k, k + 1))
    ds = (trajectory.times[k + 1] - trajectory.times[k - 1]) / rho**2
    v_s = (after - before) / ds

    upper, lower = mesh.coefficients
    laplacian = np.zeros_like(now)
    diff = np.diff(now)
    laplacian[:-1] += upper[:-1] * diff
    laplacian[1:] -= lower[1:] * diff
    reaction = odd_power(now, p) if trajectory.initial.reaction else np.zeros_like(now)

    active = mesh.active
    residual = np.abs(v_s - laplacian - reaction)[active]
    size = (np.abs(laplacian) + np.abs(reaction))[active]
    return float(np.max(residual) / max(float(np.max(size)), np.finfo(float).tiny))


def decay_rate(trajectory: Trajectory, t_a: float, t_b: float) -> float:
    """-ln(sup u(t_b) / sup u(t_a)) / (t_b - t_a) between two checkpoints."""
    a, b = _checkpoint_index(trajectory, t_a), _checkpoint_index(trajectory, t_b)
    if not b > a:
        raise DomainError("decay rate needs t_a < t_b")
    return float(-np.log(trajectory.sup_norms[b] / trajectory.sup_norms[a]) / (trajectory.times[b] - trajectory.times[a]))
