"""Regular radial steady states of u_t = Δu + |u|^{p-1}u.

The regular profile Φ solves

    u'' + (N-1)/r u' + |u|^{p-1} u = 0,    u(0) = 1, u'(0) = 0,

and generates the one-parameter family φ_λ(r) = λ Φ(λ^{(p-1)/2} r).

Integration is done in three pieces:

* a Taylor series on [0, r0] around the coordinate singularity at the origin;
* DOP853 in the radius on [r0, r1];
* DOP853 in cylinder variables on [ln r1, ln r_max]: with m = 2/(p-1), t = ln r and
  v(t) = r^m u(r) the equation becomes autonomous,

      v'' + (N-2-2m) v' - m(N-2-m) v + |v|^{p-1} v = 0,

  and the state integrated is the deviation δ = v - L from the singular level. The singular steady
  state is then an exact fixed point of the discrete flow, so the tiny gaps Φ - φ∞ far out (which
  decide intersection counts) are resolved to relative accuracy.
"""
import dataclasses
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import solve_ivp

from src.config import config
from src.errors import DomainError, IntegrationError, RegimeError
from src.exponents import (
    ProblemParams,
    exponent_table,
    is_critical,
    phi_infinity,
    phi_infinity_derivative,
    serrin_exponent,
    singular_amplitude,
    sobolev_exponent,
)
from src.utils import pylogger

log = pylogger.ContextLogger(__name__)


def odd_power(u, p: float):
    """|u|^{p-1} u, the nonlinearity extended oddly to negative values."""
    return np.abs(u) ** (p - 1.0) * u


@dataclasses.dataclass(frozen=True)
class RadialProfile:
    """A radial function sampled on a grid, with an exact evaluator attached.

    Houses Φ, φ_λ and samples of φ∞. ``lam`` is the family parameter (1 for Φ); ``dense`` evaluates
    values and derivatives anywhere in the computed range; ``gap`` (if present) evaluates the
    difference to φ∞ without cancellation.
    """

    params: ProblemParams
    lam: float
    grid: np.ndarray
    values: np.ndarray
    derivatives: np.ndarray
    r_max: float
    first_root: Optional[float] = None
    error_estimate: float = 0.0
    singular: bool = False
    dense: Callable = dataclasses.field(default=None, compare=False, repr=False)
    gap: Optional[Callable] = dataclasses.field(default=None, compare=False, repr=False)

    def _check_range(self, r: np.ndarray) -> None:
        if np.any(r > self.r_max * (1.0 + 1e-12)):
            raise DomainError(f"radius beyond the computed range r_max={self.r_max}")
        if np.any(r < 0.0) or (self.singular and np.any(r <= 0.0)):
            raise DomainError("radius outside the domain of the profile")

    def evaluate(self, r) -> Tuple[np.ndarray, np.ndarray]:
        r_arr = np.asarray(r, dtype=float)
        self._check_range(r_arr)
        return self.dense(np.minimum(r_arr, self.r_max))

    def __call__(self, r):
        value = self.evaluate(r)[0]
        return float(value) if np.ndim(value) == 0 else value

    def derivative(self, r):
        value = self.evaluate(r)[1]
        return float(value) if np.ndim(value) == 0 else value

    def singular_gap(self, r):
        """u(r) - φ∞(r), computed from the integrated deviation where one is available."""
        r_arr = np.asarray(r, dtype=float)
        self._check_range(r_arr)
        if np.any(r_arr <= 0.0):
            raise DomainError("phi_infinity is singular at r = 0; radii must be positive")
        if self.gap is not None:
            value = self.gap(r_arr)
        else:
            value = self.dense(r_arr)[0] - phi_infinity(self.params, r_arr)
        return float(value) if np.ndim(value) == 0 else value


def series_startup(params: ProblemParams, r):
    """Taylor expansion of Φ about the origin up to O(r^4), with its derivative."""
    N, p = params.N, params.p
    r = np.asarray(r, dtype=float)
    a = -1.0 / (2.0 * N)
    b = p / (8.0 * N * (N + 2.0))
    value = 1.0 + a * r**2 + b * r**4
    derivative = 2.0 * a * r + 4.0 * b * r**3
    return value, derivative


class _RegularSolution:
    """Piecewise evaluator for Φ: series, radial integration, cylinder integration."""

    def __init__(self, params, r0, r1, inner, outer, level):
        self.params = params
        self.r0 = r0
        self.r1 = r1
        self.inner = inner
        self.outer = outer
        self.level = level

    def __call__(self, r: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        scalar = np.ndim(r) == 0
        r = np.atleast_1d(r).astype(float)
        values = np.empty_like(r)
        derivatives = np.empty_like(r)

        near = r <= self.r0
        values[near], derivatives[near] = series_startup(self.params, r[near])

        middle = (r > self.r0) & (r <= self.r1)
        if np.any(middle):
            y = self.inner(r[middle])
            values[middle], derivatives[middle] = y[0], y[1]

        far = r > self.r1
        if np.any(far):
            m = self.params.self_similar_exponent
            delta, delta_prime = self.outer(np.log(r[far]))
            v = self.level + delta
            values[far] = r[far] ** (-m) * v
            derivatives[far] = r[far] ** (-m - 1.0) * (delta_prime - m * v)

        if scalar:
            return values[0], derivatives[0]
        return values, derivatives

    def gap(self, r: np.ndarray) -> np.ndarray:
        scalar = np.ndim(r) == 0
        r = np.atleast_1d(r).astype(float)
        m = self.params.self_similar_exponent
        out = np.empty_like(r)
        far = r > self.r1
        if np.any(far):
            out[far] = r[far] ** (-m) * self.outer(np.log(r[far]))[0]
        if np.any(~far):
            out[~far] = self(r[~far])[0] - phi_infinity(self.params, r[~far])
        return out[0] if scalar else out


def _cylinder_rhs(params: ProblemParams, level: float):
    """Right-hand side for (δ, δ') with δ = v - level."""
    N, p = params.N, params.p
    m = params.self_similar_exponent
    damping = N - 2.0 - 2.0 * m
    stiffness = m * (N - 2.0 - m)
    level_power = odd_power(level, p)

    def rhs(t, y):
        delta, delta_prime = y
        v = level + delta
        if level > 0.0 and v > 0.0:
            # |v|^{p-1}v - level^p without cancellation
            forcing = level_power * np.expm1(p * np.log1p(delta / level))
        else:
            forcing = odd_power(v, p) - level_power
        return [delta_prime, -damping * delta_prime + stiffness * delta - forcing]

    return rhs


def _integrate(params: ProblemParams, r_max: float, rel_tol: float, abs_tol: float):
    settings = config.radial_ode
    N, p = params.N, params.p
    m = params.self_similar_exponent
    r0 = min(settings.startup_radius, r_max)
    r1 = min(max(settings.log_switch_radius, r0), r_max)
    roots = []

    def radial_rhs(r, y):
        return [y[1], -(N - 1.0) / r * y[1] - odd_power(y[0], p)]

    def crossing(r, y):
        return y[0]

    inner = None
    y1 = np.array(series_startup(params, r0))
    if r1 > r0:
        sol = solve_ivp(
            radial_rhs,
            (r0, r1),
            y1,
            method="DOP853",
            rtol=rel_tol,
            atol=abs_tol,
            dense_output=True,
            events=crossing,
        )
        if sol.status == -1:
            raise IntegrationError(f"radial integration failed: {sol.message}", last_radius=float(sol.t[-1]))
        roots.extend(float(x) for x in sol.t_events[0])
        inner = sol.sol
        y1 = sol.y[:, -1]

    outer = None
    level = 0.0
    if r_max > r1:
        try:
            level = singular_amplitude(params)
        except RegimeError:
            level = 0.0
        rhs = _cylinder_rhs(params, level)
        v1 = r1**m * y1[0]
        w1 = r1**m * (m * y1[0] + r1 * y1[1])

        def cylinder_crossing(t, y):
            return level + y[0]

        sol = solve_ivp(
            rhs,
            (np.log(r1), np.log(r_max)),
            [v1 - level, w1],
            method="DOP853",
            rtol=rel_tol,
            atol=abs_tol,
            max_step=settings.log_max_step,
            dense_output=True,
            events=cylinder_crossing,
        )
        if sol.status == -1:
            raise IntegrationError(
                f"cylinder integration failed: {sol.message}", last_radius=float(np.exp(sol.t[-1]))
            )
        roots.extend(float(np.exp(t)) for t in sol.t_events[0])
        outer = sol.sol

    return _RegularSolution(params, r0, r1, inner, outer, level), roots


def integrate_regular(
    params: ProblemParams,
    r_max: float,
    rel_tol: Optional[float] = None,
    abs_tol: Optional[float] = None,
) -> RadialProfile:
    """Integrates the regular profile Φ on [0, r_max].

    :param params: Dimension and exponent.
    :param r_max: Outer radius of the computation.
    :param rel_tol: Relative tolerance of the integrator. Default is ``config.radial_ode.rel_tol``.
    :param abs_tol: Absolute tolerance of the integrator. Default is ``config.radial_ode.abs_tol``.
    :return: The sampled profile, with the first root (if any) and an error estimate obtained from a
        companion run at looser tolerances.
    """
    settings = config.radial_ode
    rel_tol = settings.rel_tol if rel_tol is None else rel_tol
    abs_tol = settings.abs_tol if abs_tol is None else abs_tol
    if not r_max > 0.0:
        raise DomainError(f"r_max must be positive, got {r_max}")
    for name, value in (("rel_tol", rel_tol), ("abs_tol", abs_tol)):
        if not 0.0 < value <= 1e-3:
            raise DomainError(f"{name} must lie in (0, 1e-3], got {value}")

    plog = log.bind(N=params.N, p=params.p)
    solution, roots = _integrate(params, r_max, rel_tol, abs_tol)

    grid = np.linspace(0.0, r_max, settings.grid_points)
    values, derivatives = solution(grid)
    values[0], derivatives[0] = 1.0, 0.0

    factor = settings.error_probe_factor
    probe, _ = _integrate(params, r_max, min(rel_tol * factor, 1e-3), min(abs_tol * factor, 1e-3))
    error_estimate = float(np.max(np.abs(probe(grid)[0] - values)))

    first_root = min(roots) if roots else None
    plog.debug(f"integrated to r_max={r_max:g}, first_root={first_root}, error_estimate={error_estimate:.3e}")

    return RadialProfile(
        params=params,
        lam=1.0,
        grid=grid,
        values=values,
        derivatives=derivatives,
        r_max=float(r_max),
        first_root=first_root,
        error_estimate=error_estimate,
        dense=solution,
        gap=solution.gap if solution.level > 0.0 else None,
    )


def rescale_profile(profile: RadialProfile, lam: float) -> RadialProfile:
    """φ(r) -> λ φ(λ^{(p-1)/2} r), which maps steady states to steady states."""
    if not lam > 0.0:
        raise DomainError(f"lambda must be positive, got {lam}")
    if profile.singular:
        # φ∞ is a fixed point of the scaling
        return profile
    p = profile.params.p
    k = lam ** ((p - 1.0) / 2.0)
    base_dense = profile.dense
    base_gap = profile.gap

    def dense(r):
        value, derivative = base_dense(k * np.asarray(r, dtype=float))
        return lam * value, lam * k * derivative

    gap = None
    if base_gap is not None:

        def gap(r):
            return lam * base_gap(k * np.asarray(r, dtype=float))

    return RadialProfile(
        params=profile.params,
        lam=profile.lam * lam,
        grid=profile.grid / k,
        values=lam * profile.values,
        derivatives=lam * k * profile.derivatives,
        r_max=profile.r_max / k,
        first_root=None if profile.first_root is None else profile.first_root / k,
        error_estimate=lam * profile.error_estimate,
        dense=dense,
        gap=gap,
    )


def sample_singular(params: ProblemParams, grid: Sequence[float]) -> RadialProfile:
    """φ∞ sampled on a grid bounded away from the origin."""
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2 or np.any(grid <= 0.0) or np.any(np.diff(grid) <= 0.0):
        raise DomainError("grid for phi_infinity must be positive and strictly increasing")

    def dense(r):
        return phi_infinity(params, r), phi_infinity_derivative(params, r)

    return RadialProfile(
        params=params,
        lam=1.0,
        grid=grid,
        values=np.asarray(phi_infinity(params, grid)),
        derivatives=np.asarray(phi_infinity_derivative(params, grid)),
        r_max=float(grid[-1]),
        singular=True,
        dense=dense,
        gap=lambda r: np.zeros_like(np.asarray(r, dtype=float)),
    )


def critical_bubble(N: int, r):
    """The regular profile at p = p_S(N) in closed form: (1 + r^2/(N(N-2)))^{-(N-2)/2}."""
    if N < 3:
        raise DomainError(f"the critical bubble needs N >= 3, got N={N}")
    r = np.asarray(r, dtype=float)
    value = (1.0 + r**2 / (N * (N - 2.0))) ** (-(N - 2.0) / 2.0)
    return float(value) if np.ndim(value) == 0 else value


def critical_bubble_derivative(N: int, r):
    if N < 3:
        raise DomainError(f"the critical bubble needs N >= 3, got N={N}")
    r = np.asarray(r, dtype=float)
    base = 1.0 + r**2 / (N * (N - 2.0))
    value = -(r / N) * base ** (-N / 2.0)
    return float(value) if np.ndim(value) == 0 else value


def flux_residual(profile: RadialProfile, radii, half_width: float, nodes: Optional[int] = None):
    """Cell-averaged residual of -(r^{N-1}u')'/r^{N-1} - |u|^{p-1}u on [r - h, r + h].

    Fluxes r^{N-1}u' are evaluated exactly at the cell faces; the reaction term is integrated with
    Gauss-Legendre quadrature. Cells are clipped to [0, r_max].
    """
    nodes = config.radial_ode.residual_nodes if nodes is None else nodes
    N, p = profile.params.N, profile.params.p
    radii = np.atleast_1d(np.asarray(radii, dtype=float))
    lower = np.maximum(radii - half_width, 0.0)
    upper = np.minimum(radii + half_width, profile.r_max)
    if profile.singular and np.any(lower <= 0.0):
        raise DomainError("cells of a singular profile must stay away from the origin")

    xi, weights = np.polynomial.legendre.leggauss(nodes)
    mid = 0.5 * (upper + lower)
    half = 0.5 * (upper - lower)
    points = mid[:, None] + half[:, None] * xi[None, :]
    u = profile.evaluate(points.ravel())[0].reshape(points.shape)
    reaction = half * np.sum(weights[None, :] * points ** (N - 1) * odd_power(u, p), axis=1)

    volume = (upper**N - lower**N) / N
    flux_upper = upper ** (N - 1) * profile.evaluate(upper)[1]
    flux_lower = lower ** (N - 1) * profile.evaluate(lower)[1]
    return -(flux_upper - flux_lower) / volume - reaction / volume


def asymptotic_ratio(profile: RadialProfile, r_window: Tuple[float, float], samples: int = 2001):
    """Mean and maximum deviation from 1 of Φ/φ∞ over a window of radii.

    :return: ``(mean_ratio, max_deviation)``.
    """
    params = profile.params
    if not params.p > sobolev_exponent(params.N) or is_critical(params):
        raise RegimeError(f"the ratio limit Φ/φ∞ -> 1 is only asserted for p > p_S (N={params.N}, p={params.p})")
    lo, hi = float(r_window[0]), float(r_window[1])
    if not 0.0 < lo < hi or hi > profile.r_max * (1.0 + 1e-12):
        raise DomainError(f"empty or out-of-range window ({lo}, {hi}) for r_max={profile.r_max}")
    radii = np.geomspace(lo, hi, samples)
    ratio = 1.0 + profile.singular_gap(radii) / phi_infinity(params, radii)
    return float(np.mean(ratio)), float(np.max(np.abs(ratio - 1.0)))


def ordering_below_singular(params: ProblemParams, r_max: float, profile: Optional[RadialProfile] = None):
    """Whether Φ < φ∞ at every positive grid node, with the largest ratio Φ/φ∞ seen.

    :return: ``(ordered, max_ratio)``.
    """
    if not params.p > serrin_exponent(params.N):
        raise RegimeError(f"φ∞ does not exist for N={params.N}, p={params.p}")
    profile = integrate_regular(params, r_max) if profile is None else profile
    radii = profile.grid[1:]
    ratio = 1.0 + profile.singular_gap(radii) / phi_infinity(params, radii)
    table = exponent_table(params.N)
    log.bind(N=params.N, p=params.p).debug(f"max Φ/φ∞ = {np.max(ratio):.15g} (p_JL={table.p_JL})")
    return bool(np.all(ratio < 1.0)), float(np.max(ratio))
