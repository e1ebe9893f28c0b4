"""Piecewise barriers built from a regular cap and a singular outer part.

``z_λ`` equals φ_λ up to the junction and the singular solution (φ∞, or a Delaunay profile ψ at
p = p_S) beyond it. At the junction the inner slope exceeds the outer one, so the kink is concave
and z_λ is a weak supersolution of the steady equation.
"""
import dataclasses
import functools
from typing import Callable, Optional

import numpy as np

from src.config import config
from src.emden_fowler import DelaunayParams
from src.errors import BarrierError, DomainError, MeshError, RegimeError
from src.exponents import (
    ProblemParams,
    Regime,
    classify_regime,
    joseph_lundgren_exponent,
    phi_infinity,
    serrin_exponent,
)
from src.intersections import RadialFunction, first_intersection_radius, tau_lambda_crossing
from src.mesh import RadialMesh
from src.radial_ode import (
    critical_bubble,
    critical_bubble_derivative,
    integrate_regular,
    odd_power,
    rescale_profile,
)
from src.utils import pylogger

log = pylogger.ContextLogger(__name__)


@dataclasses.dataclass(frozen=True)
class PiecewiseBarrier:
    """z(r) = inner(r) for r <= junction and outer(r) beyond."""

    params: ProblemParams
    lam: float
    junction: float
    inner: RadialFunction
    outer: RadialFunction
    kink_jump: float
    continuity_gap: float
    kind: str = "self_similar"

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        inside = r <= self.junction
        out = np.empty_like(r, dtype=float)
        if np.any(inside):
            out[inside] = self.inner(r[inside])
        if np.any(~inside):
            out[~inside] = self.outer(r[~inside])
        return float(out) if out.ndim == 0 else out

    def derivative(self, r):
        """One-sided derivatives: the inner slope up to the junction, the outer slope beyond."""
        r = np.asarray(r, dtype=float)
        inside = r <= self.junction
        out = np.empty_like(r, dtype=float)
        if np.any(inside):
            out[inside] = self.inner.derivative(r[inside])
        if np.any(~inside):
            out[~inside] = self.outer.derivative(r[~inside])
        return float(out) if out.ndim == 0 else out

    @property
    def sup(self) -> float:
        """z_λ is decreasing, so its supremum is the value at the origin."""
        return float(self.inner(0.0))

    def to_json(self) -> dict:
        return {
            "N": self.params.N,
            "p": self.params.p,
            "lambda": self.lam,
            "kind": self.kind,
            "junction": self.junction,
            "kink_jump": self.kink_jump,
            "continuity_gap": self.continuity_gap,
        }


def _check_barrier_regime(params: ProblemParams) -> None:
    if not (serrin_exponent(params.N) < params.p < joseph_lundgren_exponent(params.N)):
        raise RegimeError(f"barriers z_λ need p_sg < p < p_JL (N={params.N}, p={params.p})")


def _tolerances() -> tuple:
    return (config.radial_ode.rel_tol, config.radial_ode.abs_tol, config.exponents.critical_rel_tol)


# the tolerances are part of the key: a profile shot at one tolerance is not reused at another
@functools.lru_cache(maxsize=64)
def _cached_first_radius(params: ProblemParams, tolerances: tuple) -> float:
    return first_intersection_radius(params)


@functools.lru_cache(maxsize=64)
def _cached_regular_profile(params: ProblemParams, r_max: float, tolerances: tuple):
    return integrate_regular(params, r_max)


def _first_radius(params: ProblemParams) -> float:
    return _cached_first_radius(params, _tolerances())


def _regular_profile(params: ProblemParams, r_max: float):
    return _cached_regular_profile(params, r_max, _tolerances())


def _verify(params, lam, junction, inner, outer, kind) -> PiecewiseBarrier:
    settings = config.supersolution
    blog = log.bind(N=params.N, p=params.p, lam=lam)
    inner_value, outer_value = float(inner(junction)), float(outer(junction))
    gap = abs(inner_value - outer_value)
    if gap > settings.continuity_tol * max(abs(outer_value), 1.0):
        raise BarrierError(f"{kind} barrier is discontinuous at the junction r={junction:.15g}: gap {gap:.3e}")
    kink = float(inner.derivative(junction) - outer.derivative(junction))
    if not kink > 0.0:
        raise BarrierError(f"{kind} barrier has a convex kink at r={junction:.15g}: jump {kink:.6g} <= 0")
    blog.debug(f"{kind} barrier: junction {junction:.12g}, kink jump {kink:.10g}")
    return PiecewiseBarrier(
        params=params,
        lam=float(lam),
        junction=float(junction),
        inner=inner,
        outer=outer,
        kink_jump=kink,
        continuity_gap=gap,
        kind=kind,
    )


def build_z_lambda(params: ProblemParams, lam: float) -> PiecewiseBarrier:
    """z_λ(r) = λ Z(λ^{(p-1)/2} r) with Z = Φ on [0, r_1] and φ∞ beyond; junction s_λ = r_1 λ^{-(p-1)/2}."""
    _check_barrier_regime(params)
    if not lam > 0.0:
        raise DomainError(f"lambda must be positive, got {lam}")
    r1 = _first_radius(params)
    profile = _regular_profile(params, 2.0 * r1)
    phi_lam = rescale_profile(profile, lam)
    junction = r1 * lam ** (-(params.p - 1.0) / 2.0)
    return _verify(
        params,
        lam,
        junction,
        RadialFunction.from_profile(phi_lam, "phi_lambda"),
        RadialFunction.singular(params),
        "self_similar",
    )


def build_z_lambda_delaunay(N: int, d: DelaunayParams, lam: float) -> PiecewiseBarrier:
    """z_λ = φ_λ on [0, τ_λ] and the Delaunay profile ψ beyond.

    Raises:
        RegimeError: unless the problem is at the Sobolev exponent (N >= 3).
        BarrierError: if the crossing at τ_λ is not transversal or the kink has the wrong sign.
    """
    if N < 3:
        raise RegimeError(f"Delaunay barriers need N >= 3, got N={N}")
    params = ProblemParams(N=N, p=(N + 2.0) / (N - 2.0))
    if classify_regime(params) != Regime.CRITICAL:
        raise RegimeError("Delaunay barriers exist at p = p_S only")
    if not lam > 0.0:
        raise DomainError(f"lambda must be positive, got {lam}")
    tau, transversal = tau_lambda_crossing(params, d, lam)
    if not transversal:
        raise BarrierError(f"φ_λ meets ψ tangentially at τ_λ={tau:.12g}")
    scale = lam ** (2.0 / (N - 2.0))
    inner = RadialFunction(
        value=lambda r: lam * critical_bubble(N, scale * np.asarray(r)),
        derivative=lambda r: lam * scale * critical_bubble_derivative(N, scale * np.asarray(r)),
        name="phi_lambda",
    )
    return _verify(params, lam, tau, inner, RadialFunction.delaunay(d), "delaunay")


def barrier_family(params: ProblemParams, delaunay: Optional[DelaunayParams] = None) -> Callable[[float], PiecewiseBarrier]:
    """λ -> z_λ for the self-similar family, or the Delaunay family when ``delaunay`` is given."""
    if delaunay is None:
        _check_barrier_regime(params)
        return functools.lru_cache(maxsize=None)(lambda lam: build_z_lambda(params, lam))
    if classify_regime(params) != Regime.CRITICAL:
        raise RegimeError("Delaunay barriers exist at p = p_S only")
    return functools.lru_cache(maxsize=None)(lambda lam: build_z_lambda_delaunay(params.N, delaunay, lam))


@dataclasses.dataclass(frozen=True)
class ResidualReport:
    residuals: np.ndarray
    centers: np.ndarray
    junction_index: int
    min_weak_residual: float
    max_smooth_residual: float
    junction_residual: float
    kink_mass: float

    def to_json(self) -> dict:
        return {
            "min_weak_residual": self.min_weak_residual,
            "max_smooth_residual": self.max_smooth_residual,
            "junction_residual": self.junction_residual,
            "kink_mass": self.kink_mass,
        }


def _reaction_integral(barrier: PiecewiseBarrier, a: np.ndarray, b: np.ndarray, nodes: int) -> np.ndarray:
    N, p = barrier.params.N, barrier.params.p
    xi, weights = np.polynomial.legendre.leggauss(nodes)
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    points = mid[:, None] + half[:, None] * xi[None, :]
    z = np.asarray(barrier(points.ravel())).reshape(points.shape)
    return half * np.sum(weights[None, :] * points ** (N - 1) * odd_power(z, p), axis=1)


def discrete_supersolution_residual(barrier: PiecewiseBarrier, mesh: RadialMesh) -> ResidualReport:
    """Finite-volume weak residual -(r^{N-1} z')'/r^{N-1} - z^p, cell-averaged over each interior node.

    Face fluxes use the exact one-sided derivatives of the barrier and the reaction is integrated by
    Gauss-Legendre quadrature, split at the junction. Smooth cells give (nearly) zero; the junction
    cell carries the kink as kink_jump * junction^{N-1} / volume.

    Raises:
        MeshError: if the junction is not a node of the mesh.
    """
    if mesh.N != barrier.params.N:
        raise MeshError(f"mesh dimension {mesh.N} does not match N={barrier.params.N}")
    junction_node = mesh.node_index(barrier.junction)
    nodes = config.supersolution.quadrature_nodes
    N = mesh.N

    faces = mesh.faces
    first = 0 if mesh.is_ball else 1
    index = np.arange(first, mesh.size - 1)
    lower, upper = faces[index], faces[index + 1]
    if junction_node not in index:
        raise MeshError("the junction must be an interior node of the mesh")
    volumes = (upper**N - lower**N) / N

    flux_upper = upper ** (N - 1) * barrier.derivative(upper)
    flux_lower = np.where(lower > 0.0, lower ** (N - 1) * barrier.derivative(np.maximum(lower, 1e-300)), 0.0)

    # split cells at the junction so each quadrature sees a smooth integrand
    s = barrier.junction
    split = np.clip(np.full_like(lower, s), lower, upper)
    reaction = _reaction_integral(barrier, lower, split, nodes) + _reaction_integral(barrier, split, upper, nodes)

    residuals = -(flux_upper - flux_lower) / volumes - reaction / volumes
    j = int(np.nonzero(index == junction_node)[0][0])
    smooth = np.delete(residuals, j)
    return ResidualReport(
        residuals=residuals,
        centers=mesh.nodes[index],
        junction_index=junction_node,
        min_weak_residual=float(np.min(residuals)),
        max_smooth_residual=float(np.max(np.abs(smooth))),
        junction_residual=float(residuals[j]),
        kink_mass=float(residuals[j] * volumes[j]),
    )


def outer_agreement(barrier: PiecewiseBarrier, radii) -> float:
    """Largest |z(r) - φ∞(r)| over radii beyond the junction (zero for self-similar barriers)."""
    radii = np.asarray(radii, dtype=float)
    radii = radii[radii > barrier.junction]
    if not radii.size:
        return 0.0
    return float(np.max(np.abs(barrier(radii) - phi_infinity(barrier.params, radii))))
