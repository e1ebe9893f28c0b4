"""Intersections between radial functions, r_1, τ_λ and the regime census.

Scans are geometric in the radius (Delaunay oscillations are periodic in ln r), refined in cells
with a sign change or a near-tangency and finished with Brent's method.
"""
import dataclasses
import math
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.ndimage import maximum_filter1d
from scipy.optimize import brentq, minimize_scalar

from src.config import config
from src.emden_fowler import (
    DelaunayParams,
    delaunay_derivative,
    delaunay_profile,
    equilibrium,
    homoclinic,
    homoclinic_derivative,
    homoclinic_shift,
)
from src.errors import DomainError, RegimeError, SearchError
from src.exponents import (
    ProblemParams,
    Regime,
    classify_regime,
    joseph_lundgren_exponent,
    phi_infinity,
    phi_infinity_derivative,
    serrin_exponent,
)
from src.radial_ode import RadialProfile, integrate_regular
from src.utils import pylogger

log = pylogger.ContextLogger(__name__)


@dataclasses.dataclass(frozen=True)
class RadialFunction:
    """A radial function given by callables on arrays of radii."""

    value: Callable
    derivative: Optional[Callable] = None
    name: str = "f"

    def __call__(self, r):
        return np.asarray(self.value(np.asarray(r, dtype=float)), dtype=float)

    @classmethod
    def from_profile(cls, profile: RadialProfile, name: str = "profile") -> "RadialFunction":
        return cls(value=profile.__call__, derivative=profile.derivative, name=name)

    @classmethod
    def singular(cls, params: ProblemParams) -> "RadialFunction":
        return cls(
            value=lambda r: phi_infinity(params, r),
            derivative=lambda r: phi_infinity_derivative(params, r),
            name="phi_infinity",
        )

    @classmethod
    def delaunay(cls, d: DelaunayParams) -> "RadialFunction":
        return cls(
            value=lambda r: delaunay_profile(d, r),
            derivative=lambda r: delaunay_derivative(d, r),
            name="delaunay",
        )


@dataclasses.dataclass(frozen=True)
class IntersectionSet:
    radii: np.ndarray
    transversal: np.ndarray
    window: Tuple[float, float]
    warnings: Tuple[str, ...] = ()

    @property
    def count(self) -> int:
        return int(self.radii.size)

    def to_json(self) -> dict:
        return {
            "radii": [float(r) for r in self.radii],
            "transversal": [bool(x) for x in self.transversal],
            "count": self.count,
            "window": [float(self.window[0]), float(self.window[1])],
            "warnings": list(self.warnings),
        }


def _sign_changes(d: np.ndarray) -> np.ndarray:
    return np.nonzero(np.sign(d[:-1]) * np.sign(d[1:]) < 0)[0]


def radial_intersections(
    f: RadialFunction,
    g: RadialFunction,
    window: Tuple[float, float],
    tol: Optional[float] = None,
    difference: Optional[Callable] = None,
) -> IntersectionSet:
    """All radii in ``window`` where f = g.

    :param f: First radial function.
    :param g: Second radial function.
    :param window: ``(lo, hi)`` with ``0 < lo < hi``.
    :param tol: Root tolerance; also sets the transversality threshold. Default is
        ``config.intersections.root_tol``.
    :param difference: (Optional) an accurate evaluator of f - g; used instead of subtracting the
        two values when they agree to many digits (e.g. Φ - φ∞ far out).
    :return: The sorted intersection radii with their transversality flags and any warnings.
    """
    settings = config.intersections
    tol = settings.root_tol if tol is None else tol
    lo, hi = float(window[0]), float(window[1])
    if not 0.0 < lo < hi:
        raise DomainError(f"intersection window must satisfy 0 < lo < hi, got ({lo}, {hi})")
    ilog = log.bind(f=f.name, g=g.name)

    def diff(r):
        if difference is not None:
            return np.asarray(difference(np.asarray(r, dtype=float)), dtype=float)
        return f(r) - g(r)

    points = int(math.ceil(settings.points_per_decade * math.log10(hi / lo))) + 1
    scan = np.geomspace(lo, hi, max(points, 3))
    d = diff(scan)
    scale = np.abs(f(scan)) + np.abs(g(scan))
    warnings: List[str] = []

    if np.all(np.abs(d) <= 4.0 * np.finfo(float).eps * scale):
        message = f"{f.name} and {g.name} agree at every scan point; intersections are not isolated"
        ilog.warning(message)
        return IntersectionSet(np.empty(0), np.empty(0, dtype=bool), (lo, hi), (message,))

    magnitude = np.abs(d)
    half_width = max(settings.points_per_decade // 10, 1)
    envelope = maximum_filter1d(magnitude, size=2 * half_width + 1, mode="nearest")

    brackets: List[Tuple[float, float]] = []
    touches: List[float] = []

    # cells with a sign change, refined to separate clustered roots
    for i in _sign_changes(d):
        fine = np.geomspace(scan[i], scan[i + 1], settings.refine_factor + 1)
        fine_d = diff(fine)
        for j in _sign_changes(fine_d):
            brackets.append((fine[j], fine[j + 1]))
    for i in np.nonzero(d == 0.0)[0]:
        touches.append(float(scan[i]))

    # interior local minima of |f - g| without a sign change
    interior = np.arange(1, scan.size - 1)
    is_min = (magnitude[interior] < magnitude[interior - 1]) & (magnitude[interior] <= magnitude[interior + 1])
    same_sign = (np.sign(d[interior - 1]) == np.sign(d[interior])) & (np.sign(d[interior]) == np.sign(d[interior + 1]))
    near = magnitude[interior] < settings.tangency_ratio * envelope[interior]
    for i in interior[is_min & same_sign & near & (d[interior] != 0.0)]:
        fine = np.geomspace(scan[i - 1], scan[i + 1], 2 * settings.refine_factor + 1)
        fine_d = diff(fine)
        changes = _sign_changes(fine_d)
        if changes.size:
            for j in changes:
                brackets.append((fine[j], fine[j + 1]))
            continue
        best = minimize_scalar(
            lambda r: abs(float(diff(r))),
            bounds=(scan[i - 1], scan[i + 1]),
            method="bounded",
            options={"xatol": tol * scan[i]},
        )
        r_star = float(best.x)
        local_scale = float(np.abs(f(r_star)) + np.abs(g(r_star)))
        if abs(float(diff(r_star))) <= tol * local_scale:
            touches.append(r_star)
        else:
            message = f"possible unresolved pair of intersections near r={r_star:.6g}"
            ilog.warning(message)
            warnings.append(message)

    roots = [
        brentq(lambda r: float(diff(r)), a, b, xtol=tol * min(1.0, a), rtol=4.0 * np.finfo(float).eps)
        for a, b in brackets
    ]
    radii = np.array(sorted(set(roots + touches)), dtype=float)

    accurate = difference is not None or f.derivative is None or g.derivative is None
    transversal = np.array(
        [_is_transversal(f, g, diff, accurate, r, scan, magnitude, tol) for r in radii], dtype=bool
    )
    ilog.debug(f"{radii.size} intersections on ({lo:g}, {hi:g}), {np.count_nonzero(~transversal)} tangential")
    return IntersectionSet(radii, transversal, (lo, hi), tuple(warnings))


def _is_transversal(f, g, diff, accurate, r, scan, magnitude, tol) -> bool:
    """|f' - g'| at r against the local size of |f - g|/r over one e-fold of radii."""
    if accurate:
        # central differences of the difference stay meaningful when f' and g' cancel
        a, b = max(r * (1.0 - 1e-4), scan[0]), min(r * (1.0 + 1e-4), scan[-1])
        gap = (float(diff(b)) - float(diff(a))) / (b - a)
    else:
        gap = float(f.derivative(r) - g.derivative(r))
    nearby = (scan >= r / math.e) & (scan <= r * math.e)
    scale = float(np.max(magnitude[nearby] / scan[nearby])) if np.any(nearby) else 0.0
    return abs(gap) > 10.0 * tol * scale


def brute_force_count(
    f: RadialFunction,
    g: RadialFunction,
    window: Tuple[float, float],
    points: int = 10**6,
    difference: Optional[Callable] = None,
) -> int:
    """Number of sign changes of f - g on a uniform scan of ``window``."""
    r = np.linspace(window[0], window[1], points)
    d = difference(r) if difference is not None else f(r) - g(r)
    return int(_sign_changes(np.asarray(d)).size)


def _check_intersecting_regime(params: ProblemParams) -> None:
    if not (serrin_exponent(params.N) < params.p < joseph_lundgren_exponent(params.N)):
        raise RegimeError(
            f"Φ is only guaranteed to meet φ∞ for p_sg < p < p_JL (N={params.N}, p={params.p})"
        )


def first_intersection_radius(params: ProblemParams) -> float:
    """r_1, the smallest radius where Φ = φ∞, searched in windows that double up to a limit."""
    settings = config.intersections
    _check_intersecting_regime(params)
    R = settings.initial_search_radius
    while R <= settings.max_search_radius:
        profile = integrate_regular(params, R)
        found = radial_intersections(
            RadialFunction.from_profile(profile, "Phi"),
            RadialFunction.singular(params),
            (settings.origin_offset, R),
            difference=profile.singular_gap,
        )
        if found.count:
            return float(found.radii[0])
        R *= 2.0
    raise SearchError(f"no intersection of Φ with φ∞ on (0, {settings.max_search_radius:g}] for N={params.N}, p={params.p}")


@dataclasses.dataclass(frozen=True)
class CensusResult:
    params: ProblemParams
    regime: Regime
    R: float
    count: int
    consistent: bool
    intersections: IntersectionSet
    recount_radius: Optional[float] = None
    recount: Optional[int] = None

    def to_json(self) -> dict:
        out = {
            "N": self.params.N,
            "p": self.params.p,
            "regime": self.regime.value,
            "R": self.R,
            "count": self.count,
            "consistent": self.consistent,
            "radii": [float(r) for r in self.intersections.radii],
            "transversal": [bool(x) for x in self.intersections.transversal],
        }
        if self.recount is not None:
            out["recount_radius"] = self.recount_radius
            out["recount"] = self.recount
        return out


def _linearized_half_period(params: ProblemParams) -> float:
    """π/ω for the spiral of the cylinder ODE around L, or inf when the approach is monotone."""
    m = params.self_similar_exponent
    damping = params.N - 2.0 - 2.0 * m
    stiffness = (params.p - 1.0) * m * (params.N - 2.0 - m)
    discriminant = 4.0 * stiffness - damping**2
    if discriminant <= 0.0:
        return math.inf
    return 2.0 * math.pi / math.sqrt(discriminant)


def _count_with_singular(params: ProblemParams, R: float, upto: Optional[float] = None):
    settings = config.intersections
    profile = integrate_regular(params, R)
    hi = R if upto is None else min(upto(profile), R)
    found = radial_intersections(
        RadialFunction.from_profile(profile, "Phi"),
        RadialFunction.singular(params),
        (settings.origin_offset, hi),
        difference=profile.singular_gap,
    )
    return found, profile


def regime_intersection_census(params: ProblemParams, R: float) -> CensusResult:
    """Counts the intersections of Φ with φ∞ on (ε, R) and checks the count against the regime.

    * serrin_to_sobolev: exactly two before the first root of Φ;
    * critical: exactly two;
    * sobolev_to_jl: a recount on a larger window is strictly larger. The larger window is 2R, widened
      to R e^{1.1 π/ω} when the linearized oscillation around φ∞ is slower than a doubling;
    * at_or_above_jl: none.
    """
    regime = classify_regime(params)
    if regime == Regime.BELOW_SERRIN:
        raise RegimeError(f"φ∞ does not exist for p <= p_sg (N={params.N}, p={params.p})")
    if not R > config.intersections.origin_offset:
        raise DomainError(f"census radius must exceed the origin offset, got R={R}")
    clog = log.bind(N=params.N, p=params.p)

    recount_radius, recount = None, None
    if regime == Regime.SERRIN_TO_SOBOLEV:
        found, profile = _count_with_singular(
            params, R, upto=lambda prof: prof.first_root if prof.first_root is not None else math.inf
        )
        consistent = found.count == 2
    elif regime == Regime.CRITICAL:
        found, _ = _count_with_singular(params, R)
        consistent = found.count == 2
    elif regime == Regime.SOBOLEV_TO_JL:
        found, _ = _count_with_singular(params, R)
        recount_radius = R * max(2.0, math.exp(1.1 * _linearized_half_period(params)))
        recount = _count_with_singular(params, recount_radius)[0].count
        consistent = recount > found.count
    else:
        found, _ = _count_with_singular(params, R)
        consistent = found.count == 0

    clog.info(f"census on R={R:g}: regime={regime.value}, count={found.count}, consistent={consistent}")
    return CensusResult(
        params=params,
        regime=regime,
        R=float(R),
        count=found.count,
        consistent=consistent,
        intersections=found,
        recount_radius=recount_radius,
        recount=recount,
    )


def census_grid(pairs: Sequence[Tuple[int, float]], R: float) -> pd.DataFrame:
    """Census over a grid of (N, p), ordered by (N, p) regardless of input order."""
    rows = []
    for N, p in sorted(set((int(N), float(p)) for N, p in pairs)):
        result = regime_intersection_census(ProblemParams(N=N, p=p), R)
        rows.append(
            {
                "N": N,
                "p": p,
                "regime": result.regime.value,
                "count": result.count,
                "consistent": result.consistent,
            }
        )
    return pd.DataFrame(rows, columns=["N", "p", "regime", "count", "consistent"])


def _critical_delaunay_check(params: ProblemParams, delaunay: DelaunayParams) -> None:
    if classify_regime(params) != Regime.CRITICAL:
        raise RegimeError(f"τ_λ is defined at p = p_S only (N={params.N}, p={params.p})")
    if delaunay.N != params.N:
        raise DomainError(f"Delaunay solution is for N={delaunay.N}, problem has N={params.N}")


def tau_lambda_crossing(params: ProblemParams, delaunay: DelaunayParams, lam: float) -> Tuple[float, bool]:
    """First radius where φ_λ meets ψ, with its transversality flag.

    In cylinder variables φ_λ is the homoclinic shifted by ln(λ)/k - ln sqrt(N(N-2)), k = (N-2)/2, and
    ψ is h(t - phase). The homoclinic starts below min h and peaks above max h, so the first crossing
    is bracketed between a radius where λ r^k < min h and the peak.
    """
    _critical_delaunay_check(params, delaunay)
    if not lam > 0.0:
        raise DomainError(f"lambda must be positive, got {lam}")
    tol = config.intersections.root_tol
    N = params.N
    k = (N - 2.0) / 2.0
    offset = math.log(lam) / k - homoclinic_shift(N)

    def gap(t):
        return homoclinic(N, np.asarray(t) + offset) - delaunay.h(np.asarray(t) - delaunay.phase)[0]

    t_lo = math.log(0.5 * (delaunay.min_value / lam) ** (1.0 / k))
    t_peak = -offset
    step = min(delaunay.period, 1.0) / 400.0
    t_scan = np.arange(t_lo, t_peak + delaunay.period + step, step)
    d = gap(t_scan)
    changes = _sign_changes(d)
    if d[0] >= 0.0 or not changes.size:
        raise SearchError(
            f"could not bracket τ_λ on r in [{math.exp(t_lo):.6g}, {math.exp(t_scan[-1]):.6g}] "
            f"(λ={lam:g}, m={delaunay.min_value:.6g}, phase={delaunay.phase:.6g}, gap at ends {d[0]:.3g}, {d[-1]:.3g})"
        )
    i = int(changes[0])
    t_star = brentq(lambda t: float(gap(t)), t_scan[i], t_scan[i + 1], xtol=tol, rtol=4.0 * np.finfo(float).eps)

    h_value, h_prime = delaunay.h(t_star - delaunay.phase)
    slope_gap = float(homoclinic_derivative(N, t_star + offset) - h_prime)
    transversal = abs(slope_gap) > 10.0 * tol * float(h_value)
    return float(math.exp(t_star)), transversal


def tau_lambda(params: ProblemParams, delaunay: DelaunayParams, lam: float) -> float:
    """τ_λ, the first radius at which φ_λ and the Delaunay profile ψ intersect."""
    return tau_lambda_crossing(params, delaunay, lam)[0]


def delaunay_census(d: DelaunayParams, window: Tuple[float, float]) -> IntersectionSet:
    """Intersections of ψ with φ∞ at p = p_S; the gap is r^{-k}(h - v*), computed without cancellation."""
    params = ProblemParams(N=d.N, p=(d.N + 2.0) / (d.N - 2.0))
    L = equilibrium(d.N)
    k = (d.N - 2.0) / 2.0

    def difference(r):
        r = np.asarray(r, dtype=float)
        return r ** (-k) * (d.h(np.log(r) - d.phase)[0] - L)

    return radial_intersections(
        RadialFunction.delaunay(d), RadialFunction.singular(params), window, difference=difference
    )
