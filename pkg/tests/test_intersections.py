import math
import unittest

import numpy as np
import pytest

from src.config import config
from src.emden_fowler import constant_orbit, equilibrium, periodic_orbit
from src.errors import DomainError, RegimeError
from src.exponents import (
    ProblemParams,
    Regime,
    classify_regime,
    joseph_lundgren_exponent,
    serrin_exponent,
    sobolev_exponent,
)
from src.intersections import (
    RadialFunction,
    brute_force_count,
    census_grid,
    delaunay_census,
    first_intersection_radius,
    radial_intersections,
    regime_intersection_census,
    tau_lambda,
    tau_lambda_crossing,
)
from src.radial_ode import integrate_regular, rescale_profile

CRITICAL_3D = ProblemParams(N=3, p=5.0)


class TestRadialIntersections(unittest.TestCase):

    def test_single_transversal_root(self):
        f = RadialFunction(value=lambda r: 1.0 / r, derivative=lambda r: -1.0 / r**2, name="inverse")
        g = RadialFunction(value=lambda r: np.ones_like(r), derivative=lambda r: np.zeros_like(r), name="one")
        found = radial_intersections(f, g, (0.1, 10.0))
        self.assertEqual(found.count, 1)
        self.assertAlmostEqual(found.radii[0], 1.0, delta=1e-10)
        self.assertTrue(found.transversal[0])
        self.assertEqual(found.warnings, ())

    def test_log_periodic_roots(self):
        f = RadialFunction(value=lambda r: np.sin(np.log(r)), name="sin_log")
        g = RadialFunction(value=lambda r: np.zeros_like(r), name="zero")
        window = (0.5, 1000.0)
        found = radial_intersections(f, g, window)
        np.testing.assert_allclose(found.radii, [1.0, math.exp(math.pi), math.exp(2.0 * math.pi)], rtol=1e-10)
        self.assertTrue(np.all(found.transversal))
        self.assertEqual(brute_force_count(f, g, window, points=10**5), found.count)

    def test_identical_functions_are_not_isolated(self):
        f = RadialFunction(value=lambda r: 1.0 / r, name="f")
        found = radial_intersections(f, f, (1.0, 2.0))
        self.assertEqual(found.count, 0)
        self.assertEqual(len(found.warnings), 1)

    def test_rejects_bad_windows(self):
        f = RadialFunction(value=lambda r: r)
        with self.assertRaises(DomainError):
            radial_intersections(f, f, (0.0, 1.0))
        with self.assertRaises(DomainError):
            radial_intersections(f, f, (2.0, 1.0))

    def test_json_form(self):
        f = RadialFunction(value=lambda r: 1.0 / r)
        g = RadialFunction(value=lambda r: np.ones_like(r))
        out = radial_intersections(f, g, (0.5, 2.0)).to_json()
        self.assertEqual(set(out), {"radii", "transversal", "count", "window", "warnings"})
        self.assertEqual(out["window"], [0.5, 2.0])


class TestCriticalIntersections(unittest.TestCase):
    """At p = p_S(3) the bubble meets φ∞ where r^2 - 6r + 3 = 0."""

    def test_first_radius(self):
        self.assertAlmostEqual(first_intersection_radius(CRITICAL_3D), 3.0 - math.sqrt(6.0), delta=1e-6)

    def test_census(self):
        result = regime_intersection_census(CRITICAL_3D, 100.0)
        self.assertEqual(result.regime, Regime.CRITICAL)
        self.assertEqual(result.count, 2)
        self.assertTrue(result.consistent)
        np.testing.assert_allclose(result.intersections.radii, [3.0 - math.sqrt(6.0), 3.0 + math.sqrt(6.0)], atol=1e-6)
        self.assertTrue(np.all(result.intersections.transversal))
        self.assertNotIn("recount", result.to_json())

    def test_tau_lambda_with_the_constant_orbit(self):
        d = constant_orbit(3)
        for lam in (0.5, 1.0, 3.0):
            expected = (3.0 - math.sqrt(6.0)) / lam**2
            self.assertAlmostEqual(tau_lambda(CRITICAL_3D, d, lam), expected, delta=1e-8 * max(expected, 1.0))

    def test_tau_lambda_with_a_periodic_orbit(self):
        d = periodic_orbit(3, 0.5 * equilibrium(3))
        tau, transversal = tau_lambda_crossing(CRITICAL_3D, d, 1.0)
        self.assertTrue(transversal)
        bubble = RadialFunction(value=lambda r: (1.0 + r**2 / 3.0) ** -0.5)
        found = radial_intersections(bubble, RadialFunction.delaunay(d), (1e-3, 2.0 * tau))
        self.assertAlmostEqual(found.radii[0], tau, delta=1e-8)

    def test_tau_lambda_needs_the_critical_exponent(self):
        with self.assertRaises(RegimeError):
            tau_lambda(ProblemParams(N=3, p=4.0), constant_orbit(3), 1.0)
        with self.assertRaises(DomainError):
            tau_lambda(CRITICAL_3D, constant_orbit(3), -1.0)

    def test_delaunay_meets_singular_twice_per_period(self):
        d = periodic_orbit(3, 0.5 * equilibrium(3))
        found = delaunay_census(d, (1.0, math.exp(2.0 * d.period)))
        self.assertEqual(found.count, 4)
        self.assertTrue(np.all(found.transversal))

    def test_delaunay_census_on_a_symmetric_window(self):
        d = periodic_orbit(3, 0.5 * equilibrium(3))
        found = delaunay_census(d, (math.exp(-5.0), math.exp(5.0)))
        self.assertGreaterEqual(found.count, 2 * math.floor(10.0 / d.period))


class TestRegimeCensus(unittest.TestCase):

    def test_subcritical_meets_twice_before_the_root(self):
        result = regime_intersection_census(ProblemParams(N=3, p=4.0), 10.0)
        self.assertEqual(result.regime, Regime.SERRIN_TO_SOBOLEV)
        self.assertEqual(result.count, 2)
        self.assertTrue(result.consistent)

    def test_supercritical_count_grows_with_the_window(self):
        result = regime_intersection_census(ProblemParams(N=3, p=6.0), 100.0)
        self.assertEqual(result.regime, Regime.SOBOLEV_TO_JL)
        self.assertGreaterEqual(result.count, 1)
        self.assertGreater(result.recount, result.count)
        self.assertGreaterEqual(result.recount_radius, 200.0)
        self.assertTrue(result.consistent)

    def test_eleven_dimensions_below_joseph_lundgren(self):
        params = ProblemParams(N=11, p=3.0)
        result = regime_intersection_census(params, 1e3)
        self.assertEqual(result.regime, Regime.SOBOLEV_TO_JL)
        self.assertGreaterEqual(result.count, 4)
        self.assertTrue(result.consistent)
        self.assertGreater(regime_intersection_census(params, 1e4).count, result.count)

    def test_no_intersections_above_joseph_lundgren(self):
        result = regime_intersection_census(ProblemParams(N=11, p=8.0), 100.0)
        self.assertEqual(result.regime, Regime.AT_OR_ABOVE_JL)
        self.assertEqual(result.count, 0)
        self.assertTrue(result.consistent)

    def test_first_radius_needs_intersections(self):
        with self.assertRaises(RegimeError):
            first_intersection_radius(ProblemParams(N=11, p=8.0))


@pytest.mark.parametrize("N, p", [(3, 2.0), (3, 3.0), (2, 9.0)])
def test_census_needs_a_singular_state(N: int, p: float) -> None:
    """Below the Serrin exponent φ∞ does not exist.

    :param N: The dimension.
    :param p: The exponent.
    """
    with pytest.raises(RegimeError):
        regime_intersection_census(ProblemParams(N=N, p=p), 10.0)


def test_census_grid_is_sorted() -> None:
    """Rows come back ordered by (N, p) whatever the input order."""
    frame = census_grid([(3, 5.0), (3, 4.0), (3, 5.0)], 50.0)
    assert list(frame.columns) == ["N", "p", "regime", "count", "consistent"]
    assert frame[["N", "p"]].values.tolist() == [[3, 4.0], [3, 5.0]]
    assert frame["consistent"].all()


class TestTauLambda(unittest.TestCase):
    """τ_λ against a non-constant Delaunay orbit."""

    @classmethod
    def setUpClass(cls):
        cls.orbit = periodic_orbit(3, 0.5 * equilibrium(3))

    def test_decreases_as_lambda_grows(self):
        taus = [tau_lambda(CRITICAL_3D, self.orbit, lam) for lam in (1.0, 10.0, 100.0)]
        self.assertTrue(np.all(np.diff(taus) < 0.0))

    def test_increases_as_lambda_shrinks(self):
        taus = [tau_lambda(CRITICAL_3D, self.orbit, lam) for lam in (1.0, 0.1, 0.01)]
        self.assertTrue(np.all(np.diff(taus) > 0.0))

    def test_continuous_in_lambda(self):
        tau = tau_lambda(CRITICAL_3D, self.orbit, 1.0)
        jumps = [abs(tau_lambda(CRITICAL_3D, self.orbit, 1.0 + h) - tau) for h in (1e-2, 1e-3, 1e-4)]
        self.assertGreater(jumps[-1], 0.0)
        for coarse, fine in zip(jumps[:-1], jumps[1:]):
            self.assertLess(fine, 0.2 * coarse)


@pytest.mark.parametrize("N, p", [(3, 4.0), (3, 5.0), (3, 6.0), (11, 3.0)])
@pytest.mark.parametrize("lam", [0.5, 2.0, 4.0])
def test_intersections_follow_the_scaling(N: int, p: float, lam: float) -> None:
    """φ_λ meets φ∞ at the radii where Φ does, divided by λ^{(p-1)/2}.

    :param N: The dimension.
    :param p: The exponent.
    :param lam: The scaling factor λ.
    """
    params = ProblemParams(N=N, p=p)
    profile = integrate_regular(params, 50.0)
    phi = rescale_profile(profile, lam)
    singular = RadialFunction.singular(params)
    offset = config.intersections.origin_offset
    k = lam ** ((p - 1.0) / 2.0)
    # up to the first root, where one exists
    hi = profile.r_max if profile.first_root is None else profile.first_root
    base = radial_intersections(
        RadialFunction.from_profile(profile, "Phi"), singular, (offset, hi), difference=profile.singular_gap
    )
    scaled = radial_intersections(
        RadialFunction.from_profile(phi, "phi_lambda"), singular, (offset, hi / k), difference=phi.singular_gap
    )
    assert base.count >= 1
    assert scaled.count == base.count
    np.testing.assert_allclose(scaled.radii, base.radii / k, rtol=1e-9)


def _random_params(regime: Regime, rng: np.random.Generator) -> ProblemParams:
    """One (N, p) inside ``regime``, away from the regime's end points."""
    if regime == Regime.CRITICAL:
        N = int(rng.integers(3, 16))
        return ProblemParams(N=N, p=(N + 2.0) / (N - 2.0))
    if regime == Regime.AT_OR_ABOVE_JL:
        N = int(rng.integers(11, 16))
        lo = float(joseph_lundgren_exponent(N))
        return ProblemParams(N=N, p=lo + rng.uniform(0.05, 3.0))
    N = int(rng.integers(3, 13))
    if regime == Regime.SERRIN_TO_SOBOLEV:
        lo, hi = float(serrin_exponent(N)), float(sobolev_exponent(N))
    else:
        lo, hi = float(sobolev_exponent(N)), min(float(joseph_lundgren_exponent(N)), 3.0 * float(sobolev_exponent(N)))
    return ProblemParams(N=N, p=lo + (hi - lo) * rng.uniform(0.1, 0.9))


@pytest.mark.slow
@pytest.mark.parametrize(
    "regime", [Regime.SERRIN_TO_SOBOLEV, Regime.CRITICAL, Regime.SOBOLEV_TO_JL, Regime.AT_OR_ABOVE_JL]
)
def test_adaptive_count_matches_a_dense_scan(regime: Regime) -> None:
    """On 20 random (N, p) per regime the adaptive scan counts what a 10^6 point scan counts.

    :param regime: The regime the draws come from.
    """
    rng = np.random.default_rng(20)
    R = 50.0
    for _ in range(20):
        params = _random_params(regime, rng)
        assert classify_regime(params) == regime
        profile = integrate_regular(params, R)
        hi = R
        if regime == Regime.SERRIN_TO_SOBOLEV and profile.first_root is not None:
            hi = profile.first_root
        window = (config.intersections.origin_offset, hi)
        phi = RadialFunction.from_profile(profile, "Phi")
        singular = RadialFunction.singular(params)
        found = radial_intersections(phi, singular, window, difference=profile.singular_gap)
        dense = brute_force_count(phi, singular, window, points=10**6, difference=profile.singular_gap)
        assert dense == found.count, f"N={params.N}, p={params.p}"
