import math
import unittest

import numpy as np
import pytest

from src.errors import DomainError, RegimeError
from src.exponents import (
    ExtendedReal,
    ProblemParams,
    Regime,
    classify_regime,
    exponent_table,
    is_critical,
    joseph_lundgren_exponent,
    phi_infinity,
    phi_infinity_derivative,
    serrin_exponent,
    singular_amplitude,
    sobolev_exponent,
)


class TestExtendedReal(unittest.TestCase):

    def test_infinity_exceeds_every_number(self):
        inf = ExtendedReal.infinity()
        self.assertFalse(inf.is_finite)
        self.assertTrue(inf > 1e300)
        self.assertTrue(ExtendedReal(3.0) < inf)
        self.assertEqual(float(inf), math.inf)

    def test_compares_with_plain_numbers(self):
        self.assertEqual(ExtendedReal(3.0), 3)
        self.assertTrue(ExtendedReal(2.5) < 3.0)
        self.assertTrue(4 > ExtendedReal(3.0))

    def test_json_form(self):
        self.assertEqual(ExtendedReal.infinity().to_json(), "inf")
        self.assertEqual(ExtendedReal(5.0).to_json(), 5.0)

    def test_rejects_nonpositive_values(self):
        for value in (0.0, -1.0, math.nan, math.inf):
            with self.assertRaises(DomainError):
                ExtendedReal(value)


class TestExponentTable(unittest.TestCase):

    def test_three_dimensions(self):
        self.assertEqual(serrin_exponent(3), 3.0)
        self.assertEqual(sobolev_exponent(3), 5.0)
        self.assertFalse(joseph_lundgren_exponent(3).is_finite)

    def test_joseph_lundgren_in_eleven_dimensions(self):
        self.assertAlmostEqual(float(joseph_lundgren_exponent(11)), 6.9220245868, delta=1e-9)

    def test_low_dimensions_are_unbounded(self):
        table = exponent_table(2).to_json()
        self.assertEqual(table, {"N": 2, "p_sg": "inf", "p_S": "inf", "p_JL": "inf"})

    def test_thresholds_are_ordered(self):
        for N in range(3, 30):
            table = exponent_table(N)
            self.assertTrue(1.0 < table.p_sg < table.p_S)
            self.assertTrue(table.p_S < table.p_JL)

    def test_rejects_bad_dimensions(self):
        for N in (0, -2, 2.5):
            with self.assertRaises(DomainError):
                exponent_table(N)


class TestProblemParams(unittest.TestCase):

    def test_self_similar_exponent(self):
        self.assertAlmostEqual(ProblemParams(N=3, p=5.0).self_similar_exponent, 0.5)

    def test_rejects_exponents_at_most_one(self):
        for p in (1.0, 0.5, math.inf, math.nan):
            with self.assertRaises(DomainError):
                ProblemParams(N=3, p=p)

    def test_rejects_bad_dimension(self):
        with self.assertRaises(DomainError):
            ProblemParams(N=0, p=2.0)


@pytest.mark.parametrize(
    "N, p, regime",
    [
        (3, 2.0, Regime.BELOW_SERRIN),
        (3, 3.0, Regime.BELOW_SERRIN),
        (3, 4.0, Regime.SERRIN_TO_SOBOLEV),
        (3, 5.0, Regime.CRITICAL),
        (3, 6.0, Regime.SOBOLEV_TO_JL),
        (2, 50.0, Regime.BELOW_SERRIN),
        (11, 6.5, Regime.SOBOLEV_TO_JL),
        (11, 7.0, Regime.AT_OR_ABOVE_JL),
    ],
)
def test_classify_regime(N: int, p: float, regime: Regime) -> None:
    """Regimes follow the thresholds p_sg < p_S < p_JL, with p = p_sg below Serrin.

    :param N: The dimension.
    :param p: The exponent.
    :param regime: The expected regime.
    """
    assert classify_regime(ProblemParams(N=N, p=p)) == regime


def test_decimal_critical_exponents_are_critical() -> None:
    """An exponent typed with a dozen decimals is routed to the critical regime."""
    assert is_critical(ProblemParams(N=5, p=2.3333333333333))
    assert classify_regime(ProblemParams(N=3, p=5.0 + 1e-13)) == Regime.CRITICAL
    assert classify_regime(ProblemParams(N=3, p=5.0 + 1e-6)) == Regime.SOBOLEV_TO_JL
    assert classify_regime(ProblemParams(N=3, p=5.0 + 1e-6), rel_tol=1e-5) == Regime.CRITICAL


class TestSingularSteadyState(unittest.TestCase):

    def test_amplitude_closed_forms(self):
        self.assertAlmostEqual(singular_amplitude(ProblemParams(N=3, p=4.0)), (2.0 / 9.0) ** (1.0 / 3.0), places=14)
        self.assertAlmostEqual(singular_amplitude(ProblemParams(N=3, p=5.0)), math.sqrt(0.5), places=14)

    def test_no_singular_state_below_serrin(self):
        with self.assertRaises(RegimeError):
            singular_amplitude(ProblemParams(N=3, p=3.0))
        with self.assertRaises(RegimeError):
            singular_amplitude(ProblemParams(N=2, p=7.0))

    def test_solves_the_steady_equation(self):
        params = ProblemParams(N=5, p=2.5)
        r = np.linspace(0.5, 4.0, 20)
        h = 1e-4
        u = phi_infinity(params, r)
        du = phi_infinity_derivative(params, r)
        d2u = (phi_infinity(params, r + h) - 2.0 * u + phi_infinity(params, r - h)) / h**2
        residual = d2u + (params.N - 1) / r * du + u**params.p
        self.assertLess(np.max(np.abs(residual)), 1e-5)

    def test_scalar_in_scalar_out(self):
        value = phi_infinity(ProblemParams(N=3, p=5.0), 4.0)
        self.assertIsInstance(value, float)
        self.assertAlmostEqual(value, math.sqrt(0.5) / 2.0)

    def test_singular_at_origin(self):
        with self.assertRaises(DomainError):
            phi_infinity(ProblemParams(N=3, p=5.0), [0.0, 1.0])
