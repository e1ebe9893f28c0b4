import math
import unittest

import numpy as np
import pytest

from src.doubling import (
    FiniteMetricSpace,
    WeightFunction,
    doubling_point,
    iteration_bound,
    load_space,
    parabolic_distance,
    random_space,
    random_weights,
    verify_doubling,
)
from src.errors import DomainError


def line(*positions: float) -> FiniteMetricSpace:
    """Points a, b, c, ... on the real line."""
    x = np.asarray(positions, dtype=float)
    labels = [chr(ord("a") + i) for i in range(x.size)]
    return FiniteMetricSpace(points=labels, dist=np.abs(x[:, None] - x[None, :]))


class TestParabolicDistance(unittest.TestCase):

    def test_examples(self):
        self.assertEqual(parabolic_distance(([0.0], 0.0), ([0.0], 0.0)), 0.0)
        self.assertEqual(parabolic_distance(([0.0], 0.0), ([1.0], 4.0)), 3.0)
        self.assertEqual(parabolic_distance(((0.0, 0.0), 0.0), ((3.0, 4.0), 4.0)), 7.0)

    def test_symmetry(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            a = (rng.normal(size=3), rng.normal())
            b = (rng.normal(size=3), rng.normal())
            self.assertEqual(parabolic_distance(a, b), parabolic_distance(b, a))

    def test_triangle_inequality(self):
        rng = np.random.default_rng(1)
        for _ in range(1000):
            a, b, c = ((rng.normal(size=2), rng.uniform(-2.0, 2.0)) for _ in range(3))
            self.assertLessEqual(parabolic_distance(a, c), parabolic_distance(a, b) + parabolic_distance(b, c) + 1e-12)


class TestFiniteMetricSpace(unittest.TestCase):

    def test_rejects_non_metrics(self):
        with self.assertRaises(DomainError):
            FiniteMetricSpace(points=["a", "b"], dist=np.zeros((3, 3)))
        with self.assertRaises(DomainError):
            FiniteMetricSpace(points=["a", "a"], dist=np.array([[0.0, 1.0], [1.0, 0.0]]))
        with self.assertRaises(DomainError):
            FiniteMetricSpace(points=["a", "b"], dist=np.array([[0.0, 1.0], [2.0, 0.0]]))
        with self.assertRaises(DomainError):
            FiniteMetricSpace(points=["a", "b"], dist=np.array([[0.0, 0.0], [0.0, 0.0]]))
        with self.assertRaises(DomainError):
            FiniteMetricSpace(points=["a", "b"], dist=np.array([[1.0, 1.0], [1.0, 1.0]]))
        with self.assertRaises(DomainError):
            FiniteMetricSpace(points=["a", "b"], dist=np.array([[0.0, -1.0], [-1.0, 0.0]]))

    def test_rejects_triangle_violations(self):
        dist = np.array([[0.0, 1.0, 5.0], [1.0, 0.0, 1.0], [5.0, 1.0, 0.0]])
        with self.assertRaises(DomainError):
            FiniteMetricSpace(points=["a", "b", "c"], dist=dist)

    def test_index_by_label_or_position(self):
        space = line(0.0, 1.0, 2.0)
        self.assertEqual(space.index("c"), 2)
        self.assertEqual(space.index(1), 1)
        with self.assertRaises(DomainError):
            space.index("z")
        with self.assertRaises(DomainError):
            space.index(3)

    def test_rejects_bad_weights(self):
        with self.assertRaises(DomainError):
            WeightFunction(np.array([1.0, -1.0]))
        with self.assertRaises(DomainError):
            WeightFunction(np.array([1.0, np.inf]))


class TestDoublingPoint(unittest.TestCase):

    def test_single_point(self):
        space = FiniteMetricSpace(points=["y"], dist=np.zeros((1, 1)))
        result = doubling_point(space, WeightFunction(np.array([1.0])), "y", 1.0)
        self.assertEqual(result.point, "y")
        self.assertEqual(result.iterations, 0)

    def test_constant_weight_keeps_the_start(self):
        space = line(0.0, 0.1, 0.3, 0.6)
        result = doubling_point(space, WeightFunction(np.full(4, 2.5)), "b", 10.0)
        self.assertEqual(result.point, "b")
        self.assertTrue(verify_doubling(space, WeightFunction(np.full(4, 2.5)), "b", 10.0, result.point))

    def test_one_move(self):
        space = line(0.0, 1.0, 2.0)
        result = doubling_point(space, WeightFunction(np.array([1.0, 3.0, 7.0])), "a", 1.0)
        self.assertEqual(result.point, "b")
        self.assertEqual(result.iterations, 1)
        self.assertAlmostEqual(result.ball_radius, 1.0 / 3.0)
        self.assertEqual(result.M_x, 3.0)
        self.assertEqual(result.to_json(), {"x": "b", "M_x": 3.0, "ball_radius": 1.0 / 3.0, "iterations": 1})

    def test_ties_go_to_the_smallest_index(self):
        space = line(0.0, 0.5, 1.0)
        result = doubling_point(space, WeightFunction(np.array([1.0, 5.0, 5.0])), "a", 1.0)
        self.assertEqual(result.index, 1)

    def test_preconditions(self):
        space = line(0.0, 1.0)
        with self.assertRaises(DomainError):
            doubling_point(space, WeightFunction(np.array([0.0, 1.0])), "a", 1.0)
        with self.assertRaises(DomainError):
            doubling_point(space, WeightFunction(np.array([1.0, 1.0])), "a", 0.0)
        with self.assertRaises(DomainError):
            doubling_point(space, WeightFunction(np.array([1.0, 1.0, 1.0])), "a", 1.0)

    def test_verifier_rejects_a_bad_answer(self):
        space = line(0.0, 1.0, 2.0)
        M = WeightFunction(np.array([1.0, 3.0, 7.0]))
        self.assertFalse(verify_doubling(space, M, "a", 1.0, "a"))
        self.assertTrue(verify_doubling(space, M, "a", 1.0, "b"))


@pytest.mark.parametrize("seed", range(4))
def test_random_instances(seed: int) -> None:
    """Fifty random instances per seed pass the exhaustive verifier within the iteration bound.

    :param seed: The generator seed.
    """
    rng = np.random.default_rng(seed)
    for _ in range(50):
        n = int(rng.integers(1, 51))
        space = random_space(n, int(rng.integers(1, 4)), rng)
        M = random_weights(n, rng)
        y = int(rng.integers(n))
        k = 10.0 ** rng.uniform(-1.0, 1.0)
        result = doubling_point(space, M, y, k)
        assert verify_doubling(space, M, y, k, result.index)
        assert result.iterations <= iteration_bound(M, y)
        assert doubling_point(space, M, y, k) == result


def test_load_space() -> None:
    """Spaces are read from documents with points, dist and M."""
    space, M = load_space({"points": ["a", "b"], "dist": [[0, 2], [2, 0]], "M": [1, 4]})
    assert space.points == ["a", "b"]
    assert M[1] == 4.0
    assert math.isclose(doubling_point(space, M, "a", 4.0).ball_radius, 1.0)
    with pytest.raises(DomainError):
        load_space({"points": ["a"], "dist": [[0]]})


def test_random_space_needs_points() -> None:
    """Empty samples are refused."""
    with pytest.raises(DomainError):
        random_space(0, 2, np.random.default_rng(0))
