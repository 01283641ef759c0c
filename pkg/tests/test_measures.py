import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from gnet.errors import InputError
from gnet.geometry import SpaceDescriptor
from gnet.measures import (DiscreteMeasure, admissibility_check, ball_mass, jordan_decompose,
                           load_measure, measure_to_dict, normalize, total_variation)

weights = arrays(np.float64, st.integers(1, 30), elements=st.floats(-10, 10))


def _pts(n):
    return np.zeros((n, 2))


class TestTotalVariation:
    def test_signed(self):
        assert total_variation(DiscreteMeasure(_pts(2), [1.0, -0.5])) == 1.5

    def test_zero_measure(self):
        assert total_variation(DiscreteMeasure(_pts(3), np.zeros(3))) == 0.0

    def test_probability(self, rng):
        w = rng.dirichlet(np.ones(50))
        assert total_variation(DiscreteMeasure(_pts(50), w)) == pytest.approx(1.0)

    def test_length_mismatch(self):
        with pytest.raises(InputError):
            DiscreteMeasure(_pts(3), [1.0, 2.0])


class TestJordan:
    def test_all_positive(self):
        m = DiscreteMeasure(_pts(3), [1.0, 2.0, 0.5])
        pos, neg = jordan_decompose(m)
        np.testing.assert_array_equal(pos.weights, m.weights)
        assert total_variation(neg) == 0

    def test_plus_minus(self):
        pos, neg = jordan_decompose(DiscreteMeasure(_pts(2), [1.0, -1.0]))
        np.testing.assert_array_equal(pos.support().weights, [1.0])
        np.testing.assert_array_equal(neg.support().weights, [1.0])

    @given(weights)
    def test_tv_additive(self, w):
        m = DiscreteMeasure(_pts(w.size), w)
        pos, neg = jordan_decompose(m)
        np.testing.assert_array_equal(pos.weights - neg.weights, w)
        assert pos.is_nonnegative and neg.is_nonnegative
        # direct summation oracle
        assert total_variation(pos) + total_variation(neg) == pytest.approx(sum(abs(x) for x in w), rel=1e-12)


@given(weights.filter(lambda w: np.abs(w).sum() > 0))
def test_normalize_unit_tv(w):
    assert abs(total_variation(normalize(DiscreteMeasure(_pts(w.size), w))) - 1.0) <= 1e-14


class TestBallMass:
    def test_large_radius_is_tv(self, s2, rng):
        m = DiscreteMeasure(s2.uniform_sample(100, rng), rng.normal(size=100))
        assert ball_mass(s2, m, [0, 0, 1], math.pi) == pytest.approx(total_variation(m))

    def test_tiny_radius_is_zero(self, s2, rng):
        m = DiscreteMeasure.uniform(s2.uniform_sample(100, rng))
        x = np.array([0.0, 0.0, 1.0])
        d = np.arccos(np.clip(m.points @ x, -1, 1)).min()
        assert ball_mass(s2, m, x, d / 2) == 0.0

    def test_circle_quarter(self, circle_grid):
        s1 = SpaceDescriptor.sphere(1)
        m = DiscreteMeasure.uniform(circle_grid)
        # quarter arc, padded by half a grid step so no grid point sits on the boundary
        delta = math.pi / 4 + math.pi / 720
        # arc-length count oracle: grid offsets k with |k| degrees <= 45.5 degrees
        expected = sum(1 for k in range(-180, 180) if abs(k) <= 45.5) / 360
        assert ball_mass(s1, m, [1, 0], delta) == pytest.approx(expected, abs=1e-12)
        assert expected == pytest.approx(0.25, abs=0.01)

    def test_monotone_in_delta(self, s2, rng):
        m = DiscreteMeasure(s2.uniform_sample(300, rng), rng.normal(size=300))
        masses = [ball_mass(s2, m, [1, 0, 0], d) for d in np.linspace(0.01, 3.2, 40)]
        assert np.all(np.diff(masses) >= 0)

    def test_delta_positive(self, s2):
        with pytest.raises(InputError):
            ball_mass(s2, DiscreteMeasure.uniform([[0, 0, 1]]), [0, 0, 1], 0.0)


class TestAdmissibility:
    def test_circle(self, rng):
        th = rng.uniform(0, 2 * np.pi, 4096)
        m = DiscreteMeasure.uniform(np.column_stack([np.cos(th), np.sin(th)]))
        rep = admissibility_check(SpaceDescriptor.sphere(1), m, 64, np.geomspace(0.02, 0.5, 6), seed=1)
        assert 0.8 <= rep.q_hat <= 1.2
        assert rep.c_hat > 0

    def test_sphere(self, s2, rng):
        m = DiscreteMeasure.uniform(s2.uniform_sample(4096, rng))
        rep = admissibility_check(s2, m, 64, np.geomspace(0.05, 0.8, 6), seed=1)
        assert 1.7 <= rep.q_hat <= 2.3

    def test_single_atom(self, s2):
        rep = admissibility_check(s2, DiscreteMeasure.uniform([[0, 0, 1]]), 5, [0.01, 0.1, 1.0])
        assert rep.q_hat == pytest.approx(0.0, abs=1e-12)
        assert rep.max_violation == pytest.approx(1.0)

    def test_empty_support(self, s2):
        with pytest.raises(InputError):
            admissibility_check(s2, DiscreteMeasure([[0, 0, 1]], [0.0]), 5, [0.01, 0.1, 1.0])


class TestMeasureFiles:
    def test_round_trip(self, s2, rng, tmp_path):
        m = DiscreteMeasure(s2.uniform_sample(10, rng), rng.normal(size=10))
        path = tmp_path / "m.json"
        path.write_text(json.dumps(measure_to_dict(s2, m)))
        sp, back = load_measure(path)
        assert sp == s2
        np.testing.assert_array_equal(back.points, m.points)
        np.testing.assert_array_equal(back.weights, m.weights)

    def test_default_uniform_weights(self, tmp_path):
        path = tmp_path / "m.json"
        path.write_text(json.dumps({"space": {"kind": "cube", "Q": 2}, "points": [[0, 0], [0.5, 0.5]]}))
        _, m = load_measure(path)
        np.testing.assert_array_equal(m.weights, [0.5, 0.5])

    def test_missing_points(self, tmp_path):
        path = tmp_path / "m.json"
        path.write_text(json.dumps({"space": {"kind": "cube", "Q": 2}}))
        with pytest.raises(InputError):
            load_measure(path)
