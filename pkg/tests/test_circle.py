import math

import numpy as np
import pytest

from toruslab import (
    BudgetError,
    GOLDEN_ROTATION,
    QuadraticIrrational,
    SILVER_ROTATION,
    compose_rotation,
    continued_fraction,
    inverse_eval,
    lift_eval,
    near_rational,
    rationally_independent,
    rigid_lift,
    rotation_number,
)
from toruslab.circle import bisection_inverse, split_unit


def test_rigid_lift_basic():
    lift = rigid_lift(0.25)
    assert lift_eval(lift, 0.9) == 0.9 + 0.25
    assert inverse_eval(lift, 1.15) == pytest.approx(0.9, abs=1e-15)


def test_equivariance_rigid(rng):
    lift = rigid_lift(GOLDEN_ROTATION.value)
    for x in rng.uniform(-3, 3, size=1000):
        assert abs(lift.eval(x + 1.0) - (lift.eval(x) + 1.0)) <= 1e-12


def test_monotonicity_rigid(rng):
    lift = rigid_lift(0.37)
    xs = np.sort(rng.uniform(0, 1, size=1000))
    vals = [lift.eval(float(x)) for x in xs]
    for a, b, va, vb in zip(xs, xs[1:], vals, vals[1:]):
        if b - a >= 1e-9:
            assert va < vb


def test_inverse_round_trip_rigid(rng):
    lift = rigid_lift(0.25)
    for x in rng.uniform(0, 1, size=1000):
        assert abs(inverse_eval(lift, lift_eval(lift, float(x))) - x) <= 1e-9


def test_split_unit_edge():
    k, u = split_unit(-5e-17)
    assert 0.0 <= u < 1.0
    assert k + u == pytest.approx(-5e-17, abs=1e-15)


def test_compose_rotation_identity():
    lift = rigid_lift(0.3)
    same = compose_rotation(lift, 0.0)
    for x in (0.0, 0.2, 0.9):
        assert same.eval(x) == lift.eval(x)


def test_compose_rotation_rigid():
    lift = compose_rotation(rigid_lift(0.3), 0.2)
    assert lift.kind == "rigid"
    for x in (0.0, 0.41, 0.99):
        assert lift.eval(x) == pytest.approx(x + 0.5, abs=1e-15)


def test_compose_rotation_validates():
    with pytest.raises(ValueError):
        compose_rotation(rigid_lift(0.3), 1.0)
    with pytest.raises(ValueError):
        compose_rotation(rigid_lift(0.3), -0.1)


def test_rotation_number_rigid_exact():
    alpha = GOLDEN_ROTATION.value
    lift = rigid_lift(alpha)
    for n in (10**2, 10**3, 10**4):
        est, bound = rotation_number(lift, n, x0=0.3)
        assert bound == 1.0 / n
        assert abs(est - alpha) <= bound


def test_rotation_number_requires_iterations():
    with pytest.raises(ValueError):
        rotation_number(rigid_lift(0.1), 0)


def test_bisection_inverse_fallback():
    lift = rigid_lift(0.37)
    x = bisection_inverse(lift.eval, 1.62)
    assert abs(lift.eval(x) - 1.62) <= 1e-9


def test_bisection_inverse_budget():
    # deliberately broken, non-monotone data
    def broken(x):
        return -x

    with pytest.raises(BudgetError):
        bisection_inverse(broken, 0.5, max_expand=4)


def test_quadratic_irrational_values():
    assert GOLDEN_ROTATION.value == pytest.approx((math.sqrt(5) - 1) / 2, abs=1e-16)
    assert SILVER_ROTATION.value == pytest.approx(math.sqrt(2) - 1, abs=1e-16)
    assert GOLDEN_ROTATION.is_irrational
    assert not QuadraticIrrational(1, 0, 2, 3).is_irrational
    assert not QuadraticIrrational(1, 2, 9, 4).is_irrational


def test_rational_independence():
    assert rationally_independent(GOLDEN_ROTATION, SILVER_ROTATION)
    assert not rationally_independent(GOLDEN_ROTATION, GOLDEN_ROTATION)
    # same squarefree core: sqrt(8) = 2 sqrt(2)
    assert not rationally_independent(SILVER_ROTATION, QuadraticIrrational(0, 1, 8, 2))


def test_continued_fraction_golden():
    terms = continued_fraction(GOLDEN_ROTATION.value, 12)
    assert terms[0] == 0
    assert all(t == 1 for t in terms[1:10])


def test_near_rational_heuristic():
    assert near_rational(GOLDEN_ROTATION.value) is None
    assert near_rational(SILVER_ROTATION.value) is None
    assert near_rational(0.5) == (1, 2)
    assert near_rational(2 / 7 + 1e-15) == (2, 7)
