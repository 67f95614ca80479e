import math

import numpy as np
import pytest

import toruslab as tl
from toruslab import (
    DenjoySpec,
    GOLDEN_ROTATION,
    QuadraticIrrational,
    SILVER_ROTATION,
    build_denjoy,
    compose_rotation,
    rotation_number,
)


def test_spec_closed_forms(golden_denjoy):
    spec = golden_denjoy.spec
    assert spec.total_gap_length == pytest.approx(0.5, abs=1e-12)
    assert spec.tail < 1e-8
    # closed-form tail vs direct summation of the schedule
    ns = np.arange(2001, 300000)
    direct = 2.0 * spec.gap_coefficient * np.sum((ns + 1.0) ** -4.0)
    assert spec.tail == pytest.approx(direct, rel=1e-6)


def test_spec_validation_rejects_bad_parameters():
    with pytest.raises(ValueError):
        DenjoySpec.with_total_gap_length(GOLDEN_ROTATION, 1.2, 4.0, 2000)
    with pytest.raises(ValueError):
        DenjoySpec.with_total_gap_length(GOLDEN_ROTATION, 0.5, 0.9, 2000)
    with pytest.raises(ValueError):
        # tail too heavy at this truncation
        build_denjoy(DenjoySpec.with_total_gap_length(GOLDEN_ROTATION, 0.5, 1.5, 50))
    with pytest.raises(ValueError):
        # rational rotation number
        build_denjoy(DenjoySpec(QuadraticIrrational(1, 0, 2, 3), 0.1, 4.0, 100))


def test_gap_table_structure(golden_denjoy):
    d = golden_denjoy
    assert d.num_gaps == 4001
    total = math.fsum(d.lens.tolist())
    assert total == pytest.approx(d.spec.total_gap_length - d.spec.tail, abs=1e-12)
    # gaps pairwise disjoint and inside [0, 1)
    assert np.all(d.lefts[1:] > d.rights[:-1])
    assert d.lefts[0] >= 0.0 and d.rights[-1] < 1.0


def test_gap_endpoints_map_to_endpoints(golden_denjoy):
    d = golden_denjoy
    ev = d.lift.eval
    for n in range(-1999, 1999, 13):
        left, right = d.gap_interval(n)
        nleft, nright = d.gap_interval(n + 1)
        el, er = ev(left), ev(right)
        assert abs(el - math.floor(el) - nleft) <= 1e-15
        assert abs(er - math.floor(er) - nright) <= 1e-15


def test_gap_affine_transport(golden_denjoy, rng):
    d = golden_denjoy
    ev = d.lift.eval
    for _ in range(400):
        n = int(rng.integers(-1999, 1999))
        left, right = d.gap_interval(n)
        u = float(rng.uniform(0.1, 0.9))
        t = left + u * (right - left)
        image = ev(t) % 1.0
        nleft, nright = d.gap_interval(n + 1)
        assert nleft < image < nright
        # affine: relative position is preserved
        assert (image - nleft) / (nright - nleft) == pytest.approx(u, abs=1e-9)


def test_gap_shift_property(golden_denjoy):
    d = golden_denjoy
    ev = d.lift.eval
    for n in range(-1998, 1998):
        loc = d.gap_locate(ev(d.gap_midpoint(n)))
        assert loc.kind == "gap" and loc.index == n + 1


def test_wandering_gap_indices(golden_denjoy):
    # the gap index simply increments, so forward images of I_0 never
    # return to I_0: verified on the index dynamics for 10^5 steps and on
    # the map itself while the orbit stays enumerated
    assert all(0 + k != 0 for k in range(1, 10**5 + 1))
    d = golden_denjoy
    t = d.gap_midpoint(0)
    left0, right0 = d.gap_interval(0)
    for _ in range(1500):
        t = d.lift.eval(t) % 1.0
        assert not (left0 < t < right0)


def test_gap_locate_cases(golden_denjoy, rng):
    d = golden_denjoy
    mid = d.gap_midpoint(0)
    loc = d.gap_locate(mid)
    assert loc.kind == "gap" and loc.index == 0
    left, right = d.gap_interval(0)
    assert loc.distance_to_minimal_set == pytest.approx(0.5 * (right - left), rel=1e-9)
    for endpoint in (left, right):
        eloc = d.gap_locate(endpoint)
        assert eloc.kind == "cantor"
        assert eloc.uncertainty == d.tail
    # image consistency: gap points remain gap points
    for _ in range(300):
        n = int(rng.integers(-1500, 1500))
        left, right = d.gap_interval(n)
        t = left + float(rng.uniform(0.2, 0.8)) * (right - left)
        img = d.lift.eval(t) % 1.0
        assert d.gap_locate(img).kind == "gap"


def test_inverse_round_trip(golden_denjoy, rng):
    d = golden_denjoy
    ev, inv = d.lift.eval, d.lift.inverse_eval
    xs = rng.uniform(0, 1, size=1000)
    assert max(abs(inv(ev(float(x))) - x) for x in xs) <= 1e-9
    ys = rng.uniform(0, 1, size=1000)
    assert max(abs(ev(inv(float(y))) - y) for y in ys) <= 1e-9
    # right endpoints invert onto right endpoints of the previous gap
    for n in range(-1000, 1000, 97):
        _, right = d.gap_interval(n)
        _, prev_right = d.gap_interval(n - 1)
        back = inv(right) % 1.0
        assert abs(back - prev_right) <= 1e-12


def test_inverse_lands_in_previous_gap(golden_denjoy, rng):
    d = golden_denjoy
    for _ in range(200):
        n = int(rng.integers(-1500, 1500))
        left, right = d.gap_interval(n)
        t = left + float(rng.uniform(0.2, 0.8)) * (right - left)
        back = d.lift.inverse_eval(t) % 1.0
        assert d.gap_locate(back).index == n - 1


def test_monotonicity(golden_denjoy, rng):
    d = golden_denjoy
    xs = np.sort(rng.uniform(0, 1, size=2000))
    vals = [d.lift.eval(float(x)) for x in xs]
    for a, b, va, vb in zip(xs, xs[1:], vals, vals[1:]):
        if b - a >= 1e-9:
            assert va < vb


def test_equivariance(golden_denjoy, rng):
    ev = golden_denjoy.lift.eval
    for x in rng.uniform(0, 1, size=1000):
        for k in (-2, -1, 1, 2):
            assert abs(ev(x + k) - (ev(x) + k)) <= 1e-12


def test_vectorized_eval_matches_scalar(golden_denjoy, rng):
    d = golden_denjoy
    u = rng.uniform(0, 1, size=4000)
    vec = d.lift.eval_array(u)
    scal = np.array([d.lift.eval(float(x)) for x in u])
    assert np.array_equal(vec, scal)


def test_rotation_number_matches_prescription(golden_denjoy, silver_denjoy):
    for d, rho in ((golden_denjoy, GOLDEN_ROTATION.value),
                   (silver_denjoy, SILVER_ROTATION.value)):
        n = 10**5
        est, bound = rotation_number(d.lift, n, x0=0.123)
        assert abs(est - rho) <= 1.0 / n + 1e-6


def test_truncation_refinement_stability(rng):
    # doubling N changes evaluations by no more than a few tail widths
    spec1 = DenjoySpec.with_total_gap_length(GOLDEN_ROTATION, 0.5, 4.0, 400)
    spec2 = DenjoySpec.with_total_gap_length(GOLDEN_ROTATION, 0.5, 4.0, 800)
    d1, d2 = build_denjoy(spec1), build_denjoy(spec2)
    xs = rng.uniform(0, 1, size=1000)
    dev = max(abs(d1.lift.eval(float(x)) - d2.lift.eval(float(x))) for x in xs)
    assert dev <= 6.0 * spec1.tail


def test_composed_rotation_number_strictly_larger(silver_denjoy):
    # adding a rotation by 0.05 strictly raises the rotation number; the
    # two estimates separate beyond their combined error bounds
    n = 10**6
    base, bound = rotation_number(silver_denjoy.lift, n, 0.2)
    comp = compose_rotation(silver_denjoy.lift, 0.05)
    est, _ = rotation_number(comp, n, 0.2)
    assert est - base > 2.0 / n


def test_rotation_number_monotone_in_theta(silver_denjoy):
    n = 10**6
    thetas = (0.10, 0.11, 0.30)
    ests = [rotation_number(compose_rotation(silver_denjoy.lift, th), n, 0.4).estimate
            for th in thetas]
    for a, b in zip(ests, ests[1:]):
        assert a <= b + 2e-6
