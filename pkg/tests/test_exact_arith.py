import pytest

from acmpy.exact_arith import (
    ZERO,
    Rat1,
    binomial,
    circular_distance,
    euler_phi,
    lcm_all,
    rat1_add,
    rat1_make,
    rat1_neg,
    rat1_order,
    rat1_scale,
    snap_to_rat1,
    subgroup_order,
)
from acmpy.exceptions import ResourceCapExceeded


def test_rat1_make():
    assert rat1_make(7, 6) == Rat1(1, 6)
    assert rat1_make(-1, 2) == Rat1(1, 2)
    assert rat1_make(0, 5) == ZERO == Rat1(0, 1)
    assert rat1_make(4, -6) == Rat1(1, 3)
    with pytest.raises(ValueError):
        rat1_make(1, 0)


def test_rat1_rejects_non_canonical_fields():
    for num, den in [(2, 4), (3, 2), (-1, 2), (0, 0)]:
        with pytest.raises(ValueError):
            Rat1(num, den)


def test_group_operations():
    assert rat1_add(rat1_make(1, 2), rat1_make(2, 3)) == rat1_make(1, 6)
    assert rat1_neg(rat1_make(1, 3)) == rat1_make(2, 3)
    assert rat1_scale(3, rat1_make(1, 6)) == rat1_make(1, 2)
    assert rat1_scale(-2, rat1_make(1, 4)) == rat1_make(1, 2)
    assert rat1_make(1, 2) + rat1_make(1, 2) == ZERO
    assert rat1_make(1, 3) - rat1_make(2, 3) == rat1_make(2, 3)
    assert 4 * rat1_make(1, 4) == ZERO
    assert -ZERO == ZERO


def test_rat1_order():
    assert rat1_order(rat1_make(3, 4)) == 4
    assert rat1_order(rat1_make(2, 6)) == 3
    assert rat1_order(ZERO) == 1
    x = rat1_make(5, 12)
    assert rat1_scale(rat1_order(x), x) == ZERO
    assert all(rat1_scale(k, x) != ZERO for k in range(1, rat1_order(x)))


def test_rat1_conversions():
    x = rat1_make(1, 4)
    assert float(x) == 0.25
    assert x.to_angle() == 0.25
    assert abs(x.root_of_unity() - 1j) < 1e-15
    assert Rat1.from_json(x.to_json()) == x
    assert str(x) == "1/4"
    assert str(ZERO) == "0"
    assert not ZERO and x


def test_snap_to_rat1():
    snapped, err = snap_to_rat1(1 / 3 + 1e-12, 100)
    assert snapped == rat1_make(1, 3)
    assert err < 1e-11
    snapped, err = snap_to_rat1(-0.25, 10)
    assert snapped == rat1_make(3, 4)
    snapped, _ = snap_to_rat1(0.999999999999, 10)
    assert snapped == ZERO
    with pytest.raises(ValueError):
        snap_to_rat1(0.5, 0)


def test_circular_distance():
    assert circular_distance(0.99, 0.01) == pytest.approx(0.02)
    assert circular_distance(0.25, 0.75) == pytest.approx(0.5)


def test_number_theory_helpers():
    assert [euler_phi(k) for k in range(1, 11)] == [1, 1, 2, 2, 4, 2, 6, 4, 6, 4]
    assert binomial(5, 2) == 10
    assert binomial(2, 5) == 0
    assert binomial(0, 0) == 1
    with pytest.raises(ValueError):
        binomial(-1, 0)
    assert lcm_all([4, 6, 10]) == 60
    assert lcm_all([]) == 1


def test_subgroup_order():
    assert subgroup_order([[1, 0], [0, 1]], 6) == 36
    assert subgroup_order([[2, 0], [0, 3]], 6) == 6
    assert subgroup_order([[2, 2], [4, 4]], 6) == 3
    assert subgroup_order([], 5) == 1
    assert subgroup_order([[0, 0, 0]], 7) == 1


def test_subgroup_order_cap():
    with pytest.raises(ResourceCapExceeded):
        subgroup_order([[1, 0], [0, 1]], 10, cap=50)
