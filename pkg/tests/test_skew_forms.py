import json
import os
import warnings
from collections import Counter
from functools import reduce
from math import gcd

import numpy as np
import pytest

from acmpy.exact_arith import ZERO, rat1_make
from acmpy.exceptions import NotCongruentWarning
from acmpy.serialization import skew_qz_from_dict
from acmpy.settings import DEFAULTS
from acmpy.skew_forms import (
    SkewQZ,
    SkewZ,
    apply_congruence,
    block_matrix,
    block_parameters,
    congruence_normal_form_qz,
    integer_skew_normal_form,
    random_unimodular,
    row_space_order,
    sigma,
    skew_add,
    standard_block,
)

from . import C

HALF, THIRD = rat1_make(1, 2), rat1_make(1, 3)


def _random_skew(rng: np.random.Generator, n: int, modulus: int) -> SkewQZ:
    N = np.zeros((n, n), dtype=int)
    for i in range(n):
        for j in range(i + 1, n):
            N[i, j] = rng.integers(modulus)
            N[j, i] = -N[i, j]
    return SkewQZ.from_numerators(N.tolist(), modulus)


def test_skew_qz_validation():
    with pytest.raises(ValueError):
        SkewQZ(2, ((ZERO, THIRD), (THIRD, ZERO)))
    with pytest.raises(ValueError):
        SkewQZ(2, ((HALF, ZERO), (ZERO, ZERO)))
    with open(os.path.join(C.DATA_DIR, "not_skew.json")) as f:
        with pytest.raises(ValueError):
            skew_qz_from_dict(json.load(f))
    assert SkewQZ.zero(3).is_zero()


def test_skew_z_validation():
    with pytest.raises(ValueError):
        SkewZ(2, ((0, 1), (1, 0)))
    w = SkewZ.from_upper(3, {(0, 1): 2, (1, 2): -3})
    assert w[1, 0] == -2 and w[2, 1] == 3


def test_standard_block():
    D = standard_block([HALF, THIRD], 5)
    assert D[2, 0] == HALF and D[0, 2] == HALF
    assert D[3, 1] == THIRD and D[1, 3] == rat1_make(2, 3)
    assert D.is_standard_block()
    assert block_parameters(D) == (2, (HALF, THIRD))
    with pytest.raises(ValueError):
        standard_block([HALF, ZERO], 4)
    with pytest.raises(ValueError):
        standard_block([HALF, THIRD], 3)
    assert block_matrix([HALF, ZERO], 4)[3, 1] == ZERO


def test_block_parameters_of_zero_and_non_block():
    assert block_parameters(SkewQZ.zero(4)) == (0, ())
    D = SkewQZ.from_numerators([[0, 0, 1], [0, 0, 0], [-1, 0, 0]], 2)
    assert block_parameters(D) is None


def test_sigma_of_d5():
    with open(os.path.join(C.DATA_DIR, "d5_half_third.json")) as f:
        D = skew_qz_from_dict(json.load(f))
    assert D == standard_block([HALF, THIRD], 5)
    assert row_space_order(D) == 36
    assert sigma(D) == 6
    nf = congruence_normal_form_qz(D)
    assert nf.sigma == 6
    assert nf.orders == (6,)


def test_normal_form_of_zero_matrix():
    nf = congruence_normal_form_qz(SkewQZ.zero(4))
    assert nf.t == 0 and nf.sigma == 1
    assert sigma(SkewQZ.zero(4)) == 1


def test_normal_form_witness():
    rng = np.random.default_rng(1)
    for modulus in [2, 4, 6, 12]:
        for n in [2, 3, 4, 5]:
            D = _random_skew(rng, n, modulus)
            nf = congruence_normal_form_qz(D)
            assert apply_congruence(D, nf.transform) == standard_block(nf.ds, n)
            assert all(b % a == 0 for a, b in zip(nf.orders[1:], nf.orders))
            assert nf.sigma == sigma(D)


def test_congruence_invariance():
    rng = np.random.default_rng(0)
    for case in range(200):
        n = int(rng.integers(2, 6))
        modulus = int(rng.choice([2, 3, 4, 6, 8, 12]))
        D = _random_skew(rng, n, modulus)
        A = random_unimodular(n, rng)
        D_prime = apply_congruence(D, A)
        assert congruence_normal_form_qz(D_prime).orders == congruence_normal_form_qz(D).orders
        assert sigma(D_prime) == sigma(D)


def test_apply_congruence_warns_on_singular_matrix():
    D = standard_block([HALF], 2)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        apply_congruence(D, [[2, 0], [0, 1]])
    assert any(issubclass(w.category, NotCongruentWarning) for w in caught)
    with pytest.raises(ValueError):
        apply_congruence(D, [[1, 0, 0], [0, 1, 0], [0, 0, 1]])


def test_coprime_additivity():
    rng = np.random.default_rng(7)
    for _ in range(30):
        n = int(rng.integers(2, 6))
        D1 = _random_skew(rng, n, 4)
        D2 = _random_skew(rng, n, 9)
        assert sigma(skew_add(D1, D2)) == sigma(D1) * sigma(D2)


def test_integer_normal_form():
    w = SkewZ.from_upper(4, {(0, 1): 2, (0, 2): 4, (1, 3): 6, (2, 3): 2})
    nf = integer_skew_normal_form(w)
    A = np.array(nf.transform, dtype=object)
    W = np.array(w.entries, dtype=object)
    assert SkewZ(4, tuple(map(tuple, (A.T @ W @ A).tolist()))) == nf.block()
    assert all(c > 0 for c in nf.cs)
    assert all(b % a == 0 for a, b in zip(nf.cs, nf.cs[1:]))
    assert abs(round(float(np.linalg.det(np.array(nf.transform, dtype=float))))) == 1


def test_integer_normal_form_heisenberg():
    nf = integer_skew_normal_form(SkewZ.from_upper(2, {(0, 1): -3}))
    assert (nf.t, nf.cs) == (1, (3,))
    nf = integer_skew_normal_form(SkewZ.zero(3))
    assert (nf.t, nf.cs) == (0, ())


def test_integer_normal_form_invariants_under_unimodular_change():
    rng = np.random.default_rng(3)
    for _ in range(40):
        n = int(rng.integers(2, 6))
        values = {(i, j): int(rng.integers(-6, 7)) for i in range(n) for j in range(i + 1, n)}
        w = SkewZ.from_upper(n, values)
        A = np.array(random_unimodular(n, rng), dtype=object)
        W = np.array(w.entries, dtype=object)
        w2 = SkewZ(n, tuple(map(tuple, (A.T @ W @ A).tolist())))
        assert integer_skew_normal_form(w2).cs == integer_skew_normal_form(w).cs


def test_order_multiset_of_normal_form_census():
    rng = np.random.default_rng(11)
    orders = Counter()
    for _ in range(50):
        D = _random_skew(rng, 4, 2)
        orders[congruence_normal_form_qz(D).orders] += 1
    assert set(orders) <= {(), (2,), (2, 2)}


def test_row_space_lies_in_sigma_torsion():
    rng = np.random.default_rng(12)
    for _ in range(100):
        n = int(rng.integers(2, 5))
        modulus = int(rng.choice([5, 8, 9, 10, 12, 18]))
        D = _random_skew(rng, n, modulus)
        s = sigma(D)
        N = np.array(D.numerators(), dtype=int)
        M = D.modulus
        vectors = np.vstack([np.eye(n, dtype=int), rng.integers(-5, 6, size=(5, n))])
        assert np.all((s * (vectors @ N)) % M == 0)


def test_first_invariant_is_gcd_of_entries():
    rng = np.random.default_rng(13)
    for _ in range(60):
        n = int(rng.integers(2, 5))
        values = {(i, j): int(rng.integers(-9, 10)) for i in range(n) for j in range(i + 1, n)}
        nf = integer_skew_normal_form(SkewZ.from_upper(n, values))
        g = reduce(gcd, values.values(), 0)
        if g == 0:
            assert nf.cs == ()
        else:
            assert nf.cs[0] == g


@pytest.mark.parametrize("moduli", [(2, 3), (3, 4), (2, 5)])
def test_coprime_additivity_for_small_moduli(moduli):
    rng = np.random.default_rng(sum(moduli))
    for _ in range(40):
        n = int(rng.integers(2, 5))
        D1 = _random_skew(rng, n, moduli[0])
        D2 = _random_skew(rng, n, moduli[1])
        assert sigma(skew_add(D1, D2)) == sigma(D1) * sigma(D2)


def test_random_unimodular_defaults_to_settings_seed():
    expected = random_unimodular(4, np.random.default_rng(DEFAULTS.seed))
    assert random_unimodular(4) == expected
    assert abs(round(float(np.linalg.det(np.array(expected, dtype=float))))) == 1
