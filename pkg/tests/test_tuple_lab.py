from math import prod

import numpy as np
import pytest

from acmpy.exact_arith import ZERO, rat1_make
from acmpy.exceptions import RelationError
from acmpy.settings import DEFAULTS
from acmpy.skew_forms import SkewQZ, sigma, standard_block
from acmpy.tuple_lab import (
    ACTuple,
    SpectralData,
    build_for_dimension,
    build_zd,
    char_poly,
    char_poly_check,
    commutator,
    conjugate,
    extract_canonical_basis,
    normalized_orbit,
    random_unitary,
    random_zd_parameters,
    rho_classify,
    verify_relations,
)

HALF, THIRD = rat1_make(1, 2), rat1_make(1, 3)

BLOCK_CHOICES = [
    [HALF],
    [THIRD],
    [rat1_make(1, 4)],
    [rat1_make(5, 6)],
    [HALF, HALF],
    [HALF, THIRD],
    [rat1_make(2, 3), THIRD],
    [rat1_make(3, 4), HALF],
]


def _random_case(rng: np.random.Generator, max_m: int, max_l: int = 2):
    while True:
        ds = BLOCK_CHOICES[int(rng.integers(len(BLOCK_CHOICES)))]
        t = len(ds)
        n = 2 * t + int(rng.integers(0, 3))
        l = int(rng.integers(1, max_l + 1))
        if l * prod(d.den for d in ds) <= max_m:
            return ds, n, l


def test_pauli_pair():
    X, Z = build_zd([HALF], 2).mats
    assert np.allclose(X, [[0, 1], [1, 0]])
    assert np.allclose(Z, [[1, 0], [0, -1]])
    assert np.allclose(commutator(X, Z), -np.eye(2))


def test_six_dimensional_example():
    ds = [HALF, THIRD]
    tup = build_zd(ds, 5)
    assert (tup.n, tup.m) == (5, 6)
    assert tup.metadata["unitarity_defect"] < 1e-12
    D = standard_block(ds, 5)
    assert verify_relations(tup, D, 1e-9).passed
    assert rho_classify(tup) == D
    assert char_poly_check(tup, SpectralData.from_parameters(ds, 5, 1)).passed


def test_random_builds_round_trip():
    rng = np.random.default_rng(0)
    for _ in range(100):
        ds, n, l = _random_case(rng, 24)
        alphas, betas = random_zd_parameters(ds, n, l, rng)
        tup = build_zd(ds, n, l, alphas, betas)
        D = standard_block(ds, n)
        report = verify_relations(tup, D, 1e-9)
        assert report.passed, report.failures
        assert rho_classify(tup, tol=1e-9) == D
        sd = SpectralData.from_parameters(ds, n, l, alphas, betas)
        assert char_poly_check(tup, sd, 1e-6).passed


def test_build_for_dimension():
    ds = [HALF, THIRD]
    assert build_for_dimension(ds, 5, 12).m == 12
    with pytest.raises(ValueError):
        build_for_dimension(ds, 5, 7)
    with pytest.raises(ValueError):
        build_zd([HALF, THIRD], 3)
    with pytest.raises(ValueError):
        build_zd([ZERO], 2)
    with pytest.raises(ValueError):
        build_zd([HALF], 3, 1, alphas=[[0.1]])


def test_commuting_tuple_classifies_to_zero():
    tup = build_zd([], 3, 4, alphas=[[0.1, 0.2, 0.3], [0.4, 0.5, 0.6], [0, 0, 0], [0.7, 0.8, 0.9]])
    assert rho_classify(tup) == SkewQZ.zero(3)
    U = random_unitary(4, 5)
    assert rho_classify(conjugate(tup, U)) == SkewQZ.zero(3)


def test_conjugate_random_classify():
    ds = [rat1_make(1, 4), HALF]
    tup = build_zd(ds, 5, 2, *random_zd_parameters(ds, 5, 2, np.random.default_rng(1)))
    conjugated = conjugate(tup, random_unitary(tup.m, 1))
    assert conjugated.unitarity_defect() < 1e-9
    assert rho_classify(conjugated) == standard_block(ds, 5)
    with pytest.raises(ValueError):
        conjugate(tup, 2 * np.eye(tup.m))


def test_non_scalar_commutator():
    A, B = random_unitary(3, 0), random_unitary(3, 1)
    tup = ACTuple(2, 3, [A, B])
    with pytest.raises(RelationError, match=r"\[A_1, A_2\]"):
        rho_classify(tup)
    report = verify_relations(tup, SkewQZ.zero(2))
    assert not report.passed
    assert report.failures == [(1, 2)]


def test_perturbed_tuple_fails_verification():
    ds = [HALF, THIRD]
    tup = build_zd(ds, 5)
    mats = list(tup.mats)
    mats[2] = mats[2] @ np.diag(np.exp(1e-4j * np.arange(6)))
    report = verify_relations(ACTuple(5, 6, mats), standard_block(ds, 5), 1e-9)
    assert not report.passed
    assert all(3 in pair for pair in report.failures)


def test_spectral_round_trip():
    rng = np.random.default_rng(2024)
    for case in range(25):
        ds, n, l = _random_case(rng, 24, 4)
        alphas, betas = random_zd_parameters(ds, n, l, rng)
        original = build_zd(ds, n, l, alphas, betas)
        tup = conjugate(original, random_unitary(original.m, case))
        D = standard_block(ds, n)

        sd = extract_canonical_basis(tup, D, 1e-6)
        assert sd.l == l and sd.orders == tuple(d.den for d in ds)
        assert np.allclose(sd.basis.conj().T @ sd.basis, np.eye(tup.m), atol=1e-8)
        assert char_poly_check(tup, sd, 1e-6).passed

        expected = SpectralData.from_parameters(ds, n, l, alphas, betas)
        assert np.allclose(normalized_orbit(sd), normalized_orbit(expected), atol=1e-6)

        rebuilt = build_zd(ds, n, l, sd.alphas, sd.betas)
        for A, B in zip(original.mats, rebuilt.mats):
            assert np.max(np.abs(char_poly(A) - char_poly(B))) < 1e-6


def test_extracted_basis_conjugates_into_standard_family():
    ds = [HALF, THIRD]
    rng = np.random.default_rng(3)
    alphas, betas = random_zd_parameters(ds, 5, 1, rng)
    tup = conjugate(build_zd(ds, 5, 1, alphas, betas), random_unitary(6, 3))
    sd = extract_canonical_basis(tup, standard_block(ds, 5))
    rebuilt = build_zd(ds, 5, 1, sd.alphas, sd.betas)
    V = sd.basis
    for A, B in zip(tup.mats, rebuilt.mats):
        assert np.allclose(V.conj().T @ A @ V, B, atol=1e-6)


def test_extract_errors():
    tup = build_zd([HALF], 2)
    not_block = SkewQZ.from_numerators([[0, 0, 1], [0, 0, 0], [-1, 0, 0]], 2)
    with pytest.raises(ValueError):
        extract_canonical_basis(build_zd([HALF], 3), not_block)
    with pytest.raises(RelationError):
        extract_canonical_basis(tup, standard_block([THIRD], 2))


def test_normalized_orbit_ignores_zd_action():
    ds = [THIRD]
    alphas = [[rat1_make(1, 12), rat1_make(1, 5)]]
    shifted = [[rat1_make(1, 12) + THIRD, rat1_make(1, 5)]]
    betas = [[rat1_make(1, 7)]]
    a = SpectralData.from_parameters(ds, 3, 1, alphas, betas)
    b = SpectralData.from_parameters(ds, 3, 1, shifted, betas)
    assert np.allclose(normalized_orbit(a), normalized_orbit(b))
    c = SpectralData.from_parameters(ds, 3, 1, [[rat1_make(1, 6), rat1_make(1, 5)]], betas)
    assert not np.allclose(normalized_orbit(a), normalized_orbit(c))


def test_classified_sigma_divides_dimension():
    rng = np.random.default_rng(17)
    for case in range(30):
        ds, n, l = _random_case(rng, 16)
        tup = build_zd(ds, n, l, *random_zd_parameters(ds, n, l, rng))
        D = rho_classify(conjugate(tup, random_unitary(tup.m, 100 + case)), tol=1e-9)
        assert tup.m % sigma(D) == 0


def test_spectral_round_trip_at_dimension_24():
    rng = np.random.default_rng(24)
    for ds, l in [([HALF, THIRD], 4), ([rat1_make(3, 4), HALF], 3)]:
        alphas, betas = random_zd_parameters(ds, 5, l, rng)
        tup = conjugate(build_zd(ds, 5, l, alphas, betas), random_unitary(24, l))
        assert tup.m == 24
        sd = extract_canonical_basis(tup, standard_block(ds, 5), 1e-6)
        assert char_poly_check(tup, sd, 1e-6).passed
        expected = SpectralData.from_parameters(ds, 5, l, alphas, betas)
        assert np.allclose(normalized_orbit(sd), normalized_orbit(expected), atol=1e-6)


def test_random_builders_default_to_settings_seed():
    ds = [HALF, THIRD]
    seeded = random_zd_parameters(ds, 5, 2, np.random.default_rng(DEFAULTS.seed))
    assert random_zd_parameters(ds, 5, 2) == seeded
    assert np.array_equal(random_unitary(4), random_unitary(4, DEFAULTS.seed))
    assert np.array_equal(random_unitary(1), random_unitary(1, DEFAULTS.seed))
