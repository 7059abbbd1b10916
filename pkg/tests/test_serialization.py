import json
import os

import numpy as np

from acmpy.census import brute_force_census, formula_census
from acmpy.exact_arith import ZERO, rat1_make
from acmpy.gamma_spaces import (
    PolySpec,
    Rank1Form,
    Root,
    describe_moduli,
    f_decompose,
    omega_analysis,
    omega_matrix,
)
from acmpy.serialization import (
    census_from_dict,
    census_to_dict,
    dumps,
    extension_from_dict,
    extension_to_dict,
    f_decomposition_from_dict,
    f_decomposition_to_dict,
    load_json,
    moduli_from_dict,
    moduli_to_dict,
    omega_analysis_from_dict,
    omega_analysis_to_dict,
    poly_spec_from_dict,
    poly_spec_to_dict,
    rat1_from_json,
    skew_qz_from_dict,
    skew_qz_to_dict,
    skew_z_from_dict,
    skew_z_to_dict,
    spectral_data_from_dict,
    spectral_data_to_dict,
    tuple_from_dict,
    tuple_to_dict,
)
from acmpy.skew_forms import SkewQZ, SkewZ, standard_block
from acmpy.tuple_lab import SpectralData, build_zd, random_zd_parameters

from . import C

HALF, THIRD = rat1_make(1, 2), rat1_make(1, 3)


def _reparse(payload):
    return json.loads(dumps(payload))


def test_rat1_from_json():
    assert rat1_from_json("5/6") == rat1_make(5, 6)
    assert rat1_from_json([-1, 3]) == rat1_make(2, 3)
    assert rat1_from_json(0) == ZERO


def test_skew_matrices():
    D = standard_block([HALF, THIRD], 5)
    assert skew_qz_from_dict(_reparse(skew_qz_to_dict(D))) == D
    assert skew_qz_from_dict(load_json(os.path.join(C.DATA_DIR, "d5_half_third.json"))) == D
    w = SkewZ.from_upper(4, {(0, 1): 2, (2, 3): -6, (0, 3): 1})
    assert skew_z_from_dict(_reparse(skew_z_to_dict(w))) == w


def test_census_reports():
    for report in [formula_census(3, 4), brute_force_census(2, 6)]:
        assert census_from_dict(_reparse(census_to_dict(report))) == report


def test_tuple_and_spectral_data():
    ds = [rat1_make(1, 4), HALF]
    alphas, betas = random_zd_parameters(ds, 5, 2, np.random.default_rng(4))
    tup = build_zd(ds, 5, 2, alphas, betas)
    parsed = tuple_from_dict(_reparse(tuple_to_dict(tup)))
    assert (parsed.n, parsed.m) == (tup.n, tup.m)
    assert all(np.array_equal(A, B) for A, B in zip(parsed.mats, tup.mats))
    assert parsed.metadata["ds"] == ["1/4", "1/2"]

    sd = SpectralData.from_parameters(ds, 5, 2, alphas, betas)
    parsed = spectral_data_from_dict(_reparse(spectral_data_to_dict(sd)))
    assert (parsed.t, parsed.orders, parsed.l) == (sd.t, sd.orders, sd.l)
    assert np.array_equal(parsed.alphas, sd.alphas)
    assert np.array_equal(parsed.betas, sd.betas)
    assert np.array_equal(parsed.basis, sd.basis)


def test_gamma_payloads():
    with open(os.path.join(C.DATA_DIR, "extension_example.json")) as f:
        g = extension_from_dict(json.load(f))
    assert extension_from_dict(_reparse(extension_to_dict(g))) == g

    analysis = omega_analysis(omega_matrix(g))
    parsed = omega_analysis_from_dict(_reparse(omega_analysis_to_dict(analysis)))
    assert parsed == analysis
    assert (parsed.B, parsed.C, parsed.P) == (
        C.OMEGA_EXAMPLE_B,
        C.OMEGA_EXAMPLE_C,
        C.OMEGA_EXAMPLE_P,
    )

    decomp = f_decompose(g, [([ZERO] * 4, 2), ([HALF, ZERO, ZERO, ZERO], 1)])
    assert f_decomposition_from_dict(_reparse(f_decomposition_to_dict(decomp))) == decomp

    form = Rank1Form(1, (1,))
    p = PolySpec(3, (Root(1, 0, 1), Root(2, 1, 2)))
    assert poly_spec_from_dict(_reparse(poly_spec_to_dict(p))) == p
    moduli = describe_moduli(form, p)
    assert moduli_from_dict(_reparse(moduli_to_dict(moduli))) == moduli
    empty = moduli_from_dict({"empty": True, "factors": []})
    assert str(empty) == "empty"


def test_zero_matrix_payload():
    D = SkewQZ.zero(3)
    data = _reparse(skew_qz_to_dict(D))
    assert data["entries"][0] == [[0, 1]] * 3
    assert skew_qz_from_dict(data) == D
