import json
import os

from acmpy.cli import EXIT_CAP, EXIT_INPUT, EXIT_OK, EXIT_VERIFICATION, main
from acmpy.exact_arith import rat1_make
from acmpy.serialization import skew_qz_to_dict, skew_z_to_dict
from acmpy.skew_forms import SkewZ, standard_block

from . import C


def _run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, json.loads(out) if out.strip().startswith("{") else out


def _write(path, payload) -> str:
    with open(path, "w") as f:
        json.dump(payload, f)
    return str(path)


def test_census_with_oracle(capsys):
    code, result = _run(capsys, "census", "3", "2", "--oracle")
    assert code == EXIT_OK
    assert result["command"] == "census"
    assert result["output"]["total"] == "8"
    assert result["output"]["match"] is True
    assert result["output"]["oracle"]["total"] == "8"
    assert result["inputs"]["seed"] == 0


def test_census_trivial_and_csv(capsys):
    code, result = _run(capsys, "census", "2", "1")
    assert code == EXIT_OK and result["output"]["total"] == "1"
    code, text = _run(capsys, "census", "3", "2", "--format", "csv")
    assert code == EXIT_OK
    assert text.splitlines()[0] == "n,m,orders,sigma,count"


def test_census_cap(capsys):
    code, _ = _run(capsys, "census", "4", "4", "--oracle", "--cap", "10")
    assert code == EXIT_CAP


def test_normal_form(capsys, tmp_path):
    code, result = _run(capsys, "normal-form", os.path.join(C.DATA_DIR, "d5_half_third.json"))
    assert code == EXIT_OK
    assert result["output"]["sigma"] == 6 and result["output"]["orders"] == [6]

    zero = _write(tmp_path / "zero.json", skew_qz_to_dict(standard_block([], 4)))
    code, result = _run(capsys, "normal-form", zero)
    assert result["output"]["t"] == 0 and result["output"]["sigma"] == 1

    w = _write(tmp_path / "w.json", skew_z_to_dict(SkewZ.from_upper(2, {(0, 1): -3})))
    code, result = _run(capsys, "normal-form", w, "--ring", "z")
    assert code == EXIT_OK
    assert (result["output"]["t"], result["output"]["cs"]) == (1, [3])


def test_normal_form_rejects_non_skew(capsys):
    code, _ = _run(capsys, "normal-form", os.path.join(C.DATA_DIR, "not_skew.json"))
    assert code == EXIT_INPUT
    code, _ = _run(capsys, "normal-form", "does-not-exist.json")
    assert code == EXIT_INPUT


def test_tuple_pipeline(capsys, tmp_path):
    built = str(tmp_path / "tuple.json")
    code, _ = _run(
        capsys,
        "build-tuple",
        "--ds",
        "1/2,1/3",
        "--n",
        "5",
        "--random-angles",
        "--conjugate-random",
        "--seed",
        "3",
        "-o",
        built,
    )
    assert code == EXIT_OK
    with open(built) as f:
        assert json.load(f)["output"]["tuple"]["m"] == 6

    code, result = _run(capsys, "verify-tuple", built)
    assert code == EXIT_OK and result["output"]["passed"]

    code, result = _run(capsys, "classify", built)
    assert code == EXIT_OK
    assert result["output"]["normal_form"]["sigma"] == 6

    code, result = _run(capsys, "extract", built)
    assert code == EXIT_OK
    assert result["output"]["char_poly"]["passed"]
    assert result["output"]["spectral_data"]["orders"] == [2, 3]


def test_verify_against_other_matrix(capsys, tmp_path):
    built = str(tmp_path / "tuple.json")
    assert main(["build-tuple", "--ds", "1/2", "--n", "5", "-o", built]) == EXIT_OK
    code, result = _run(
        capsys, "verify-tuple", built, "--against", os.path.join(C.DATA_DIR, "d5_half_third.json")
    )
    assert code == EXIT_VERIFICATION
    assert not result["output"]["passed"]


def test_build_tuple_errors(capsys):
    code, _ = _run(capsys, "build-tuple", "--ds", "1/2,1/3", "--n", "5", "--m", "7")
    assert code == EXIT_INPUT
    code, _ = _run(capsys, "build-tuple", "--ds", "1/2", "--n", "2", "--format", "csv")
    assert code == EXIT_INPUT


def test_gamma_rank1(capsys):
    code, result = _run(capsys, "gamma", "--rank1", "1,1", "5", "--count")
    assert code == EXIT_OK and result["output"]["count"] == "13"
    code, result = _run(capsys, "gamma", "--rank1", "1,1", "3", "--enumerate", "--moduli")
    assert len(result["output"]["polynomials"]) == 4
    assert result["output"]["moduli"][0]["moduli"]["symbol"] == "Sym^1(T^2) x Sym^1(T^2)"


def test_gamma_extension(capsys, tmp_path):
    ext = os.path.join(C.DATA_DIR, "extension_example.json")
    code, result = _run(capsys, "gamma", "--ext", ext, "--omega")
    assert code == EXIT_OK
    omega = result["output"]["omega"]
    assert (omega["B"], omega["C"], omega["P"]) == ("12", "3", "4")
    assert omega["matrix"] == C.OMEGA_EXAMPLE

    code, _ = _run(capsys, "gamma", "--ext", ext, "3", "--count")
    assert code == EXIT_INPUT

    chained = _write(tmp_path / "gamma.json", result)
    code, again = _run(capsys, "gamma", "--ext", chained, "--omega")
    assert code == EXIT_OK
    assert again["output"]["extension"] == result["output"]["extension"]
    assert again["output"]["omega"]["P"] == "4"


def test_gamma_fiber_and_eigendata(capsys, tmp_path):
    ext = os.path.join(C.DATA_DIR, "heisenberg.json")
    D = _write(tmp_path / "D.json", skew_qz_to_dict(standard_block([rat1_make(1, 2)], 2)))
    eigendata = _write(
        tmp_path / "eig.json", [{"lam": ["1/2"], "dim": 2}, {"lam": ["0"], "dim": 1}]
    )
    code, result = _run(capsys, "gamma", "--ext", ext, "--fiber", D, "--eigendata", eigendata)
    assert code == EXIT_OK
    output = result["output"]
    assert output["fiber"]["components"] == 1
    assert output["fiber_oracle"]["passed"]
    assert output["rank_r_count"] == "1"
    assert output["decomposition"]["m"] == 3
