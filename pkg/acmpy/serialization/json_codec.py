"""JSON representations of the acmpy data types."""

import json
import os
from dataclasses import asdict
from fractions import Fraction
from typing import Any, List, Union

import numpy as np

from ..census import CensusReport
from ..exact_arith import Rat1, rat1_make
from ..gamma_spaces import (
    CentralExtension,
    FDecomposition,
    FiberDescriptor,
    FiberOracleResult,
    ModuliDescriptor,
    OmegaAnalysis,
    PolySpec,
    Root,
    TorusFactor,
)
from ..skew_forms import NormalFormQZ, NormalFormZ, SkewQZ, SkewZ
from ..tuple_lab import ACTuple, CharPolyReport, RelationReport, SpectralData

__all__ = [
    "rat1_from_json",
    "skew_qz_to_dict",
    "skew_qz_from_dict",
    "skew_z_to_dict",
    "skew_z_from_dict",
    "normal_form_qz_to_dict",
    "normal_form_z_to_dict",
    "census_to_dict",
    "census_from_dict",
    "tuple_to_dict",
    "tuple_from_dict",
    "spectral_data_to_dict",
    "spectral_data_from_dict",
    "relation_report_to_dict",
    "char_poly_report_to_dict",
    "extension_to_dict",
    "extension_from_dict",
    "poly_spec_to_dict",
    "poly_spec_from_dict",
    "moduli_to_dict",
    "moduli_from_dict",
    "omega_analysis_to_dict",
    "omega_analysis_from_dict",
    "fiber_to_dict",
    "fiber_oracle_to_dict",
    "f_decomposition_to_dict",
    "f_decomposition_from_dict",
    "dumps",
    "load_json",
]


def rat1_from_json(value: Union[int, str, List[int]]) -> Rat1:
    """Accept ``[num, den]``, ``"num/den"`` or an integer (the zero class)."""
    if isinstance(value, str):
        num, _, den = value.partition("/")
        return rat1_make(int(num), int(den) if den else 1)
    if isinstance(value, int):
        return rat1_make(value, 1)
    return Rat1.from_json(value)


def skew_qz_to_dict(D: SkewQZ) -> dict:
    return {"n": D.n, "entries": [[x.to_json() for x in row] for row in D.entries]}


def skew_qz_from_dict(data: dict) -> SkewQZ:
    entries = data["entries"]
    n = int(data.get("n", len(entries)))
    return SkewQZ(n, tuple(tuple(rat1_from_json(x) for x in row) for row in entries))


def skew_z_to_dict(w: SkewZ) -> dict:
    return {"n": w.n, "entries": [list(row) for row in w.entries]}


def skew_z_from_dict(data: dict) -> SkewZ:
    entries = data["entries"]
    n = int(data.get("n", len(entries)))
    return SkewZ(n, tuple(tuple(int(x) for x in row) for row in entries))


def normal_form_qz_to_dict(nf: NormalFormQZ) -> dict:
    return {
        "ring": "qz",
        "t": nf.t,
        "ds": [d.to_json() for d in nf.ds],
        "orders": list(nf.orders),
        "sigma": nf.sigma,
        "transform": [list(row) for row in nf.transform],
    }


def normal_form_z_to_dict(nf: NormalFormZ) -> dict:
    return {
        "ring": "z",
        "t": nf.t,
        "cs": list(nf.cs),
        "transform": [list(row) for row in nf.transform],
    }


def census_to_dict(report: CensusReport) -> dict:
    return report.to_dict()


def census_from_dict(data: dict) -> CensusReport:
    return CensusReport.from_dict(data)


def _complex_to_json(A: np.ndarray) -> list:
    return np.stack([A.real, A.imag], axis=-1).tolist()


def _complex_from_json(value: Any) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.shape[-1] != 2:
        raise ValueError("Complex entries must be [re, im] pairs.")
    return arr[..., 0] + 1j * arr[..., 1]


def _plain(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Rat1):
        return value.to_json()
    return value


def tuple_to_dict(tup: ACTuple) -> dict:
    return {
        "n": tup.n,
        "m": tup.m,
        "mats": [_complex_to_json(A) for A in tup.mats],
        "metadata": _plain(tup.metadata),
    }


def tuple_from_dict(data: dict) -> ACTuple:
    n, m = int(data["n"]), int(data["m"])
    mats = [_complex_from_json(A).reshape(m, m) for A in data["mats"]]
    return ACTuple(n, m, mats, dict(data.get("metadata", {})))


def spectral_data_to_dict(sd: SpectralData) -> dict:
    return {
        "t": sd.t,
        "orders": list(sd.orders),
        "l": sd.l,
        "alphas": sd.alphas.tolist(),
        "betas": sd.betas.tolist(),
        "basis": _complex_to_json(sd.basis),
    }


def spectral_data_from_dict(data: dict) -> SpectralData:
    t, l = int(data["t"]), int(data["l"])
    return SpectralData(
        t,
        tuple(int(o) for o in data["orders"]),
        l,
        np.asarray(data["alphas"], dtype=float).reshape(l, -1),
        np.asarray(data["betas"], dtype=float).reshape(l, t),
        _complex_from_json(data["basis"]),
    )


def relation_report_to_dict(report: RelationReport) -> dict:
    return {
        "passed": report.passed,
        "tol": report.tol,
        "unitarity_defect": report.unitarity_defect,
        "max_scalar_defect": report.max_scalar_defect,
        "max_angle_deviation": report.max_angle_deviation,
        "failures": [list(pair) for pair in report.failures],
    }


def char_poly_report_to_dict(report: CharPolyReport) -> dict:
    return {"passed": report.passed, "tol": report.tol, "deviations": list(report.deviations)}


def extension_to_dict(g: CentralExtension) -> dict:
    return {"n": g.n, "r": g.r, "coeffs": [[list(row) for row in c.entries] for c in g.coeffs]}


def extension_from_dict(data: dict) -> CentralExtension:
    n, r = int(data["n"]), int(data["r"])
    coeffs = tuple(
        SkewZ(n, tuple(tuple(int(x) for x in row) for row in c)) for c in data["coeffs"]
    )
    return CentralExtension(n, r, coeffs)


def poly_spec_to_dict(p: PolySpec) -> dict:
    return {"m": p.m, "roots": [root._asdict() for root in p.roots]}


def poly_spec_from_dict(data: dict) -> PolySpec:
    return PolySpec(
        int(data["m"]),
        tuple(Root(int(x["k"]), int(x["a"]), int(x["mult"])) for x in data["roots"]),
    )


def moduli_to_dict(moduli: ModuliDescriptor) -> dict:
    return {
        "empty": moduli.empty,
        "factors": [{**asdict(f), "symbol": f.symbol()} for f in moduli.factors],
        "symbol": str(moduli),
    }


def moduli_from_dict(data: dict) -> ModuliDescriptor:
    factors = tuple(
        TorusFactor(int(f["power"]), int(f["torus_dim"]), int(f.get("copies", 1)))
        for f in data["factors"]
    )
    return ModuliDescriptor(factors, bool(data.get("empty", False)))


def omega_analysis_to_dict(analysis: OmegaAnalysis) -> dict:
    return {
        "rank": analysis.rank,
        "nullity": analysis.nullity,
        "B": str(analysis.B),
        "C": str(analysis.C),
        "P": str(analysis.P),
        "echelon": analysis.echelon,
        "transform": analysis.transform,
        "pivot_columns": analysis.pivot_columns,
        "rref": [[str(x) for x in row] for row in analysis.rref],
    }


def omega_analysis_from_dict(data: dict) -> OmegaAnalysis:
    return OmegaAnalysis(
        int(data["rank"]),
        int(data["nullity"]),
        int(data["B"]),
        int(data["C"]),
        int(data["P"]),
        [[int(x) for x in row] for row in data.get("echelon", [])],
        [[int(x) for x in row] for row in data.get("transform", [])],
        [int(c) for c in data.get("pivot_columns", [])],
        [[Fraction(x) for x in row] for row in data.get("rref", [])],
    )


def fiber_to_dict(fiber: FiberDescriptor) -> dict:
    return asdict(fiber)


def fiber_oracle_to_dict(result: FiberOracleResult) -> dict:
    return {**asdict(result), "passed": result.passed}


def f_decomposition_to_dict(decomp: FDecomposition) -> dict:
    return {
        "m": decomp.m,
        "terms": [{"D": skew_qz_to_dict(D), "l": l} for D, l in decomp.terms],
    }


def f_decomposition_from_dict(data: dict) -> FDecomposition:
    return FDecomposition(
        int(data["m"]),
        tuple((skew_qz_from_dict(term["D"]), int(term["l"])) for term in data["terms"]),
    )


def dumps(payload: Any) -> str:
    return json.dumps(_plain(payload), indent=2, sort_keys=True)


def load_json(path: Union[str, os.PathLike]) -> Any:
    with open(path, encoding="utf-8") as f:
        return json.load(f)
