"""Command line interface, ``acmpy <command> [options]``."""

import argparse
import json
import logging
import sys
import time
from dataclasses import dataclass, field
from math import prod
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

from .census import brute_force_census, formula_census
from .exceptions import InvariantViolation, RelationError, ResourceCapExceeded
from .gamma_spaces import (
    Rank1Form,
    count_components_rank1,
    count_components_rank_r,
    describe_moduli,
    discrete_fiber_oracle,
    enumerate_polys,
    f_decompose,
    omega_analysis,
    omega_fiber,
    omega_matrix,
)
from .serialization import (
    census_to_dict,
    char_poly_report_to_dict,
    dumps,
    extension_from_dict,
    extension_to_dict,
    f_decomposition_to_dict,
    fiber_oracle_to_dict,
    fiber_to_dict,
    load_json,
    moduli_to_dict,
    normal_form_qz_to_dict,
    normal_form_z_to_dict,
    omega_analysis_to_dict,
    poly_spec_to_dict,
    rat1_from_json,
    relation_report_to_dict,
    skew_qz_from_dict,
    skew_qz_to_dict,
    skew_z_from_dict,
    spectral_data_to_dict,
    tuple_from_dict,
    tuple_to_dict,
)
from .settings import DEFAULTS, Settings
from .skew_forms import (
    SkewQZ,
    congruence_normal_form_qz,
    integer_skew_normal_form,
    standard_block,
)
from .tuple_lab import (
    ACTuple,
    build_for_dimension,
    build_zd,
    char_poly_check,
    conjugate,
    extract_canonical_basis,
    normalized_orbit,
    random_unitary,
    random_zd_parameters,
    rho_classify,
    verify_relations,
)
from .version import __version__

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VERIFICATION = 1
EXIT_INPUT = 2
EXIT_CAP = 3


@dataclass
class CommandResult(object):
    """
    Outcome of one subcommand.

    Attributes
    ----------
    command : str
        Subcommand name.

    inputs : dict
        Echo of the parsed parameters, the seed included.

    output : Any
        Structured payload, fixed per subcommand.

    timing_ms : int
        Wall-clock time of the computation.

    exit_code : int
        Process exit status.
    """

    command: str
    inputs: Dict[str, Any]
    output: Any
    timing_ms: int = 0
    exit_code: int = EXIT_OK
    table: Any = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "inputs": self.inputs,
            "output": self.output,
            "timing_ms": self.timing_ms,
        }


def _settings(args: argparse.Namespace) -> Settings:
    kws = {"seed": args.seed}
    if args.cap is not None:
        kws["enumeration_cap"] = args.cap
    if args.jobs is not None:
        kws["n_proc"] = args.jobs
    return DEFAULTS.replace(**kws)


def _payload(data: Any, key: str) -> Any:
    """Unwrap a previous command's output so that commands can be chained."""
    if isinstance(data, dict) and "command" in data and "output" in data:
        data = data["output"]
    if isinstance(data, dict) and isinstance(data.get(key), dict):
        data = data[key]
    return data


def _load_tuple(path: str) -> ACTuple:
    return tuple_from_dict(_payload(load_json(path), "tuple"))


def _target_matrix(tup: ACTuple, path: Optional[str]) -> SkewQZ:
    """Matrix given by ``--against``, else the block recorded at construction."""
    if path is not None:
        return skew_qz_from_dict(_payload(load_json(path), "D"))
    if "ds" not in tup.metadata:
        raise ValueError("The tuple carries no block values; pass --against.")
    return standard_block([rat1_from_json(d) for d in tup.metadata["ds"]], tup.n)


def _parse_ds(text: str) -> List:
    values = [rat1_from_json(part.strip()) for part in text.split(",") if part.strip()]
    if not values:
        raise ValueError(f"No block values in {text!r}.")
    return values


def cmd_census(args: argparse.Namespace) -> CommandResult:
    settings = _settings(args)
    report = formula_census(args.n, args.m)
    output: Dict[str, Any] = {"formula": census_to_dict(report), "total": str(report.total)}
    table = report.to_frame()
    exit_code = EXIT_OK
    if args.oracle:
        oracle = brute_force_census(
            args.n,
            args.m,
            cap=settings.enumeration_cap,
            n_proc=settings.n_proc or 1,
            context=settings.context,
            progress=args.progress,
        )
        match = oracle.total == report.total and oracle.by_class == report.by_class
        output.update({"oracle": census_to_dict(oracle), "match": match})
        table = table.merge(
            oracle.to_frame()[["orders", "count"]].rename(columns={"count": "oracle_count"}),
            on="orders",
            how="outer",
        )
        if not match:
            logger.error("Formula %d and oracle %d disagree.", report.total, oracle.total)
            exit_code = EXIT_VERIFICATION
    return CommandResult("census", {}, output, exit_code=exit_code, table=table)


def cmd_normal_form(args: argparse.Namespace) -> CommandResult:
    data = _payload(load_json(args.file), "D")
    if args.ring == "qz":
        output = normal_form_qz_to_dict(congruence_normal_form_qz(skew_qz_from_dict(data)))
    else:
        output = normal_form_z_to_dict(integer_skew_normal_form(skew_z_from_dict(data)))
    return CommandResult("normal-form", {}, output)


def cmd_build_tuple(args: argparse.Namespace) -> CommandResult:
    ds = _parse_ds(args.ds)
    rng = np.random.default_rng(args.seed)
    alphas = betas = None
    l = args.l
    if args.m is not None:
        l = max(args.m // prod(d.den for d in ds), 1)
    if args.random_angles:
        alphas, betas = random_zd_parameters(ds, args.n, l, rng)
    if args.m is not None:
        tup = build_for_dimension(ds, args.n, args.m, alphas, betas)
    else:
        tup = build_zd(ds, args.n, l, alphas, betas)
    if args.conjugate_random:
        tup = conjugate(tup, random_unitary(tup.m, args.seed))
    D = standard_block(ds, args.n)
    output = {"tuple": tuple_to_dict(tup), "D": skew_qz_to_dict(D)}
    if alphas is not None:
        output["alphas"] = [[x.to_json() for x in row] for row in alphas]
        output["betas"] = [[x.to_json() for x in row] for row in betas]
    return CommandResult("build-tuple", {}, output)


def cmd_verify_tuple(args: argparse.Namespace) -> CommandResult:
    tup = _load_tuple(args.file)
    D = _target_matrix(tup, args.against)
    tol = args.tol if args.tol is not None else DEFAULTS.construction_tol
    report = verify_relations(tup, D, tol)
    exit_code = EXIT_OK if report.passed else EXIT_VERIFICATION
    return CommandResult(
        "verify-tuple", {}, relation_report_to_dict(report), exit_code=exit_code
    )


def cmd_classify(args: argparse.Namespace) -> CommandResult:
    tup = _load_tuple(args.file)
    tol = args.tol if args.tol is not None else DEFAULTS.construction_tol
    D = rho_classify(tup, tol, args.max_den)
    output = {
        "D": skew_qz_to_dict(D),
        "normal_form": normal_form_qz_to_dict(congruence_normal_form_qz(D)),
    }
    return CommandResult("classify", {}, output)


def cmd_extract(args: argparse.Namespace) -> CommandResult:
    tup = _load_tuple(args.file)
    D = _target_matrix(tup, args.against)
    tol = args.tol if args.tol is not None else DEFAULTS.spectral_tol
    sd = extract_canonical_basis(tup, D, tol)
    report = char_poly_check(tup, sd, tol)
    output = {
        "spectral_data": spectral_data_to_dict(sd),
        "orbit": normalized_orbit(sd, tol).tolist(),
        "char_poly": char_poly_report_to_dict(report),
    }
    exit_code = EXIT_OK if report.passed else EXIT_VERIFICATION
    return CommandResult("extract", {}, output, exit_code=exit_code)


def _rank1_form(args: argparse.Namespace, g) -> Rank1Form:
    if args.rank1 is not None:
        values = [int(x) for x in args.rank1.split(",") if x.strip()]
        if not values:
            raise ValueError("--rank1 needs 't,c_1,...,c_t'.")
        t, cs = values[0], tuple(values[1:])
        return Rank1Form(t, cs, args.n)
    if g.r != 1:
        raise ValueError(f"This action needs a rank one extension, got r = {g.r}.")
    return Rank1Form.from_extension(g)


def cmd_gamma(args: argparse.Namespace) -> CommandResult:
    g = extension_from_dict(_payload(load_json(args.ext), "extension")) if args.ext else None
    output: Dict[str, Any] = {}
    needs_m = args.enumerate or args.count or args.moduli
    if needs_m and args.m is None:
        raise ValueError("m is required for --count, --enumerate and --moduli.")
    if args.count:
        output["count"] = str(count_components_rank1(_rank1_form(args, g), args.m))
    if args.enumerate or args.moduli:
        form = _rank1_form(args, g)
        polys = enumerate_polys(form, args.m)
        if args.enumerate:
            output["polynomials"] = [poly_spec_to_dict(p) for p in polys]
        if args.moduli:
            output["moduli"] = [
                {"polynomial": str(p), "moduli": moduli_to_dict(describe_moduli(form, p))}
                for p in polys
            ]
    if args.omega or args.fiber or args.eigendata:
        if g is None:
            g = _rank1_form(args, g).to_extension()
        Omega = omega_matrix(g)
        analysis = omega_analysis(Omega, _settings(args).enumeration_cap)
        matrix = [[int(x) for x in row] for row in Omega.tolist()]
        output["omega"] = {"matrix": matrix, **omega_analysis_to_dict(analysis)}
        if args.fiber:
            D = skew_qz_from_dict(_payload(load_json(args.fiber), "D"))
            output["fiber"] = fiber_to_dict(omega_fiber(Omega, D, analysis))
            output["fiber_oracle"] = fiber_oracle_to_dict(
                discrete_fiber_oracle(Omega, D, cap=_settings(args).enumeration_cap)
            )
        if args.eigendata:
            eigendata = [
                ([rat1_from_json(x) for x in item["lam"]], int(item["dim"]))
                for item in load_json(args.eigendata)
            ]
            decomp = f_decompose(g, eigendata)
            counted = count_components_rank_r(g, decomp)
            output["decomposition"] = f_decomposition_to_dict(decomp)
            output["rank_r_count"] = str(counted.count)
            output["rank_r_moduli"] = moduli_to_dict(counted.moduli)
    if not output:
        output["count"] = str(count_components_rank1(_rank1_form(args, g), args.m))
    if g is not None:
        output["extension"] = extension_to_dict(g)
    return CommandResult("gamma", {}, output)


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=["json", "csv"], default="json")
    common.add_argument("--tol", type=float, default=None, help="Numerical tolerance.")
    common.add_argument("--max-den", type=int, default=None, help="Angle snapping cap.")
    common.add_argument(
        "--cap", type=int, default=None, help="Largest enumeration (default 10**7)."
    )
    common.add_argument("--jobs", type=int, default=None, help="Worker processes.")
    common.add_argument("--seed", type=int, default=DEFAULTS.seed)
    common.add_argument("--output", "-o", default=None, help="Write the result to a file.")
    common.add_argument("--verbose", "-v", action="count", default=0)
    common.add_argument(
        "--progress", action=argparse.BooleanOptionalAction, default=False
    )
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(
        prog="acmpy", description="Almost commuting unitary tuples and their moduli."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("census", parents=[common], help="Count components of B_n(U(m)).")
    p.add_argument("n", type=int)
    p.add_argument("m", type=int)
    p.add_argument("--oracle", action="store_true", help="Also enumerate T(n, Z/m).")
    p.set_defaults(handler=cmd_census)

    p = sub.add_parser("normal-form", parents=[common], help="Normal form of a skew matrix.")
    p.add_argument("file")
    p.add_argument("--ring", choices=["qz", "z"], default="qz")
    p.set_defaults(handler=cmd_normal_form)

    p = sub.add_parser("build-tuple", parents=[common], help="Build a D-commuting tuple.")
    p.add_argument("--ds", required=True, help="Block values, e.g. '1/2,1/3'.")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--l", type=int, default=1)
    p.add_argument("--m", type=int, default=None, help="Target dimension instead of --l.")
    p.add_argument("--random-angles", action="store_true")
    p.add_argument("--conjugate-random", action="store_true")
    p.set_defaults(handler=cmd_build_tuple)

    for name, handler, text in [
        ("verify-tuple", cmd_verify_tuple, "Check the commutation relations."),
        ("extract", cmd_extract, "Recover the canonical spectral data."),
    ]:
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("file")
        p.add_argument("--against", default=None, help="JSON file with the matrix D.")
        p.set_defaults(handler=handler)

    p = sub.add_parser("classify", parents=[common], help="Commutator phase matrix.")
    p.add_argument("file")
    p.set_defaults(handler=cmd_classify)

    p = sub.add_parser("gamma", parents=[common], help="Components of Hom(Gamma, U(m)).")
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("--rank1", default=None, help="'t,c_1,...,c_t'.")
    source.add_argument("--ext", default=None, help="JSON file with a central extension.")
    p.add_argument("m", type=int, nargs="?", default=None)
    p.add_argument("--n", type=int, default=None, help="Ambient dimension for --rank1.")
    p.add_argument("--enumerate", action="store_true")
    p.add_argument("--count", action="store_true")
    p.add_argument("--moduli", action="store_true")
    p.add_argument("--omega", action="store_true")
    p.add_argument("--fiber", default=None, help="JSON file with D for the omega fiber.")
    p.add_argument("--eigendata", default=None, help="JSON list of {'lam': [...], 'dim': k}.")
    p.set_defaults(handler=cmd_gamma)
    return parser


def _configure_logging(verbose: int) -> None:
    level = [logging.WARNING, logging.INFO, logging.DEBUG][min(verbose, 2)]
    logging.basicConfig(
        level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s"
    )


def _emit(result: CommandResult, args: argparse.Namespace) -> None:
    if args.format == "csv":
        if result.table is None:
            raise ValueError(f"CSV output is only available for census, not {result.command}.")
        text = result.table.to_csv(index=False)
    else:
        text = dumps(result.to_dict()) + "\n"
    if args.output is None:
        sys.stdout.write(text)
    else:
        with open(args.output, "w", encoding="utf-8") as f:
            f.write(text)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args.verbose)
    handler: Callable[[argparse.Namespace], CommandResult] = args.handler
    start = time.perf_counter()
    try:
        result = handler(args)
        result.inputs = {
            k: v for k, v in vars(args).items() if k not in ("handler", "verbose", "output")
        }
        result.timing_ms = int(round(1000 * (time.perf_counter() - start)))
        _emit(result, args)
    except ResourceCapExceeded as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CAP
    except (RelationError, InvariantViolation) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VERIFICATION
    except (ValueError, KeyError, TypeError, OSError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    return result.exit_code
