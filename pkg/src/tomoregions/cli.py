"""Command-line front end. Results go to stdout as JSON, logs to stderr.

Exit status: 0 on a computed result (unresolved verdicts included), 2 on
input errors, 3 on internal numeric failures.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys

import numpy as np

from . import __version__
from . import jsonio as J
from .errors import NumericalFailure, SchemaViolation, TomoError

log = logging.getLogger("tomoregions")

STOCHASTIC = {"check-containment", "decide-geometry", "truncated-mvcr", "verify-criterion", "simulate"}


class UsageError(SchemaViolation):
    code = "usage-error"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _int_list(text):
    try:
        vals = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    return vals


def _float_list(text):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _seed(text):
    v = int(text)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


def _num(x):
    x = float(x)
    return x if math.isfinite(x) else None


def cmd_basis(args):
    from .statespace import build_basis
    b = build_basis(args.dim)
    return {"dim": b.dim, "block_boundaries": list(b.block_boundaries),
            "matrices": [J.complex_matrix_to_json(m) for m in b.matrices]}, {}


def cmd_linear_inversion(args):
    from .tomography import linear_inversion
    design = J.design_from_json(J.load_json(args.design), "design")
    if args.outcomes is not None:
        y = np.array(args.outcomes)
    else:
        y = J.real_vector_from_json(J.load_json(args.outcomes_file), "outcomes")
    rho = linear_inversion(design, y)
    return {"state": J.density_to_json(rho), "mineig": rho.mineig(), "is_psd": rho.is_psd()}, {"m": design.m}


def cmd_confidence_ellipsoid(args):
    from .tomography import confidence_ellipsoid
    design = J.design_from_json(J.load_json(args.design), "design")
    oe = J.outcome_ellipsoid_from_json(J.load_json(args.outcome_ellipsoid))
    e = confidence_ellipsoid(design, oe)
    return {"ellipsoid": J.ellipsoid_to_json(e)}, {"m": design.m}


def _verdict_json(v):
    out = {"status": v.status, "margin": _num(v.margin), "certify_margin": v.certify_margin,
           "membership": v.membership, "witness": None}
    if v.witness is not None:
        psi, state = v.witness
        out["witness"] = {"psi": J.vector_to_json(psi.amplitudes), "state": J.density_to_json(state),
                          "u": J.vector_to_json(v.witness_u), "u_norm": v.witness_u_norm,
                          "expectation": v.witness_quadratic, "mineig": v.witness_mineig}
    return out


def cmd_check_containment(args):
    from .ellipsoid import check_containment
    e = J.ellipsoid_from_json(J.load_json(args.ellipsoid))
    v = check_containment(e, restarts=args.restarts, grid_depth=args.grid_depth,
                          certify_margin=args.certify_margin, restrict_real=args.restrict_real,
                          seed=args.seed)
    return _verdict_json(v), {"starts": v.starts}


def cmd_encode_instance(args):
    from .hardness import encode
    enc = encode(args.a)
    return {"encoding": J.encoding_to_json(enc)}, {}


def cmd_solve_balanced_sum(args):
    from .hardness import solve_balanced_sum
    p = solve_balanced_sum(args.a)
    return {"partition": None if p is None else list(p)}, {"d": len(args.a)}


def cmd_decide_geometry(args):
    from .ellipsoid import UNDECIDED, VIOLATED, check_containment
    enc = J.encoding_from_json(J.load_json(args.encoding))
    v = check_containment(enc.ellipsoid, restarts=args.restarts, grid_depth=args.grid_depth,
                          certify_margin=enc.functional_gap / 2.0, restrict_real=True, seed=args.seed)
    exists = None if v.status == UNDECIDED else v.status == VIOLATED
    if exists is None:
        log.warning("geometric check is UNDECIDED; no decision reported")
    return {"partition_exists": exists, "status": v.status, "margin": _num(v.margin),
            "certify_margin": v.certify_margin}, {"starts": v.starts}


def cmd_mvcr_radius(args):
    from .specialfn import mvcr_radius
    sol = mvcr_radius(args.dim, args.alpha, args.delta)
    return {"radius": sol.radius, "evaluations": sol.evaluations, "error_bound": sol.error_bound,
            "radius_interval": list(sol.radius_interval)}, {
        "t_max": sol.t_max, "bracket_evaluations": sol.bracket_evaluations,
        "used_complement": sol.used_complement}


def _pair_json(pair):
    return {"alpha": pair.alpha, "r_unconstrained": pair.r_unconstrained,
            "r_unconstrained_stderr": _num(pair.r_unconstrained_stderr),
            "r_truncated": pair.r_truncated, "r_truncated_stderr": _num(pair.r_truncated_stderr),
            "difference": pair.difference, "difference_stderr": _num(pair.difference_stderr),
            "criterion": pair.criterion_holds, "witnesses": pair.witnesses,
            "C": pair.C, "C_stderr": _num(pair.C_stderr)}


def cmd_truncated_mvcr(args):
    from .bayes import estimate_normalization, truncated_mvcr_radius
    post = J.posterior_from_json(J.load_json(args.posterior))
    tpost = estimate_normalization(post, args.samples, args.seed, args.method)
    pair = truncated_mvcr_radius(tpost, args.alpha, bootstrap=args.bootstrap)
    return _pair_json(pair), {"samples": args.samples, "method": args.method,
                              "psd_mass": tpost.psd_mass}


def cmd_verify_criterion(args):
    from .bayes import criterion_decides_containment
    from .hardness import encode, solve_balanced_sum
    enc = encode(args.a)
    v = criterion_decides_containment(enc, n=args.samples, seed=args.seed, method=args.method)
    res = _pair_json(v.pair)
    res.update({"verdict": v.status, "threshold": v.threshold, "alpha_over_C": v.alpha_over_C})
    diag = {"samples": args.samples, "method": args.method, "log10_radius_gap": enc.log10_radius_gap}
    if len(args.a) <= 24:
        diag["partition_exists"] = solve_balanced_sum(args.a) is not None
    return res, diag


def cmd_simulate(args):
    from .tomography import simulate_counts
    design = J.design_from_json(J.load_json(args.design), "design")
    rho = J.density_from_json(J.load_json(args.state))
    sim = simulate_counts(design, rho, args.shots, args.seed)
    return {"y_hat": [float(x) for x in sim.y_hat],
            "gaussian_cov": J.real_matrix_to_json(sim.gaussian_cov)}, {"shots": sim.shots}


def build_parser():
    p = _Parser(prog="tomoregions", description="Error regions for state tomography under positivity.")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, fn, help_):
        sp = sub.add_parser(name, help=help_)
        sp.set_defaults(func=fn)
        sp.add_argument("--out", help="also write the JSON result to this file")
        if name in STOCHASTIC:
            sp.add_argument("--seed", type=_seed, required=True)
        return sp

    sp = add("basis", cmd_basis, "generalized Gell-Mann basis")
    sp.add_argument("--dim", type=int, required=True)

    sp = add("linear-inversion", cmd_linear_inversion, "least-squares state estimate")
    sp.add_argument("--design", required=True)
    g = sp.add_mutually_exclusive_group(required=True)
    g.add_argument("--outcomes", type=_float_list)
    g.add_argument("--outcomes-file")

    sp = add("confidence-ellipsoid", cmd_confidence_ellipsoid, "pull back an outcome ellipsoid")
    sp.add_argument("--design", required=True)
    sp.add_argument("--outcome-ellipsoid", required=True)

    sp = add("check-containment", cmd_check_containment, "is the ellipsoid inside the PSD states")
    sp.add_argument("ellipsoid")
    sp.add_argument("--restarts", type=int, default=16)
    sp.add_argument("--grid-depth", type=int, default=8)
    sp.add_argument("--certify-margin", type=float, default=1e-7)
    sp.add_argument("--restrict-real", action="store_true")

    sp = add("encode-instance", cmd_encode_instance, "encode a balanced-sum instance")
    sp.add_argument("--a", type=_int_list, required=True)

    sp = add("solve-balanced-sum", cmd_solve_balanced_sum, "brute-force balanced partition")
    sp.add_argument("--a", type=_int_list, required=True)

    sp = add("decide-geometry", cmd_decide_geometry, "decide an encoding geometrically")
    sp.add_argument("encoding")
    sp.add_argument("--restarts", type=int, default=16)
    sp.add_argument("--grid-depth", type=int, default=8)

    sp = add("mvcr-radius", cmd_mvcr_radius, "Gaussian credible radius")
    sp.add_argument("--dim", type=int, required=True, help="number of Gaussian dimensions N")
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--delta", type=float, default=1e-9)

    sp = add("truncated-mvcr", cmd_truncated_mvcr, "PSD-truncated credible radius")
    sp.add_argument("--posterior", required=True)
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--samples", type=int, default=10 ** 6)
    sp.add_argument("--method", choices=["rejection", "radial"], default="rejection")
    sp.add_argument("--bootstrap", type=int, default=200)

    sp = add("verify-criterion", cmd_verify_criterion, "credible-radius criterion on an encoding")
    sp.add_argument("--a", type=_int_list, required=True)
    sp.add_argument("--samples", type=int, default=10 ** 6)
    sp.add_argument("--method", choices=["rejection", "radial"], default="radial")

    sp = add("simulate", cmd_simulate, "simulate two-outcome measurement data")
    sp.add_argument("--design", required=True)
    sp.add_argument("--state", required=True)
    sp.add_argument("--shots", type=int, required=True)
    return p


def _emit(text, out_path=None):
    sys.stdout.write(text)
    sys.stdout.flush()
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)


def main(argv=None) -> int:
    parser = build_parser()
    command = None
    out_path = None
    try:
        args = parser.parse_args(argv)
        command, out_path = args.command, args.out
        logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                            stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
        result, diagnostics = args.func(args)
        doc = {"command": command, "version": __version__,
               "seed": getattr(args, "seed", None), "result": result, "diagnostics": diagnostics}
        _emit(J.dumps(doc), out_path)
        return 0
    except (TomoError, FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        err = exc.to_dict() if isinstance(exc, TomoError) else {"code": "io-error", "message": str(exc)}
        log.error("%s: %s", err["code"], err["message"])
        _emit(J.dumps({"command": command, "version": __version__, "error": err}))
        return 2
    except (NumericalFailure, np.linalg.LinAlgError, FloatingPointError, OverflowError) as exc:
        err = {"code": "numeric-failure", "message": str(exc)}
        log.error("numeric failure: %s", exc)
        _emit(J.dumps({"command": command, "version": __version__, "error": err}))
        return 3


if __name__ == "__main__":
    sys.exit(main())
