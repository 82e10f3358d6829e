"""Command-line front end.

Every subcommand prints one JSON document on stdout (sorted keys, so equal
inputs give byte-identical output) and a short human summary on stderr.

Exit codes: 0 success / certified / found, 1 inconclusive / not found,
2 usage or validation error.

The default tolerance is ``1e-9``; set ``CORRDECOMP_TOL`` to override it.
"""

import argparse
import json
import math
import os
import sys

import numpy as np

from . import io
from .decomp import PIVOT_RULES, Decomposition, decompose_full, verify_decomposition
from .errors import CorrelationError, NoIndependentPivot
from .families import (
    Prop52Params,
    gen_chain,
    gen_prop52_target,
    random_correlation,
    random_hard_candidate,
)
from .matcore import RECONSTRUCTION_TOL, VALIDATION_TOL, gram_factor, numerical_rank, validate_correlation
from .search import SearchConfig, batch_search, hard_candidate_stream, low_rank_stream, prop52_stream, two_factor_search
from .tensorlab import (
    TensorShape,
    combo_product_check,
    lemma_pair_check,
    random_product_pair,
    sample_product_sum_instance,
)
from .witness import (
    default_stat_tol,
    detect_entanglement,
    estimate_projector_gram,
    simulate_measurements,
)

TOL_ENV = "CORRDECOMP_TOL"

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_ERROR = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def default_tol():
    raw = os.environ.get(TOL_ENV)
    if raw is None:
        return VALIDATION_TOL
    try:
        tol = float(raw)
    except ValueError:
        raise UsageError(f"{TOL_ENV}={raw!r} is not a number")
    if not tol > 0 or not math.isfinite(tol):
        raise UsageError(f"{TOL_ENV} must be positive and finite")
    return tol


def _clean(obj):
    """Make ``obj`` JSON-safe: numpy scalars to Python, non-finite floats to ``None``."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (set, frozenset)):
        return sorted(_clean(v) for v in obj)
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def _dump(obj):
    return json.dumps(_clean(obj), sort_keys=True, indent=2, allow_nan=False)


def _write_text(path, text):
    with open(path, "w") as fh:
        fh.write(text)
        fh.write("\n")


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer")
    if v <= 0:
        raise argparse.ArgumentTypeError(f"{text!r} must be positive")
    return v


def _positive_float(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a number")
    if not v > 0 or not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"{text!r} must be positive and finite")
    return v


def _dims(text):
    try:
        dims = tuple(int(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a comma-separated list of integers")
    if not dims or any(d < 1 for d in dims):
        raise argparse.ArgumentTypeError(f"invalid shape {text!r}")
    return dims


def _load_correlation(path, tol):
    M, meta = io.load_document(path)
    return validate_correlation(M, tol), meta


def _factor_docs(factors):
    return [io.matrix_to_document(F) for F in factors]


def _write_factors(prefix, factors):
    paths = []
    for i, F in enumerate(factors, 1):
        path = f"{prefix}_Q{i}.json"
        io.write_matrix(path, F, {"factor": i})
        paths.append(path)
    return paths


# subcommand handlers return (exit_code, result, summary)


def cmd_gen(args):
    if args.family == "chain":
        if args.r is None or args.p is None:
            raise UsageError("gen chain needs --r and --p")
        _, P = gen_chain(r=args.r, p=args.p)
        meta = {"family": "chain", "params": {"r": args.r, "p": args.p}}
    elif args.family == "prop52":
        if args.p is not None and args.alpha1 is not None:
            params = Prop52Params.auto(args.p, args.alpha1, args.alpha2_phase)
            meta = {"family": "prop52"}
        else:
            params = Prop52Params.random(np.random.default_rng(args.seed))
            meta = {"family": "prop52", "seed": args.seed}
        _, P = gen_prop52_target(params)
        meta["params"] = {"p": params.p, "alpha1": complex(params.alpha1), "alpha2": complex(params.alpha2)}
    elif args.family == "random":
        if args.n is None or args.rank is None:
            raise UsageError("gen random needs --n and --rank")
        P = random_correlation(args.n, args.rank, seed=args.seed)
        meta = {"family": "random", "params": {"n": args.n, "rank": args.rank}, "seed": args.seed}
    else:
        _, P = random_hard_candidate(seed=args.seed)
        meta = {"family": "hard-candidate", "seed": args.seed}
    doc = io.matrix_to_document(P, _clean(meta))
    if args.output:
        _write_text(args.output, _dump(doc))
    return EXIT_OK, doc, f"generated {args.family} matrix, n={P.shape[0]}, rank={numerical_rank(P)}"


def cmd_decompose(args):
    P, _ = _load_correlation(args.matrix, args.tol)
    try:
        D = decompose_full(P, args.r, tol=args.tol, pivot_rule=args.pivot)
    except NoIndependentPivot as exc:
        result = {
            "status": "NoIndependentPivot",
            "message": str(exc),
            "partial_factors": _factor_docs(exc.factors),
            "remainder": None if exc.remainder is None else io.matrix_to_document(exc.remainder),
        }
        return EXIT_NEGATIVE, result, f"stuck: {exc}"
    result = {
        "status": "Decomposed",
        "r": args.r,
        "pivot_rule": args.pivot,
        "residual": D.residual,
        "verified": D.verified,
        "ranks": [numerical_rank(F) for F in D.factors],
        "factors": _factor_docs(D.factors),
    }
    if args.output:
        result["files"] = _write_factors(args.output, D.factors)
    code = EXIT_OK if D.verified else EXIT_NEGATIVE
    return code, result, f"{D.m} factors of rank <= {args.r}, residual {D.residual:.3e}, verified={D.verified}"


def cmd_verify(args):
    P, _ = _load_correlation(args.matrix, args.tol)
    factors = [io.parse_matrix_file(f) for f in args.factors]
    r = args.r if args.r is not None else max(numerical_rank(F) for F in factors)
    D = Decomposition(factors=factors, rank_bound=r, target_n=P.shape[0])
    rep = verify_decomposition(P, D, tol=args.verify_tol)
    result = {
        "passed": rep.passed,
        "residual": rep.residual,
        "ranks": rep.ranks,
        "factors_valid": rep.factors_valid,
        "rank_bound": rep.rank_bound,
        "problems": rep.problems,
    }
    summary = "verified" if rep.passed else "; ".join(rep.problems)
    return (EXIT_OK if rep.passed else EXIT_NEGATIVE), result, summary


def _witness_summary(rep):
    if rep.certified:
        return f"{rep.verdict.value} (r={rep.r}, p~{rep.estimated_p:.6g})"
    return f"{rep.verdict.value}: failed {', '.join(rep.failed_checks)}"


def cmd_witness(args):
    from .witness import chain_witness

    P, _ = _load_correlation(args.matrix, args.tol)
    rep = chain_witness(np.abs(P) ** 2, args.r, tol=args.tol)
    code = EXIT_OK if rep.certified else EXIT_NEGATIVE
    return code, rep.to_dict(), _witness_summary(rep)


def cmd_simulate(args):
    P, _ = _load_correlation(args.matrix, args.tol)
    T = gram_factor(P, tol=args.tol)
    rec = simulate_measurements(T, args.shots, seed=args.seed, parallel=args.parallel)
    doc = io.record_to_document(rec)
    if args.output:
        _write_text(args.output, _dump(doc))
    return EXIT_OK, doc, f"simulated {args.shots} shots on each of {rec.n * rec.n} ordered pairs"


def cmd_detect(args):
    with open(args.record) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise io.MalformedDocument(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    rec = io.document_to_record(doc)
    R_hat = estimate_projector_gram(rec)
    stat_tol = args.stat_tol if args.stat_tol is not None else default_stat_tol(int(rec.shots.min()))
    rep = detect_entanglement(R_hat, args.r, stat_tol=stat_tol, tol=args.tol)
    result = rep.to_dict()
    result["stat_tol"] = stat_tol
    result["entangled"] = rep.certified
    code = EXIT_OK if rep.certified else EXIT_NEGATIVE
    return code, result, _witness_summary(rep)


def _search_config(args):
    return SearchConfig(
        restarts=args.restarts,
        max_iters=args.iters,
        seed=args.seed,
        d=args.d,
        m=args.m,
        parallel=args.parallel,
    )


def cmd_search(args):
    P, _ = _load_correlation(args.matrix, args.tol)
    res = two_factor_search(P, _search_config(args))
    result = {
        "verdict": res.verdict,
        "best_residual": res.best_residual,
        "basin_residual": res.basin_residual,
        "restarts_run": len(res.per_restart),
        "per_restart": res.per_restart,
        "trivial": res.trivial,
    }
    if res.found:
        result["factors"] = _factor_docs(res.factors)
        if args.output:
            result["files"] = _write_factors(args.output, res.factors)
    summary = f"{res.verdict}, residual {res.best_residual:.3e} after {len(res.per_restart)} restarts"
    return (EXIT_OK if res.found else EXIT_NEGATIVE), result, summary


STREAMS = {
    "prop52": lambda seed: prop52_stream(seed),
    "low-rank": lambda seed: low_rank_stream(seed=seed),
    "hard-candidate": lambda seed: hard_candidate_stream(seed),
}


def cmd_batch_search(args):
    summary = batch_search(STREAMS[args.family](args.seed), args.count, _search_config(args))
    result = summary.to_dict()
    result["family"] = args.family
    if args.output:
        _write_text(args.output, _dump(result))
    code = EXIT_OK if summary.found == summary.count else EXIT_NEGATIVE
    return code, result, f"{summary.found}/{summary.count} found"


def cmd_tensor_check(args):
    shape = TensorShape(args.shape)
    rng = np.random.default_rng(args.seed)
    agree = 0
    for k in range(args.pairs):
        x1, x2 = random_product_pair(rng, shape)
        rep = lemma_pair_check(x1, x2, shape, trials=args.trials, seed=[args.seed, k])
        agree += rep.equivalence_held
    violations, products = 0, 0
    n = min(args.n, 1 + sum(d - 1 for d in shape.dims))
    for _ in range(args.instances):
        S, coeffs = sample_product_sum_instance(rng, shape, n)
        rep = combo_product_check(S, coeffs)
        products += rep.sum_is_product
        violations += not rep.bound_holds
    result = {
        "shape": list(shape.dims),
        "pairs": args.pairs,
        "pair_agreement": agree,
        "instances": args.instances,
        "instance_size": n,
        "sum_is_product": products,
        "bound_violations": violations,
    }
    ok = agree == args.pairs and violations == 0
    summary = f"lemma agreement {agree}/{args.pairs}, bound violations {violations}/{args.instances}"
    return (EXIT_OK if ok else EXIT_NEGATIVE), result, summary


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--tol", type=_positive_float, default=None, help=f"validation tolerance (env {TOL_ENV})")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("-o", "--output", default=None)
    common.add_argument("--parallel", type=_positive_int, default=None)

    search_opts = _Parser(add_help=False)
    search_opts.add_argument("--restarts", type=_positive_int, default=100)
    search_opts.add_argument("--iters", type=_positive_int, default=500)
    search_opts.add_argument("--d", type=_positive_int, default=2, help="rank bound per factor")
    search_opts.add_argument("--m", type=_positive_int, default=2, help="number of factors")

    parser = _Parser(prog="corrdecomp", description="Decomposable correlation matrices.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", parents=[common], help="generate a matrix family")
    p.add_argument("family", choices=["chain", "prop52", "random", "hard-candidate"])
    p.add_argument("--r", type=int)
    p.add_argument("--p", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--rank", type=int)
    p.add_argument("--alpha1", type=complex)
    p.add_argument("--alpha2-phase", type=float, default=0.0)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("decompose", parents=[common], help="peel into rank <= r factors")
    p.add_argument("matrix")
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--pivot", choices=PIVOT_RULES, default="farthest")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("verify", parents=[common], help="check a product of factor files")
    p.add_argument("matrix")
    p.add_argument("factors", nargs="+")
    p.add_argument("--r", type=int)
    p.add_argument("--verify-tol", type=_positive_float, default=RECONSTRUCTION_TOL)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("witness", parents=[common], help="certify non-decomposability of a chain matrix")
    p.add_argument("matrix")
    p.add_argument("--r", type=int, required=True)
    p.set_defaults(func=cmd_witness)

    p = sub.add_parser("simulate", parents=[common], help="sample projective measurements")
    p.add_argument("matrix")
    p.add_argument("--shots", type=_positive_int, default=10**6)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("detect", parents=[common], help="certify entanglement from a measurement record")
    p.add_argument("record")
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--stat-tol", type=float, default=None)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("search", parents=[common, search_opts], help="numerical factor search")
    p.add_argument("matrix")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("batch-search", parents=[common, search_opts], help="search over a generated stream")
    p.add_argument("--family", choices=sorted(STREAMS), default="prop52")
    p.add_argument("--count", type=_positive_int, default=10)
    p.set_defaults(func=cmd_batch_search)

    p = sub.add_parser("tensor-check", parents=[common], help="product-vector lemma harness")
    p.add_argument("--shape", type=_dims, default=(2, 2, 2))
    p.add_argument("--pairs", type=_positive_int, default=100)
    p.add_argument("--trials", type=_positive_int, default=20)
    p.add_argument("--instances", type=_positive_int, default=100)
    p.add_argument("--n", type=_positive_int, default=3, help="vectors per instance")
    p.set_defaults(func=cmd_tensor_check)
    return parser


def run_command(argv, stdout=None, stderr=None):
    """Run one subcommand; returns the exit code."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        if args.tol is None:
            args.tol = default_tol()
        code, result, summary = args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=stderr)
        return EXIT_ERROR
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_ERROR
    except (CorrelationError, ValueError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=stderr)
        return EXIT_ERROR
    stdout.write(_dump(result))
    stdout.write("\n")
    print(summary, file=stderr)
    return code


def main(argv=None):
    sys.exit(run_command(sys.argv[1:] if argv is None else argv))
