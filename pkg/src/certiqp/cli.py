"""Command-line front end.

Exit codes: 0 success, 2 bad input (parse/validation/parameters),
3 numerical failure inside a solve.  Set CERTIQP_LOG=debug|info|warning
to control verbosity on stderr.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys

import numpy as np

from . import __version__
from .approx import solve_approx
from .certificate import certify
from .errors import CertiqpError, InvalidParameter
from .exact import solve_exact
from .harness import (
    TIMING_HEADER,
    TRACE_HEADER,
    audit_solve,
    rows_to_csv,
    timing_experiment,
    trace_experiment,
)
from .jsonio import load_boxqp, load_lasso, load_strict_qp, load_svm
from .problem import SolverOptions
from .transforms import (
    recover_genbox,
    recover_l1,
    recover_lasso,
    recover_svm,
    l1_penalty_to_boxqp,
    lasso_to_boxqp,
    svm_to_boxqp,
)

log = logging.getLogger("certiqp")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3


def _setup_logging() -> None:
    level = os.environ.get("CERTIQP_LOG", "warning").upper()
    logging.basicConfig(stream=sys.stderr, level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--algorithm", choices=("exact", "approx"), default="approx")
    p.add_argument("--eps", type=float, default=1e-6)
    p.add_argument("--alpha", type=float, default=0.3)
    p.add_argument("--delta", type=float, default=0.15)
    p.add_argument("--trace", metavar="PATH", help="write per-iteration CSV here")
    p.add_argument("--audit", action="store_true", help="run invariant audit")
    p.add_argument("--early-stop", action="store_true",
                   help="stop at the first iteration with gap <= eps")


def _options(args: argparse.Namespace) -> SolverOptions:
    return SolverOptions(
        epsilon=args.eps, alpha=args.alpha, delta=args.delta,
        early_stop=args.early_stop, trace=bool(args.trace), audit=args.audit,
    )


def _solver(args: argparse.Namespace):
    return solve_exact if args.algorithm == "exact" else solve_approx


def _read_json(path: str) -> dict:
    with open(path) as fh:
        return json.load(fh)


def _emit(obj: dict) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True))


def _write_trace(path: str, sol, n: int, eps: float) -> None:
    rows = [["solve", n, eps, t.k, t.tau, t.gap, t.rank1_cum, "", ""]
            for t in (sol.trace or [])]
    with open(path, "w") as fh:
        fh.write(rows_to_csv(TRACE_HEADER, rows))


def cmd_solve(args: argparse.Namespace) -> int:
    box, genbox = load_boxqp(_read_json(args.input))
    opts = _options(args)
    sol = _solver(args)(box, opts)
    z = recover_genbox(sol.z_star, genbox) if genbox is not None else sol.z_star
    if args.trace:
        _write_trace(args.trace, sol, box.n, args.eps)
    if args.audit:
        report = audit_solve(box, opts, algorithm=args.algorithm)
        log.info("audit failures: %s", report.failures() or "none")
        if not report.passed:
            print(json.dumps({"audit_failures": report.failures()}), file=sys.stderr)
    _emit({
        "z": list(z),
        "duality_gap": sol.duality_gap,
        "iterations": sol.iterations_run,
        "rank1_updates": sol.rank1_used,
    })
    return EXIT_OK


def cmd_certify(args: argparse.Namespace) -> int:
    cert = certify(args.n, args.eps, args.algorithm, args.alpha,
                   args.delta if args.algorithm == "approx" else None)
    out = {
        "n": cert.n, "epsilon": cert.epsilon, "algorithm": cert.algorithm,
        "n_iter": cert.n_iter, "n_rank1_bound": cert.n_rank1_bound,
        "flops_estimate": cert.flops_estimate,
        "constants": dataclasses.asdict(cert.constants),
    }
    _emit(out)
    return EXIT_OK


def cmd_qp(args: argparse.Namespace) -> int:
    qp = load_strict_qp(_read_json(args.input))
    box, rec = l1_penalty_to_boxqp(qp)
    sol = _solver(args)(box, _options(args))
    y = recover_l1(sol.z_star, rec)
    resid = qp.G @ y - qp.g
    _emit({
        "y": list(y),
        "duality_gap": sol.duality_gap,
        "iterations": sol.iterations_run,
        "rank1_updates": sol.rank1_used,
        "max_constraint_violation": float(np.max(resid, initial=-np.inf)),
    })
    return EXIT_OK


def cmd_lasso(args: argparse.Namespace) -> int:
    lasso = load_lasso(_read_json(args.input))
    box, rec = lasso_to_boxqp(lasso)
    sol = _solver(args)(box, _options(args))
    x = recover_lasso(sol.z_star, rec)
    corr = lasso.A.T @ (lasso.A @ x - lasso.b)
    _emit({
        "x": list(x),
        "duality_gap": sol.duality_gap,
        "iterations": sol.iterations_run,
        "rank1_updates": sol.rank1_used,
        "subgradient_excess": float(np.max(np.abs(corr)) - lasso.lam),
        "nonzeros": int(np.sum(np.abs(x) > 1e-8)),
    })
    return EXIT_OK


def cmd_svm(args: argparse.Namespace) -> int:
    svm = load_svm(_read_json(args.input))
    box, rec = svm_to_boxqp(svm)
    sol = _solver(args)(box, _options(args))
    alphas = recover_svm(sol.z_star, rec)
    decision = svm.gram @ (alphas * rec.labels)
    acc = float(np.mean(np.sign(decision) == rec.labels))
    _emit({
        "alphas": list(alphas),
        "duality_gap": sol.duality_gap,
        "iterations": sol.iterations_run,
        "rank1_updates": sol.rank1_used,
        "training_accuracy": acc,
    })
    return EXIT_OK


def cmd_demo(args: argparse.Namespace) -> int:
    from .demos import run_mpc_demo, run_rkf_demo

    if args.which == "mpc-afti16":
        csv_text, summary = run_mpc_demo(steps=args.steps, opts=_options(args))
    else:
        csv_text, summary = run_rkf_demo(steps=args.steps, seed=args.seed,
                                         opts=_options(args))
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(csv_text)
    else:
        sys.stdout.write(csv_text)
    log.info("demo summary: %s", summary)
    return EXIT_OK


def cmd_trace(args: argparse.Namespace) -> int:
    rows = trace_experiment(ns=tuple(args.n), epsilons=tuple(args.eps_grid),
                            seed=args.seed)
    text = rows_to_csv(TRACE_HEADER, rows)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    rows = timing_experiment(ns=tuple(args.n), reps=args.reps, seed=args.seed)
    text = rows_to_csv(TIMING_HEADER, rows)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="certiqp",
                                 description="certificate-carrying box-QP solver")
    ap.add_argument("--version", action="version", version=f"certiqp {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve a box QP from JSON")
    p.add_argument("input")
    _add_solver_flags(p)
    p.set_defaults(fn=cmd_solve)

    p = sub.add_parser("certify", help="print the execution-time certificate")
    p.add_argument("n", type=int)
    _add_solver_flags(p)
    p.set_defaults(fn=cmd_certify)

    p = sub.add_parser("qp", help="solve a soft-constrained strictly convex QP")
    p.add_argument("input")
    _add_solver_flags(p)
    p.set_defaults(fn=cmd_qp)

    p = sub.add_parser("lasso", help="solve a Lasso problem")
    p.add_argument("input")
    _add_solver_flags(p)
    p.set_defaults(fn=cmd_lasso)

    p = sub.add_parser("svm", help="train a soft-margin SVM dual")
    p.add_argument("input")
    _add_solver_flags(p)
    p.set_defaults(fn=cmd_svm)

    p = sub.add_parser("demo", help="run an application demo, emit CSV")
    p.add_argument("which", choices=("mpc-afti16", "rkf-threetank"))
    p.add_argument("--steps", type=int, default=60)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", "-o")
    _add_solver_flags(p)
    p.set_defaults(fn=cmd_demo)

    p = sub.add_parser("trace", help="per-iteration gap/rank-1 traces")
    p.add_argument("--n", type=int, nargs="+", default=[100, 200])
    p.add_argument("--eps-grid", type=float, nargs="+", default=[1e-6, 1e-8])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", "-o")
    p.set_defaults(fn=cmd_trace)

    p = sub.add_parser("bench", help="wall-time comparison of the two solvers")
    p.add_argument("--n", type=int, nargs="+", default=[50, 100, 200, 500])
    p.add_argument("--reps", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1,
                   help="accepted for compatibility; runs are sequential")
    p.add_argument("--output", "-o")
    p.set_defaults(fn=cmd_bench)

    return ap


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except (ValueError, InvalidParameter, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except CertiqpError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
