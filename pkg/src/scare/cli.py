"""Command-line entry point: ``scare solve | verify | bench``.

Exit codes: 0 converged or verified, 2 not converged, 3 invalid input,
4 solver error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .benchmarks import BENCHMARKS, DEFAULT_SEED, BenchmarkSpec
from .campaign import export_counts, export_history, run_campaign
from .config import SolverConfig
from .errors import DimensionError, InvalidProblem, NotConverged, ScareError
from .oracles import mean_square_stable, scalar_scare_solve, spectral_abscissa
from .problem import ScareProblem, assemble_care, feedback_gain, min_eig, normalized_residual, sym
from .solvers import SOLVERS, solve

EXIT_OK, EXIT_NOT_CONVERGED, EXIT_INVALID, EXIT_SOLVER = 0, 2, 3, 4


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """Usage errors are invalid input (exit 3), not argparse's default 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _load_problem(path) -> ScareProblem:
    try:
        with open(path) as fp:
            return ScareProblem.load(fp)
    except (OSError, json.JSONDecodeError, DimensionError, InvalidProblem) as exc:
        raise InputError(f"cannot read problem {path}: {exc}") from exc


def _load_matrix(path, n) -> np.ndarray:
    try:
        with open(path) as fp:
            doc = json.load(fp)
        if isinstance(doc, dict):
            doc = doc["X"]
        x = np.array(doc, dtype=float).reshape(n, n)
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise InputError(f"cannot read matrix {path}: {exc}") from exc
    return x


def _emit(doc, out):
    text = json.dumps(doc, indent=2)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def _config(args) -> SolverConfig:
    changes = {}
    if args.tol is not None:
        changes["outer_tol"] = args.tol
    if args.max_iter is not None:
        changes["max_outer"] = args.max_iter
    if args.alpha is not None:
        changes["alpha"] = args.alpha
    if args.gamma is not None:
        changes["gamma"] = args.gamma
    if getattr(args, "warm_tol", None) is not None:
        changes["warm_threshold"] = args.warm_tol
    try:
        return SolverConfig(**changes)
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def cmd_solve(args) -> int:
    p = _load_problem(args.problem)
    cfg = _config(args)
    x0 = None if args.x0 in (None, "zero") else _load_matrix(args.x0, p.n)
    try:
        report = solve(p, args.solver, cfg, x0=x0)
        code = EXIT_OK if report.converged else EXIT_NOT_CONVERGED
        error = ""
    except ScareError as exc:
        report = getattr(exc, "report", None)
        code = EXIT_NOT_CONVERGED if isinstance(exc, NotConverged) else EXIT_SOLVER
        error = f"{type(exc).__name__}: {exc}"
    if args.history and report is not None:
        with open(args.history, "w") as fp:
            export_history(report, fp)
    doc = {"solver": args.solver, "converged": code == EXIT_OK, "error": error}
    if report is not None:
        doc.update(
            nres=report.nres,
            outer_iterations=report.outer_iterations,
            counts=report.counts,
            monotone_direction=report.monotone_direction,
            X=report.x.tolist(),
        )
    _emit(doc, args.out)
    if error:
        print(error, file=sys.stderr)
    return code


def verify(p: ScareProblem, x, tol: float = 1e-10) -> dict:
    """Residual, stabilization and oracle checks for a candidate solution."""
    x = np.asarray(x, dtype=float)
    out = {"symmetric": bool(np.linalg.norm(x - x.T) <= 1e-10 * (1 + np.linalg.norm(x)))}
    x = sym(x)
    out["psd"] = bool(min_eig(x) >= -1e-10 * (1 + np.linalg.norm(x)))
    out["nres"] = normalized_residual(p, x).nres
    c = assemble_care(p, x)
    out["closed_loop_abscissa"] = spectral_abscissa(c.a_c - c.g_c @ x)
    out["mean_square_stable"] = bool(mean_square_stable(p, feedback_gain(p, x)))
    if p.n == 1 and p.m == 1:
        ref = np.array([[scalar_scare_solve(p)]])
        out["oracle"] = "scalar-bisection"
    else:
        ref = solve(p, "fpc").x
        out["oracle"] = "fpc"
    out["oracle_rel_diff"] = float(np.linalg.norm(x - ref) / max(np.linalg.norm(ref), 1e-300))
    out["verified"] = bool(
        out["symmetric"] and out["psd"] and out["nres"] <= tol
        and out["mean_square_stable"] and out["oracle_rel_diff"] <= 1e-8
    )
    return out


def cmd_verify(args) -> int:
    p = _load_problem(args.problem)
    x = _load_matrix(args.x, p.n)
    try:
        doc = verify(p, x, args.tol)
    except ScareError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    _emit(doc, args.out)
    return EXIT_OK if doc["verified"] else EXIT_NOT_CONVERGED


def _parse_examples(text, seed):
    specs = []
    for item in filter(None, (t.strip() for t in text.split(","))):
        name, _, param = item.partition(":")
        if name not in BENCHMARKS:
            raise InputError(f"unknown benchmark {name!r}")
        try:
            value = None if not param else (int(param) if name == "ex5" else float(param))
        except ValueError as exc:
            raise InputError(f"bad parameter in {item!r}") from exc
        specs.append(BenchmarkSpec(name, value, seed))
    return specs


def cmd_bench(args) -> int:
    specs = _parse_examples(args.examples, args.seed)
    solvers = [s.strip() for s in args.solvers.split(",") if s.strip()]
    for s in solvers:
        if s not in SOLVERS:
            raise InputError(f"unknown solver {s!r}")
    cfg = _config(args)
    out = Path(args.out)
    (out / "history").mkdir(parents=True, exist_ok=True)
    records = run_campaign(specs, solvers, cfg)
    with open(out / "counts.csv", "w") as fp:
        export_counts(records, fp)
    for rec in records:
        with open(out / "history" / f"{rec.benchmark}_{rec.solver}.csv", "w") as fp:
            export_history(rec, fp)
    summary = [
        {"benchmark": r.benchmark, "solver": r.solver, "status": r.status, "error": r.error,
         "wall_s": r.wall_s, "seed": r.noise_seed}
        for r in records
    ]
    (out / "summary.json").write_text(json.dumps({"config": cfg.snapshot(), "runs": summary}, indent=2) + "\n")
    print(export_counts(records), end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="scare", description="Stochastic CARE solvers")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def knobs(sp):
        sp.add_argument("--tol", type=float, help="NRes stopping tolerance (default 1e-12)")
        sp.add_argument("--max-iter", type=int, help="outer iteration cap (default 500)")
        sp.add_argument("--alpha", type=float, help="Lyapunov doubling shift")
        sp.add_argument("--gamma", type=float, help="CARE doubling / Moebius shift")
        sp.add_argument("--warm-tol", type=float, help="phase switch step of the hybrid solvers")

    sp = sub.add_parser("solve", help="solve one problem file")
    sp.add_argument("--problem", required=True)
    sp.add_argument("--solver", choices=SOLVERS, default="fpc-mnt")
    sp.add_argument("--x0", default="zero", help="'zero' or a JSON matrix file")
    sp.add_argument("--history", help="write the residual history CSV here")
    sp.add_argument("--out", help="write the JSON result here instead of stdout")
    knobs(sp)
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("verify", help="check a candidate solution")
    sp.add_argument("--problem", required=True)
    sp.add_argument("--x", required=True, help="JSON matrix, or an object with key 'X'")
    sp.add_argument("--tol", type=float, default=1e-10, help="accepted NRes")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("bench", help="run the benchmark campaign")
    sp.add_argument("--examples", default=",".join(BENCHMARKS), help="e.g. ex1,ex2,ex5:10")
    sp.add_argument("--solvers", default="fpc,fpc-nt,fpc-mnt,gl-fp")
    sp.add_argument("--seed", type=int, default=DEFAULT_SEED)
    sp.add_argument("--out", required=True)
    knobs(sp)
    sp.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
