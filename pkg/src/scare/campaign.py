"""Benchmark campaigns and their CSV exports."""
from __future__ import annotations

import csv
import io
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .benchmarks import BenchmarkSpec, make_benchmark
from .config import DEFAULT, SolverConfig
from .errors import NotConverged, ScareError
from .solvers import SOLVERS, SolveReport, solve

HISTORY_HEADER = ("iter", "phase", "nres", "wall_ns")
COUNTS_HEADER = (
    "benchmark", "solver", "status", "care_solves", "lyap_solves",
    "fp_iterations", "outer_iterations", "final_nres", "wall_s",
)


@dataclass
class RunRecord:
    """One (benchmark, solver) run.

    ``status`` is ``"converged"``, ``"not-converged"`` or ``"error"``; for
    failures ``error`` holds ``"ExceptionName: message"`` and ``report`` the
    partial report when one was available.
    """

    benchmark: str
    solver: str
    report: SolveReport | None
    wall_s: float
    config: dict
    noise_seed: int
    status: str = "converged"
    error: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def converged(self) -> bool:
        return self.status == "converged"


def run_one(spec: BenchmarkSpec, solver: str, cfg: SolverConfig = DEFAULT, problem=None) -> RunRecord:
    """Run a single solver on a benchmark; failures are recorded, not raised."""
    p = make_benchmark(spec) if problem is None else problem
    t0 = time.perf_counter()
    report, status, error = None, "converged", ""
    try:
        report = solve(p, solver, cfg)
        if not report.converged:
            status = "not-converged"
    except ScareError as exc:
        report = getattr(exc, "report", None)
        status = "not-converged" if isinstance(exc, NotConverged) else "error"
        error = f"{type(exc).__name__}: {exc}"
    return RunRecord(
        benchmark=spec.label, solver=solver, report=report,
        wall_s=time.perf_counter() - t0, config=cfg.snapshot(),
        noise_seed=spec.noise_seed, status=status, error=error,
    )


def _threads() -> int:
    try:
        return max(0, int(os.environ.get("SCARE_THREADS", "0")))
    except ValueError:
        return 0


def run_campaign(specs, solvers=SOLVERS, cfg: SolverConfig = DEFAULT) -> list[RunRecord]:
    """Run every (benchmark, solver) pair.

    ``SCARE_THREADS`` > 0 runs the pairs on that many threads; the returned
    list is ordered by (benchmark, solver) in input order either way.
    """
    specs = list(specs)
    solvers = list(solvers)
    problems = {s: make_benchmark(s) for s in specs}
    jobs = [(s, name) for s in specs for name in solvers]
    threads = _threads()
    if threads == 0:
        return [run_one(s, name, cfg, problems[s]) for s, name in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(run_one, s, name, cfg, problems[s]) for s, name in jobs]
        return [f.result() for f in futures]


def export_history(record: RunRecord | SolveReport, stream=None) -> str:
    """Write ``iter,phase,nres,wall_ns`` rows (one per outer iteration).

    Returns the CSV text; also writes it to ``stream`` when given.
    """
    report = record.report if isinstance(record, RunRecord) else record
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HISTORY_HEADER)
    for h in (report.history if report is not None else []):
        w.writerow((h.iter, h.phase, repr(float(h.nres)), h.wall_ns))
    text = buf.getvalue()
    if stream is not None:
        stream.write(text)
    return text


def record_counts(rec: RunRecord) -> dict:
    r = rec.report
    return {
        "benchmark": rec.benchmark,
        "solver": rec.solver,
        "status": rec.status,
        "care_solves": r.care_solves if r else 0,
        "lyap_solves": r.lyap_solves if r else 0,
        "fp_iterations": r.phase_iterations("gl") if r else 0,
        "outer_iterations": r.outer_iterations if r else 0,
        "final_nres": repr(float(r.nres)) if r and r.history else "",
        "wall_s": f"{rec.wall_s:.6g}",
    }


def export_counts(records, stream=None) -> str:
    """Long-format table of equation-solve counts and wall times."""
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=COUNTS_HEADER, lineterminator="\n")
    w.writeheader()
    for rec in records:
        w.writerow(record_counts(rec))
    text = buf.getvalue()
    if stream is not None:
        stream.write(text)
    return text
