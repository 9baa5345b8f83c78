"""SCARE solvers built on the frozen-CARE and Newton linearizations.

``fp_care_sda``
    Fixed point over frozen CAREs, one CARE doubling solve per step.
``nt_fp_lyap_sda``
    Newton's method; every Newton step is itself solved by a fixed-point
    sweep over Lyapunov equations.
``mnt_fp_lyap_sda``
    Modified Newton: one Lyapunov solve per step.
``fpc_nt`` / ``fpc_mnt``
    Run ``fp_care_sda`` from zero until the spectral-norm step drops below
    ``warm_threshold`` and hand the iterate to the (modified) Newton solver.

All solvers stop on the normalized residual of the SCARE and return a
:class:`SolveReport`.  Errors raised inside a solver carry the attributes
``outer_index``, ``phase`` and ``report`` (the partial report).
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .care_sda import solve_care
from .config import DEFAULT, SolverConfig
from .errors import Diverged, InnerStalled, NotConverged, ScareError
from .lyap_sda import solve_lyapunov
from .problem import (
    DIVERGENCE_NORM,
    EPS,
    ScareProblem,
    assemble_care,
    care_residual,
    max_eig,
    min_eig,
    mnt_rhs,
    newton_operators,
    normalized_residual,
    pi_of,
    sym,
)

PHASES = ("fpc", "nt", "mnt", "gl")


class HistoryEntry(NamedTuple):
    iter: int
    phase: str
    nres: float
    wall_ns: int


@dataclass
class SolveReport:
    """Outcome of one SCARE solve.

    ``history`` has one entry per outer iteration (the start matrix is not
    listed).  ``counts`` maps a phase tag to its numbers of CARE solves,
    Lyapunov solves and inner fixed-point sweeps.  ``monotone_direction`` is
    the Loewner trend observed over ``x0, X_1, X_2, ...``.
    """

    x: np.ndarray
    converged: bool
    history: list[HistoryEntry]
    counts: dict[str, dict[str, int]]
    monotone_direction: str
    solver: str = ""
    iterates: list[np.ndarray] | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def nres(self) -> float:
        return self.history[-1].nres if self.history else float("nan")

    @property
    def outer_iterations(self) -> int:
        return len(self.history)

    def _total(self, key):
        return sum(c[key] for c in self.counts.values())

    @property
    def care_solves(self) -> int:
        return self._total("care")

    @property
    def lyap_solves(self) -> int:
        return self._total("lyap")

    @property
    def sweeps(self) -> int:
        return self._total("sweeps")

    def phase_iterations(self, phase: str) -> int:
        return sum(1 for h in self.history if h.phase == phase)


class _Tracker:
    """Collects history, counts and the Loewner trend while a solver runs."""

    def __init__(self, p, x0, cfg, solver):
        self.p = p
        self.cfg = cfg
        self.solver = solver
        self.t0 = time.perf_counter_ns()
        self.history: list[HistoryEntry] = []
        self.counts: dict[str, dict[str, int]] = {}
        self.up = True
        self.down = True
        self.x = sym(np.asarray(x0, dtype=float))
        self.iterates = [self.x] if cfg.keep_iterates else None
        self.diagnostics: dict = {}
        self.phase = ""

    def count(self, phase, key, k=1):
        c = self.counts.setdefault(phase, {"care": 0, "lyap": 0, "sweeps": 0})
        c[key] += k

    def step(self, phase, x_new) -> tuple[float, float]:
        """Record a new iterate; return its NRes and the spectral step norm."""
        x_new = sym(x_new)
        d = x_new - self.x
        lo, hi = (min_eig(d), max_eig(d))
        slack = self.cfg.psd_tol * (1.0 + np.linalg.norm(self.x))
        self.up &= lo >= -slack
        self.down &= hi <= slack
        self.x = x_new
        if self.iterates is not None:
            self.iterates.append(x_new)
        nres = normalized_residual(self.p, x_new).nres
        self.history.append(HistoryEntry(len(self.history) + 1, phase, nres, time.perf_counter_ns() - self.t0))
        if not np.isfinite(nres) or np.max(np.abs(x_new)) > DIVERGENCE_NORM:
            raise Diverged(f"iterate {len(self.history)} is non-finite or above {DIVERGENCE_NORM:g}")
        return nres, max(abs(lo), abs(hi))

    def report(self, converged) -> SolveReport:
        if self.up:
            direction = "nondecreasing"
        elif self.down:
            direction = "nonincreasing"
        else:
            direction = "none"
        return SolveReport(
            x=self.x,
            converged=converged,
            history=list(self.history),
            counts={k: dict(v) for k, v in self.counts.items()},
            monotone_direction=direction,
            solver=self.solver,
            iterates=self.iterates,
            diagnostics=dict(self.diagnostics),
        )


def _fpc_phase(p, tr: _Tracker, cfg, warm: float | None = None) -> bool:
    """Frozen-CARE fixed point.  Returns True once NRes <= outer_tol.

    With ``warm`` set, also returns (False) as soon as the spectral-norm
    step falls below it.
    """
    tr.phase = "fpc"
    for _ in range(cfg.max_outer):
        c = assemble_care(p, tr.x)
        sol = solve_care(c.a_c, c.g_c, c.h_c, cfg)
        tr.count("fpc", "care")
        nres, step = tr.step("fpc", sol.x)
        if nres <= cfg.outer_tol:
            return True
        if warm is not None and cfg.warm_relative:
            step /= max(np.linalg.norm(tr.x, 2), np.finfo(float).tiny)
        if warm is not None and step < warm:
            return False
    raise NotConverged(f"fixed-point CARE iteration did not converge in {cfg.max_outer} steps")


def _newton_step(p, x, tr: _Tracker, cfg):
    """Solve ``A_X^T Y + Y A_X + Pi_X(Y) + M_X = 0`` by Lyapunov sweeps."""
    ops = newton_operators(p, x)
    a, m = ops.a_xk, ops.m_xk
    y = x
    pi_y = ops.project(pi_of(p, y))
    for _ in range(cfg.max_inner):
        y_new = solve_lyapunov(a, pi_y + m, cfg=cfg)
        tr.count("nt", "lyap")
        tr.count("nt", "sweeps")
        pi_y = ops.project(pi_of(p, y_new))
        aty = a.T @ y_new
        res = np.linalg.norm(aty + aty.T + pi_y + m)
        denom = 2 * np.linalg.norm(aty) + np.linalg.norm(pi_y) + np.linalg.norm(m)
        rel = res / denom if denom > 0 else res
        if rel <= cfg.fp_tol or np.linalg.norm(y_new - y) <= 10 * EPS * np.linalg.norm(y_new):
            return y_new
        y = y_new
    raise InnerStalled(f"Newton inner sweep did not settle in {cfg.max_inner} Lyapunov solves")


def _nt_phase(p, tr: _Tracker, cfg) -> bool:
    tr.phase = "nt"
    for _ in range(cfg.max_outer):
        nres, _ = tr.step("nt", _newton_step(p, tr.x, tr, cfg))
        if nres <= cfg.outer_tol:
            return True
    raise NotConverged(f"Newton iteration did not converge in {cfg.max_outer} steps")


def mnt_equivalence_residual(p: ScareProblem, xk, x_next) -> float:
    """Relative defect of the modified Newton step written as a perturbed CARE.

    ``A_k^T X + X A_k - X G_k X + H_k + (X - X_k) G_k (X - X_k)`` with the
    frozen coefficients at ``X_k``, divided by
    ``1 + ||H_k|| + ||X G_k X|| + 2 ||A_k^T X||``.
    """
    c = assemble_care(p, xk)
    d = x_next - xk
    lhs = care_residual(c.a_c, c.g_c, c.h_c, x_next) + d @ c.g_c @ d
    scale = 1.0 + np.linalg.norm(c.h_c) + np.linalg.norm(x_next @ c.g_c @ x_next) + 2 * np.linalg.norm(c.a_c.T @ x_next)
    return float(np.linalg.norm(lhs) / scale)


def _mnt_phase(p, tr: _Tracker, cfg) -> bool:
    tr.phase = "mnt"
    worst = 0.0
    for _ in range(cfg.max_outer):
        xk = tr.x
        ops = newton_operators(p, xk)
        x_next = solve_lyapunov(ops.a_xk, mnt_rhs(p, xk, ops), cfg=cfg)
        tr.count("mnt", "lyap")
        worst = max(worst, mnt_equivalence_residual(p, xk, x_next))
        tr.diagnostics["mnt_equivalence_max"] = worst
        nres, _ = tr.step("mnt", x_next)
        if nres <= cfg.outer_tol:
            return True
    raise NotConverged(f"modified Newton iteration did not converge in {cfg.max_outer} steps")


def _run(p, x0, cfg, name, phases: list[Callable]) -> SolveReport:
    tr = _Tracker(p, x0, cfg, name)
    try:
        converged = False
        for run_phase in phases:
            converged = run_phase(p, tr, cfg)
    except ScareError as exc:
        exc.outer_index = len(tr.history) + 1
        exc.phase = tr.phase
        exc.report = tr.report(False)
        raise
    return tr.report(converged)


def _start(p, x0):
    return np.zeros((p.n, p.n)) if x0 is None else np.asarray(x0, dtype=float)


def fp_care_sda(p: ScareProblem, x0=None, cfg: SolverConfig = DEFAULT) -> SolveReport:
    """Fixed point ``X_{k+1} = CARE solution frozen at X_k``.

    Nondecreasing from ``x0 = 0``; nonincreasing from an ``x0 >= X`` with
    ``R(x0) <= 0`` and a stable frozen closed loop.
    """
    return _run(p, _start(p, x0), cfg, "fpc", [_fpc_phase])


def nt_fp_lyap_sda(p: ScareProblem, x0=None, cfg: SolverConfig = DEFAULT) -> SolveReport:
    """Newton's method with a Lyapunov fixed-point sweep for each step.

    Requires a stabilizing ``x0``; a non-Hurwitz closed loop surfaces as
    :class:`~scare.errors.NotHurwitz`.
    """
    return _run(p, _start(p, x0), cfg, "nt", [_nt_phase])


def mnt_fp_lyap_sda(p: ScareProblem, x0=None, cfg: SolverConfig = DEFAULT) -> SolveReport:
    """Modified Newton: ``A_k^T X + X A_k + Pi_k(X_k) + M_k = 0`` per step.

    ``report.diagnostics["mnt_equivalence_max"]`` is the largest per-step
    defect from :func:`mnt_equivalence_residual`.
    """
    return _run(p, _start(p, x0), cfg, "mnt", [_mnt_phase])


def _warm_phase(p, tr: _Tracker, cfg) -> bool:
    return _fpc_phase(p, tr, cfg, warm=cfg.warm_threshold)


def fpc_nt(p: ScareProblem, cfg: SolverConfig = DEFAULT) -> SolveReport:
    """Warm start by the frozen-CARE fixed point, then Newton."""
    return _run(p, np.zeros((p.n, p.n)), cfg, "fpc-nt", [_warm_phase, _nt_phase])


def fpc_mnt(p: ScareProblem, cfg: SolverConfig = DEFAULT) -> SolveReport:
    """Warm start by the frozen-CARE fixed point, then modified Newton."""
    return _run(p, np.zeros((p.n, p.n)), cfg, "fpc-mnt", [_warm_phase, _mnt_phase])


SOLVERS = ("fpc", "nt", "mnt", "fpc-nt", "fpc-mnt", "gl-fp")


def initial_matrix(p: ScareProblem, cfg: SolverConfig, x0=None) -> np.ndarray:
    """Start matrix according to ``cfg.x0_policy``.

    An explicit ``x0`` always wins.  ``warm-care`` uses the CARE solution
    frozen at zero, i.e. the first fixed-point iterate.
    """
    if x0 is not None:
        return sym(np.asarray(x0, dtype=float))
    if cfg.x0_policy == "given":
        raise ValueError("x0_policy 'given' needs an explicit x0")
    if cfg.x0_policy == "warm-care":
        c = assemble_care(p, np.zeros((p.n, p.n)))
        return solve_care(c.a_c, c.g_c, c.h_c, cfg).x
    return np.zeros((p.n, p.n))


def solve(p: ScareProblem, solver: str = "fpc-mnt", cfg: SolverConfig = DEFAULT, x0=None) -> SolveReport:
    """Dispatch by solver name (one of :data:`SOLVERS`).

    The hybrid solvers and ``gl-fp`` ignore ``x0``.
    """
    if solver == "fpc":
        return fp_care_sda(p, initial_matrix(p, cfg, x0), cfg)
    if solver == "nt":
        return nt_fp_lyap_sda(p, initial_matrix(p, cfg, x0), cfg)
    if solver == "mnt":
        return mnt_fp_lyap_sda(p, initial_matrix(p, cfg, x0), cfg)
    if solver == "fpc-nt":
        return fpc_nt(p, cfg)
    if solver == "fpc-mnt":
        return fpc_mnt(p, cfg)
    if solver == "gl-fp":
        from .moebius import fp_scare

        return fp_scare(p, cfg=cfg)
    raise ValueError(f"unknown solver {solver!r}; expected one of {', '.join(SOLVERS)}")
