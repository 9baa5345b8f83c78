"""Structure-preserving doubling for a single CARE.

Solves ``A^T X + X A - X G X + H = 0`` for the stabilizing PSD solution.
With ``A_g = A - gamma I`` and ``W = A_g + G A_g^{-T} H`` the doubling starts
from

    E_0 = I + 2 gamma W^{-1}
    G_0 = 2 gamma W^{-1} G A_g^{-T}
    H_0 = 2 gamma A_g^{-T} H W^{-1}

and repeats

    E_{k+1} = E_k (I + G_k H_k)^{-1} E_k
    G_{k+1} = G_k + E_k (I + G_k H_k)^{-1} G_k E_k^T
    H_{k+1} = H_k + E_k^T H_k (I + G_k H_k)^{-1} E_k

so that ``H_k`` increases monotonically to X.

``G_k`` converges to the dual solution, and when that is large the solves
with ``I + G_k H_k`` limit the attainable accuracy.  A result that misses
the tolerance therefore gets up to two Newton-Kleinman corrections.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np
import scipy.linalg as sla

from .config import DEFAULT, SolverConfig
from .errors import LossOfPsd, NotConverged, ScareError, SingularPivot
from .problem import SINGULAR_COND, care_residual, fro_norm, min_eig, sym

MAX_GAMMA_RETRIES = 5
MAX_REFINEMENTS = 2


@dataclass(frozen=True)
class SdaState:
    e_k: np.ndarray
    g_k: np.ndarray
    h_k: np.ndarray
    iteration: int
    # ||H_k - H_{k-1}||_F, inf for the initial state
    step: float = np.inf


@dataclass(frozen=True)
class CareSolution:
    x: np.ndarray
    iterations: int
    care_residual: float
    gamma: float
    abscissa: float
    stable: bool
    refinements: int = 0


def default_shift(a) -> float:
    """``max(1, ||A||_F / sqrt(n))``; shared by the CARE, Lyapunov and Moebius code."""
    n = a.shape[0]
    return max(1.0, float(np.linalg.norm(a)) / np.sqrt(n))


def _lu(m, what):
    if not np.all(np.isfinite(m)):
        raise SingularPivot(f"{what} has non-finite entries")
    if np.linalg.cond(m) > SINGULAR_COND:
        raise SingularPivot(f"{what} is numerically singular")
    return sla.lu_factor(m)


def sda_states(a, g, h, gamma: float) -> Iterator[SdaState]:
    """Yield the doubling states ``(E_k, G_k, H_k)``, starting at k = 0.

    The generator never stops by itself; callers decide when H_k has settled.
    """
    a = np.asarray(a, dtype=float)
    g = sym(np.asarray(g, dtype=float))
    h = sym(np.asarray(h, dtype=float))
    n = a.shape[0]
    eye = np.eye(n)
    ag = a - gamma * eye
    ag_lu = _lu(ag, "A - gamma I")
    agt_inv_h = sla.lu_solve(ag_lu, h, trans=1)
    w = ag + g @ agt_inv_h
    w_lu = _lu(w, "A_gamma + G A_gamma^-T H")
    e_k = eye + 2 * gamma * sla.lu_solve(w_lu, eye)
    g_at = sla.lu_solve(ag_lu, g).T
    g_k = sym(2 * gamma * sla.lu_solve(w_lu, g_at))
    h_k = sym(2 * gamma * sla.lu_solve(w_lu, agt_inv_h.T, trans=1).T)

    k = 0
    yield SdaState(e_k, g_k, h_k, k)
    while True:
        m_lu = sla.lu_factor(eye + g_k @ h_k)
        t_e = sla.lu_solve(m_lu, e_k)
        t_g = sla.lu_solve(m_lu, g_k)
        dh = sym(e_k.T @ h_k @ t_e)
        g_k = sym(g_k + e_k @ t_g @ e_k.T)
        h_k = h_k + dh
        e_k = e_k @ t_e
        k += 1
        yield SdaState(e_k, g_k, h_k, k, float(np.linalg.norm(dh)))


def normalized_care_residual(a, g, h, x) -> float:
    res = fro_norm(care_residual(a, g, h, x))
    denom = 2 * fro_norm(a.T @ x) + fro_norm(x @ g @ x) + fro_norm(h)
    return float(res / denom) if denom > 0 else float(res)


def refine_care(a, g, h, x, cfg: SolverConfig = DEFAULT, steps: int = MAX_REFINEMENTS):
    """Newton-Kleinman defect correction of an approximate CARE solution.

    Each step solves ``(A - G X)^T X+ + X+ (A - G X) + H + X G X = 0`` with
    the Lyapunov doubling solver.  A step is kept only if it lowers the
    normalized residual.  Returns ``(x, residual, steps_taken)``.
    """
    from .lyap_sda import solve_lyapunov

    best, best_res, taken = x, normalized_care_residual(a, g, h, x), 0
    for _ in range(steps):
        if best_res <= cfg.inner_tol:
            break
        try:
            cand = solve_lyapunov(a - g @ best, h + best @ g @ best, cfg=cfg)
        except ScareError:
            break
        res = normalized_care_residual(a, g, h, cand)
        if not res < best_res:
            break
        best, best_res, taken = cand, res, taken + 1
    return best, best_res, taken


def solve_care(a, g, h, cfg: SolverConfig = DEFAULT, *, gamma=None) -> CareSolution:
    """Stabilizing solution of ``A^T X + X A - X G X + H = 0`` by doubling.

    Parameters
    ----------
    a : (n, n) array
    g, h : (n, n) symmetric PSD arrays
    cfg : SolverConfig
        ``inner_tol`` bounds the relative change of H_k at exit and
        ``max_doubling`` caps the number of doubling steps.
    gamma : float, optional
        Cayley shift; defaults to ``cfg.gamma`` or :func:`default_shift`.
        Doubled (up to 5 times) when the initialization is singular.

    Raises
    ------
    SingularPivot, NotConverged, LossOfPsd
    """
    a = np.asarray(a, dtype=float)
    if gamma is None:
        gamma = default_shift(a) if cfg.gamma == "auto" else float(cfg.gamma)

    for attempt in range(MAX_GAMMA_RETRIES + 1):
        try:
            states = sda_states(a, g, h, gamma)
            state = next(states)
            break
        except SingularPivot:
            if attempt == MAX_GAMMA_RETRIES:
                raise
            gamma *= 2.0

    for state in states:
        hk = state.h_k
        hnorm = np.linalg.norm(hk)
        if not np.all(np.isfinite(hk)):
            raise NotConverged(f"doubling diverged at step {state.iteration}")
        if min_eig(hk) < -cfg.psd_tol * (1.0 + hnorm):
            raise LossOfPsd(f"H_k lost definiteness at doubling step {state.iteration}")
        if state.step <= cfg.inner_tol * hnorm:
            break
        if state.iteration >= cfg.max_doubling:
            raise NotConverged(f"CARE doubling did not settle in {cfg.max_doubling} steps")

    g = sym(np.asarray(g, dtype=float))
    h = sym(np.asarray(h, dtype=float))
    x, res, taken = refine_care(a, g, h, sym(state.h_k), cfg)
    abscissa = float(np.max(np.linalg.eigvals(a - g @ x).real))
    return CareSolution(
        x=x,
        iterations=state.iteration,
        care_residual=res,
        gamma=gamma,
        abscissa=abscissa,
        stable=abscissa < -cfg.stab_tol,
        refinements=taken,
    )
