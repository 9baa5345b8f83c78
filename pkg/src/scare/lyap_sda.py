"""Doubling solver for ``E^T Y + Y E + C = 0`` with Hurwitz E.

The Cayley map ``z -> (z + alpha) / (z - alpha)`` turns the continuous
equation into the Stein equation ``Y = A_d^T Y A_d + H_d`` with

    A_d = I + 2 alpha (E - alpha I)^{-1}
    H_d = 2 alpha (E^T - alpha I)^{-1} C (E - alpha I)^{-1}

whose solution is summed by squaring: ``E_{k+1} = E_k^2`` and
``Y_{k+1} = Y_k + E_k^T Y_k E_k``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np
import scipy.linalg as sla

from .care_sda import default_shift
from .config import DEFAULT, SolverConfig
from .errors import NotConverged, NotHurwitz, SingularShift
from .problem import DIVERGENCE_NORM, EPS, SINGULAR_COND, sym

# ||E_k||_F beyond which the squaring is declared divergent


@dataclass(frozen=True)
class LyapState:
    e_k: np.ndarray
    y_k: np.ndarray
    iteration: int
    # ||E_k^T Y_k E_k||_F of the step that produced y_k; inf initially
    step: float = np.inf


def spectral_abscissa(m) -> float:
    return float(np.max(np.linalg.eigvals(m).real))


def cayley_dare_form(e, c, alpha: float):
    """Return ``(A_d, H_d)`` with ``Y = A_d^T Y A_d + H_d`` equivalent to
    ``E^T Y + Y E + C = 0``.

    Raises
    ------
    SingularShift
        If ``E - alpha I`` is numerically singular.
    """
    e = np.asarray(e, dtype=float)
    c = sym(np.asarray(c, dtype=float))
    n = e.shape[0]
    shifted = e - alpha * np.eye(n)
    if not np.all(np.isfinite(shifted)) or np.linalg.cond(shifted) > SINGULAR_COND:
        raise SingularShift(f"E - {alpha:g} I is numerically singular")
    lu = sla.lu_factor(shifted)
    inv = sla.lu_solve(lu, np.eye(n))
    a_d = np.eye(n) + 2 * alpha * inv
    h_d = sym(2 * alpha * inv.T @ c @ inv)
    return a_d, h_d


def lyap_sda_states(e, c, alpha: float) -> Iterator[LyapState]:
    """Yield ``(E_k, Y_k)`` of the squaring iteration, starting at k = 0."""
    e_k, y_k = cayley_dare_form(e, c, alpha)
    k = 0
    yield LyapState(e_k, y_k, k)
    while True:
        dy = sym(e_k.T @ y_k @ e_k)
        y_k = y_k + dy
        e_k = e_k @ e_k
        k += 1
        yield LyapState(e_k, y_k, k, float(np.linalg.norm(dy)))


def lyapunov_residual(e, c, y) -> float:
    """``||E^T Y + Y E + C||_F / (2 ||E^T Y||_F + ||C||_F)``."""
    ety = e.T @ y
    res = np.linalg.norm(ety + ety.T + c)
    denom = 2 * np.linalg.norm(ety) + np.linalg.norm(c)
    return float(res / denom) if denom > 0 else float(res)


def solve_lyapunov(e, c, alpha=None, cfg: SolverConfig = DEFAULT) -> np.ndarray:
    """Solve ``E^T Y + Y E + C = 0`` by Cayley transform and squaring.

    Parameters
    ----------
    e : (n, n) array
        Hurwitz coefficient.
    c : (n, n) symmetric array
    alpha : float, optional
        Cayley shift. Defaults to ``cfg.alpha`` or ``max(1, ||E||_F / sqrt(n))``.
    cfg : SolverConfig
        ``inner_tol`` is the target normalized residual; the loop also stops
        once the increment falls below machine precision relative to Y.

    Returns
    -------
    (n, n) ndarray
        Symmetric solution Y; PSD whenever C is.

    Raises
    ------
    NotHurwitz
        E has an eigenvalue with real part >= -stab_tol (checked up front for
        n <= ``cfg.hurwitz_check_max``, otherwise detected by divergence).
    NotConverged
        The squaring did not settle within ``cfg.max_doubling`` steps.
    """
    e = np.asarray(e, dtype=float)
    c = sym(np.asarray(c, dtype=float))
    n = e.shape[0]
    if n <= cfg.hurwitz_check_max:
        abscissa = spectral_abscissa(e)
        if not abscissa < -cfg.stab_tol:
            raise NotHurwitz(f"Lyapunov coefficient has spectral abscissa {abscissa:.3e}")
    if alpha is None:
        alpha = default_shift(e) if cfg.alpha == "auto" else float(cfg.alpha)

    for state in lyap_sda_states(e, c, alpha):
        y = state.y_k
        enorm = np.linalg.norm(state.e_k)
        ynorm = np.linalg.norm(y)
        # the norm overflows before the entries do
        if not (np.isfinite(enorm) and np.isfinite(ynorm)) or enorm > DIVERGENCE_NORM:
            raise NotHurwitz(f"Lyapunov doubling diverged at step {state.iteration}")
        if lyapunov_residual(e, c, y) <= cfg.inner_tol:
            break
        if state.step <= EPS * ynorm:
            break
        if state.iteration >= cfg.max_doubling:
            raise NotConverged(f"Lyapunov doubling did not settle in {cfg.max_doubling} steps")
    return sym(state.y_k)
