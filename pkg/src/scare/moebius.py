"""Fixed-point iteration on the Moebius image of a SCARE.

With ``A^ = A - B R^{-1} L^T``, ``B^ = B R^{-1/2}`` and a full-rank factor
``C^T C = Q - L R^{-1} L^T``, the Cayley shift ``gamma`` maps the SCARE to a
stochastic discrete-time Riccati equation whose solution is the limit of

    X_1 = H,   X_{k+1} = E^T (X kron I_{r+1}) (I + G (X kron I_{r+1}))^{-1} E + H.

The noise blocks are carried in "state-major" order, where index
``j * r + i`` is state j of channel i; the two perfect-shuffle permutations
below convert between that order and the channel-major stacking of the
``A0_i``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .care_sda import default_shift
from .config import DEFAULT, SolverConfig
from .errors import NotConverged, RankDeficiencyWarning, ScareError, SingularInnerSystem, SingularShift
from .problem import EPS, SINGULAR_COND, ScareProblem, sym

MAX_SHIFT_RETRIES = 5
# sweeps in a row whose relative step is at roundoff level before giving up
STALL_SWEEPS = 20


def perm_shuffle(n: int, r: int) -> np.ndarray:
    """Permutation matrix P with ``P^T (X kron I_r) P = I_r kron X``.

    Column ``i * n + j`` (channel-major) has its one in row ``j * r + i``
    (state-major).
    """
    P = np.zeros((n * r, n * r))
    i, j = np.divmod(np.arange(n * r), n)
    P[j * r + i, i * n + j] = 1.0
    return P


def perm_hat(n: int, r: int) -> np.ndarray:
    """Permutation matrix P with ``diag(X, X kron I_r) = P^T (X kron I_{r+1}) P``.

    Column ``p < n`` maps to slot 0 of state p; column ``n + j * r + i`` maps
    to slot ``i + 1`` of state j.
    """
    size = n * (r + 1)
    P = np.zeros((size, size))
    head = np.arange(n)
    P[head * (r + 1), head] = 1.0
    j, i = np.divmod(np.arange(n * r), r)
    P[j * (r + 1) + i + 1, n + j * r + i] = 1.0
    return P


def _sym_power(m, power):
    w, v = np.linalg.eigh(sym(m))
    return (v * w ** power) @ v.T


def full_rank_factor(s):
    """``C`` with ``C^T C = S`` and as many rows as the numerical rank of S.

    Eigenpairs with ``lambda <= n * eps * lambda_max`` are dropped.
    """
    n = s.shape[0]
    w, v = np.linalg.eigh(sym(s))
    top = w[-1] if w.size else 0.0
    keep = w > n * EPS * top if top > 0 else np.zeros(n, dtype=bool)
    return np.sqrt(w[keep])[:, None] * v[:, keep].T


@dataclass(frozen=True)
class MoebiusData:
    a_hat: np.ndarray
    b_hat: np.ndarray
    c_hat: np.ndarray
    perm_shuffle: np.ndarray
    perm_hat: np.ndarray
    script_a: np.ndarray
    script_b: np.ndarray
    gamma: float
    z_gamma: np.ndarray
    e_gamma: np.ndarray
    h_gamma: np.ndarray
    g_gamma: np.ndarray
    rank_deficient: bool = False


def build_moebius(p: ScareProblem, gamma: float) -> MoebiusData:
    """Assemble ``E_gamma``, ``H_gamma`` and ``G_gamma`` for shift ``gamma``.

    Raises
    ------
    SingularShift
        If ``A^ - gamma I`` is numerically singular.
    """
    n, m, r = p.n, p.m, p.r
    rinv_lt = np.linalg.solve(p.R, p.L.T)
    a_hat = p.A - p.B @ rinv_lt
    r_isqrt = _sym_power(p.R, -0.5)
    b_hat = p.B @ r_isqrt
    c_hat = full_rank_factor(p.Q - p.L @ rinv_lt)
    ell = c_hat.shape[0]
    if ell < n:
        warnings.warn(f"Q - L R^-1 L^T has rank {ell} < {n}", RankDeficiencyWarning, stacklevel=2)

    P = perm_shuffle(n, r)
    Ph = perm_hat(n, r)
    a0 = p.A0.reshape(r * n, n)
    b0 = p.B0.reshape(r * n, m)
    script_a = P @ (a0 - b0 @ rinv_lt)
    script_b = P @ b0 @ r_isqrt

    a_g = a_hat - gamma * np.eye(n)
    if not np.all(np.isfinite(a_g)) or np.linalg.cond(a_g) > SINGULAR_COND:
        raise SingularShift(f"A^ - {gamma:g} I is numerically singular")
    lu = sla.lu_factor(a_g)
    ainv = sla.lu_solve(lu, np.eye(n))
    ainv_b = ainv @ b_hat
    z = c_hat @ ainv_b
    bzc = b_hat @ z.T @ c_hat
    s2g = np.sqrt(2 * gamma)

    top = a_g + 2 * gamma * np.eye(n) + bzc
    bottom = s2g * (script_a + script_b @ z.T @ c_hat)
    core = np.linalg.solve(np.eye(n) + ainv @ bzc, ainv)
    e_gamma = Ph @ np.vstack([top, bottom]) @ core

    ca = c_hat @ ainv
    h_gamma = sym(2 * gamma * ca.T @ np.linalg.solve(np.eye(ell) + z @ z.T, ca))

    f = np.vstack([s2g * ainv_b, script_a @ ainv_b - script_b])
    g_tilde = f @ np.linalg.solve(np.eye(m) + z.T @ z, f.T)
    g_gamma = sym(Ph @ g_tilde @ Ph.T)

    return MoebiusData(
        a_hat=a_hat, b_hat=b_hat, c_hat=c_hat, perm_shuffle=P, perm_hat=Ph,
        script_a=script_a, script_b=script_b, gamma=float(gamma), z_gamma=z,
        e_gamma=e_gamma, h_gamma=h_gamma, g_gamma=g_gamma, rank_deficient=ell < n,
    )


def moebius_step(data: MoebiusData, x) -> np.ndarray:
    """One application of the fixed-point map, symmetrized."""
    n = data.h_gamma.shape[0]
    k = data.e_gamma.shape[0] // n
    xk = np.kron(x, np.eye(k))
    lhs = np.eye(n * k) + data.g_gamma @ xk
    lu, piv, info = sla.lapack.dgetrf(lhs)
    if info > 0:
        raise SingularInnerSystem("I + G (X kron I) is singular")
    rcond, _ = sla.lapack.dgecon(lu, np.linalg.norm(lhs, 1), norm="1")
    if rcond < 1.0 / SINGULAR_COND:
        raise SingularInnerSystem("I + G (X kron I) is numerically singular")
    sol, _ = sla.lapack.dgetrs(lu, piv, data.e_gamma)
    return sym(data.e_gamma.T @ xk @ sol + data.h_gamma)


def fp_scare(p: ScareProblem, gamma=None, cfg: SolverConfig = DEFAULT):
    """Solve the SCARE by the Moebius fixed point, stopping on NRes.

    ``gamma`` defaults to ``cfg.gamma`` or ``max(1, ||A^||_F / sqrt(n))`` and
    is doubled (up to 5 times) while ``A^ - gamma I`` is singular.  The
    report counts one ``"gl"`` sweep per iterate, ``X_1 = H_gamma`` included.
    The transformed data carry their own rounding error, so NRes can level
    off above ``outer_tol``; after ``STALL_SWEEPS`` consecutive steps below
    ``100 eps ||X_k||_2`` the run ends with :class:`NotConverged`.
    """
    from .solvers import _Tracker

    if gamma is None and cfg.gamma != "auto":
        gamma = float(cfg.gamma)
    if gamma is None:
        a_hat = p.A - p.B @ np.linalg.solve(p.R, p.L.T)
        gamma = default_shift(a_hat)
    for attempt in range(MAX_SHIFT_RETRIES + 1):
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RankDeficiencyWarning)
                data = build_moebius(p, gamma)
            break
        except SingularShift:
            if attempt == MAX_SHIFT_RETRIES:
                raise
            gamma *= 2.0

    tr = _Tracker(p, np.zeros((p.n, p.n)), cfg, "gl-fp")
    tr.phase = "gl"
    tr.diagnostics["gamma"] = gamma
    try:
        x = data.h_gamma
        stalled = 0
        for _ in range(cfg.max_outer):
            tr.count("gl", "sweeps")
            nres, step = tr.step("gl", x)
            if nres <= cfg.outer_tol:
                return tr.report(True)
            stalled = stalled + 1 if step <= 100 * EPS * np.linalg.norm(tr.x, 2) else 0
            if stalled >= STALL_SWEEPS:
                raise NotConverged(f"Moebius fixed point stalled at NRes {nres:.2e} above the tolerance")
            x = moebius_step(data, tr.x)
        raise NotConverged(f"Moebius fixed point did not converge in {cfg.max_outer} steps")
    except ScareError as exc:
        exc.outer_index = len(tr.history) + 1
        exc.phase = "gl"
        exc.report = tr.report(False)
        raise
