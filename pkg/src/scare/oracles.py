"""Brute-force reference solvers and premise checks.

Everything here is dense and independent of the doubling code: Lyapunov
and generalized Lyapunov equations are solved on their ``n^2``
vectorization, CAREs by Newton-Kleinman on top of that, and scalar SCAREs
by bisection.  Vectorization is column-major, ``vec(A X B) = (B^T kron A)
vec(X)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import NoPsdRoot, NotHurwitz, OracleSizeError, SingularL
from .problem import (
    EPS,
    PSD_TOL,
    ScareProblem,
    _WeightSolve,
    assemble_care,
    max_eig,
    min_eig,
    newton_operators,
    pi_full,
    residual,
    sym,
)

KRON_MAX_N = 64
NK_MAX_N = 32
MS_KRON_MAX = 4096


def _vec(x):
    return np.reshape(x, -1, order="F")


def _unvec(v, n):
    return np.reshape(v, (n, n), order="F")


def _require(n, cap, what):
    if n > cap:
        raise OracleSizeError(f"{what} is limited to n <= {cap}, got n = {n}")


def lyapunov_matrix(e) -> np.ndarray:
    """``n^2 x n^2`` matrix of ``Y -> E^T Y + Y E``."""
    n = e.shape[0]
    eye = np.eye(n)
    return np.kron(eye, e.T) + np.kron(e.T, eye)


def _solve_vec(op, rhs, n):
    try:
        lu = sla.lu_factor(op, check_finite=True)
    except (ValueError, sla.LinAlgError) as exc:
        raise SingularL(str(exc)) from exc
    if np.linalg.cond(op) > 1.0 / (100 * EPS):
        raise SingularL("vectorized operator is numerically singular")
    return sym(_unvec(sla.lu_solve(lu, _vec(rhs)), n))


def kron_lyap_solve(e, c) -> np.ndarray:
    """Solve ``E^T Y + Y E + C = 0`` as an ``n^2`` linear system (n <= 64)."""
    e = np.atleast_2d(np.asarray(e, dtype=float))
    c = np.atleast_2d(np.asarray(c, dtype=float))
    n = e.shape[0]
    _require(n, KRON_MAX_N, "kron_lyap_solve")
    return _solve_vec(lyapunov_matrix(e), -c, n)


def generalized_lyapunov_matrix(k, mats) -> np.ndarray:
    """Matrix of ``Z -> K^T Z + Z K + sum_i M_i^T Z M_i``."""
    op = lyapunov_matrix(k)
    for m in mats:
        op = op + np.kron(m.T, m.T)
    return op


def kron_generalized_lyap_solve(k, mats, c) -> np.ndarray:
    """Solve ``K^T Z + Z K + sum_i M_i^T Z M_i + C = 0`` (n <= 64)."""
    k = np.atleast_2d(np.asarray(k, dtype=float))
    n = k.shape[0]
    _require(n, KRON_MAX_N, "kron_generalized_lyap_solve")
    return _solve_vec(generalized_lyapunov_matrix(k, mats), -np.asarray(c, dtype=float), n)


def spectral_abscissa(m) -> float:
    return float(np.max(np.linalg.eigvals(m).real))


def newton_kleinman_care(a, g, h, x0, max_iter: int = 100) -> np.ndarray:
    """Stabilizing CARE solution by Newton-Kleinman with Kronecker solves.

    ``(A - G X_j)^T X + X (A - G X_j) = -(H + X_j G X_j)`` from a stabilizing
    ``x0`` until the relative change drops below 1e-14 (n <= 32).
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    g = sym(np.atleast_2d(np.asarray(g, dtype=float)))
    h = sym(np.atleast_2d(np.asarray(h, dtype=float)))
    x = sym(np.atleast_2d(np.asarray(x0, dtype=float)))
    _require(a.shape[0], NK_MAX_N, "newton_kleinman_care")
    prev_change = np.inf
    for _ in range(max_iter):
        k = a - g @ x
        if spectral_abscissa(k) >= 0:
            raise NotHurwitz("Newton-Kleinman iterate is not stabilizing")
        x_new = kron_lyap_solve(k, h + x @ g @ x)
        change = np.linalg.norm(x_new - x)
        x = x_new
        scale = max(np.linalg.norm(x), np.finfo(float).tiny)
        if change <= 1e-14 * scale:
            break
        # rounding floor: the change stopped shrinking near machine precision
        if change <= 1e-12 * scale and change >= prev_change:
            break
        prev_change = change
    return x


def _scalar_terms(p: ScareProblem):
    a, b, q, rho, l = (float(M.ravel()[0]) for M in (p.A, p.B, p.Q, p.R, p.L))
    al = p.A0.reshape(-1)
    be = p.B0.reshape(-1)
    return a, b, q, rho, l, float(al @ al), float(al @ be), float(be @ be)


def scalar_residual(p: ScareProblem, x: float) -> float:
    """Scalar SCARE residual evaluated by its closed formula."""
    a, b, q, rho, l, aa, ab, bb = _scalar_terms(p)
    return 2 * a * x + aa * x + q - (x * b + ab * x + l) ** 2 / (rho + bb * x)


def scalar_scare_solve(p: ScareProblem, cap: float = 1e30) -> float:
    """PSD stabilizing root of a scalar SCARE by bisection.

    The residual is concave on ``x >= 0`` and nonnegative at zero, so its
    nonnegative set is an interval ``[0, x*]``; bisection keeps
    ``f(lo) >= 0 > f(hi)`` and converges to ``x*``.
    """
    if p.n != 1 or p.m != 1:
        raise ValueError("scalar_scare_solve needs n = m = 1")
    f = lambda x: scalar_residual(p, x)
    lo, hi = 0.0, 1.0
    if f(lo) < 0:
        raise NoPsdRoot("residual is negative at zero")
    while f(hi) >= 0:
        lo, hi = hi, 2 * hi
        if hi > cap:
            raise NoPsdRoot(f"no sign change below {cap:g}")
    while hi - lo > 2 * EPS * hi:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if f(mid) >= 0:
            lo = mid
        else:
            hi = mid
    x = lo if abs(f(lo)) <= abs(f(hi)) else hi
    c = assemble_care(p, [[x]])
    if float(c.a_c[0, 0] - c.g_c[0, 0] * x) > 0:
        raise NoPsdRoot("root found but its closed loop is unstable")
    return x


def _rank(m, n) -> int:
    s = np.linalg.svd(m, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > n * EPS * s[0]))


def hautus_stabilizable(a, b, stab_tol: float = 1e-12) -> bool:
    """``rank [A - lambda I, B] = n`` for every eigenvalue with Re >= -stab_tol."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.asarray(b, dtype=float).reshape(a.shape[0], -1)
    n = a.shape[0]
    _require(n, 200, "hautus_stabilizable")
    for lam in np.linalg.eigvals(a):
        if lam.real >= -stab_tol:
            if _rank(np.hstack([a - lam * np.eye(n), b]), n) < n:
                return False
    return True


def hautus_detectable(c, a, stab_tol: float = 1e-12) -> bool:
    """Dual test: ``rank [A - lambda I; C] = n`` on the closed right half-plane."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    c = np.asarray(c, dtype=float).reshape(-1, a.shape[0])
    return hautus_stabilizable(a.T, c.T, stab_tol)


# -- mean-square stability -------------------------------------------------


def ms_operator(p: ScareProblem, f) -> np.ndarray:
    """Matrix of ``Z -> K^T Z + Z K + sum_i K_i^T Z K_i``, ``K = A + B F``,
    ``K_i = A0_i + B0_i F``."""
    f = np.atleast_2d(np.asarray(f, dtype=float))
    k = p.A + p.B @ f
    return generalized_lyapunov_matrix(k, [a0 + b0 @ f for a0, b0 in zip(p.A0, p.B0)])


class _SchurLyap:
    """Repeated solves of ``K^T Y + Y K = C`` from one real Schur form."""

    def __init__(self, k):
        self.t, self.u = sla.schur(k.T, output="real")

    def __call__(self, c):
        u, t = self.u, self.t
        y, scale, info = sla.lapack.dtrsyl(t, t, u.T @ c @ u, trana="N", tranb="T")
        if info < 0:
            raise SingularL("trsyl failed")
        return sym(u @ (y / scale) @ u.T)


def ms_spectral_bound(p: ScareProblem, f, max_iter: int = 500):
    """Bracket ``rho(L_K^{-1} Pi_K)`` for a Hurwitz ``K = A + B F``.

    ``Z -> -L_K^{-1}(sum K_i^T Z K_i)`` maps the PSD cone into itself, so for
    ``Y > 0`` the extreme eigenvalues of ``Y^{-1/2} T(Y) Y^{-1/2}`` bracket
    its spectral radius.  Power iteration from the identity tightens the
    bracket; returns ``(lower, upper)``.
    """
    f = np.atleast_2d(np.asarray(f, dtype=float))
    k = p.A + p.B @ f
    ks = [a0 + b0 @ f for a0, b0 in zip(p.A0, p.B0)]
    solve = _SchurLyap(k)
    y = np.eye(p.n)
    lower, upper = 0.0, np.inf
    for _ in range(max_iter):
        ty = -solve(sum(ki.T @ y @ ki for ki in ks))
        w, v = np.linalg.eigh(y)
        if w[0] <= 0:
            break
        ih = (v / np.sqrt(w)) @ v.T
        ratios = np.linalg.eigvalsh(sym(ih @ ty @ ih))
        lower, upper = max(lower, ratios[0]), min(upper, ratios[-1])
        if upper < 1.0 or lower >= 1.0 or upper - lower < 1e-10 * max(upper, 1e-300):
            break
        # a small identity component keeps the iterate in the interior
        y = ty / np.linalg.norm(ty) + 1e-12 * np.eye(p.n)
    return lower, upper


def mean_square_stable(p: ScareProblem, f, stab_tol: float = 1e-12) -> bool:
    """Exponential mean-square stability of the closed loop under gain F.

    For ``n^2 <= 4096`` the spectral abscissa of :func:`ms_operator` is
    computed directly.  Larger problems use the equivalent condition
    ``K`` Hurwitz and ``rho(L_K^{-1} Pi_K) < 1`` via
    :func:`ms_spectral_bound`.
    """
    f = np.atleast_2d(np.asarray(f, dtype=float))
    if p.n ** 2 <= MS_KRON_MAX:
        return spectral_abscissa(ms_operator(p, f)) < -stab_tol
    if spectral_abscissa(p.A + p.B @ f) >= -stab_tol:
        return False
    if p.r == 0:
        return True
    _, upper = ms_spectral_bound(p, f)
    return upper < 1.0


# -- rate certificate and start checks ------------------------------------


@dataclass(frozen=True)
class RateCertificate:
    """Spectral radius of ``L^{-1} Psi`` at the solution.

    ``rho`` is taken over eigenvectors with a non-negligible symmetric part;
    ``rho_full`` over the whole ``n^2`` space.
    """

    rho: float
    dimension: int
    rho_full: float


def _basis(n):
    """Stack of the ``n^2`` unit matrices in column-major vec order."""
    eye = np.eye(n * n)
    return np.stack([_unvec(eye[:, j], n) for j in range(n * n)])


def _pi_stack(p, zs):
    """``pi_full`` applied to a stack of matrices."""
    if p.r == 0:
        return np.zeros((len(zs), p.n + p.m, p.n + p.m))
    M = np.concatenate([p.A0, p.B0], axis=2)
    return np.einsum("iak,zab,ibl->zkl", M, zs, M)


def rate_operators(p: ScareProblem, x_hat):
    """``(L, Psi)`` as ``n^2 x n^2`` matrices at the solution ``x_hat``.

    ``L(Z) = (A_c - G_c X)^T Z + Z (A_c - G_c X)`` and ``Psi(Z)`` is the
    derivative of the frozen residual with respect to the frozen point.  On
    non-symmetric Z the lower-left block of ``Pi(Z)`` stands in for the
    transpose of the upper-right block, which keeps both maps linear and
    transpose-equivariant.
    """
    n, x = p.n, sym(np.asarray(x_hat, dtype=float))
    _require(n, KRON_MAX_N, "rate_operators")
    c = assemble_care(p, x)
    solve = _WeightSolve(c.r_c)
    lr = solve(c.l_c.T).T  # L R^{-1}
    br = solve(p.B.T).T  # B R^{-1}
    zs = _basis(n)
    pis = _pi_stack(p, zs)
    p11, p12, p21, p22 = pis[:, :n, :n], pis[:, :n, n:], pis[:, n:, :n], pis[:, n:, n:]
    first = (lr @ p22 @ br.T - p12 @ br.T) @ x
    second = x @ (br @ p22 @ lr.T - br @ p21)
    quad = x @ br @ p22 @ br.T @ x
    proj = p11 - lr @ p21 - p12 @ lr.T + lr @ p22 @ lr.T
    psi = first + second + quad + proj
    psi_mat = np.stack([_vec(z) for z in psi], axis=1)
    return lyapunov_matrix(c.a_c - c.g_c @ x), psi_mat


def _restricted_radius(op, n, sym_tol=1e-8):
    w, v = np.linalg.eig(op)
    full = float(np.max(np.abs(w))) if w.size else 0.0
    keep = []
    for j in range(v.shape[1]):
        V = _unvec(v[:, j], n)
        if np.linalg.norm(V + V.T) > sym_tol * np.linalg.norm(V):
            keep.append(abs(w[j]))
    restricted = float(max(keep)) if keep else 0.0
    return (restricted if abs(full - restricted) > 1e-8 else full), full


def rlinear_rate(p: ScareProblem, x_hat) -> RateCertificate:
    """Linear convergence certificate ``rho(L^{-1} Psi)`` of the frozen-CARE
    fixed point at a solution."""
    L, psi = rate_operators(p, x_hat)
    try:
        lu = sla.lu_factor(L)
    except (ValueError, sla.LinAlgError) as exc:
        raise SingularL(str(exc)) from exc
    if np.linalg.cond(L) > 1.0 / (100 * EPS):
        raise SingularL("Lyapunov operator at the solution is singular")
    rho, full = _restricted_radius(sla.lu_solve(lu, psi), p.n)
    return RateCertificate(rho=rho, dimension=p.n ** 2, rho_full=full)


def newton_start_radius(p: ScareProblem, x0) -> float:
    """``rho(L_{A_X}^{-1} Pi_X)`` with ``Pi_X(Z) = P^T Pi(Z) P`` at ``x0``."""
    n = p.n
    _require(n, KRON_MAX_N, "newton_start_radius")
    ops = newton_operators(p, sym(np.asarray(x0, dtype=float)))
    pis = _pi_stack(p, _basis(n))
    proj = np.einsum("ak,zab,bl->zkl", ops.p_k, pis, ops.p_k)
    P = np.stack([_vec(z) for z in proj], axis=1)
    L = lyapunov_matrix(ops.a_xk)
    if np.linalg.cond(L) > 1.0 / (100 * EPS):
        raise SingularL("Lyapunov operator of A_X is singular")
    rho, _ = _restricted_radius(np.linalg.solve(L, P), n)
    return rho


def check_newton_start(p: ScareProblem, x0, stab_tol: float = 1e-12) -> bool:
    """``A_{X0}`` Hurwitz and ``rho(L_{A_X0}^{-1} Pi_X0) < 1``."""
    ops = newton_operators(p, sym(np.asarray(x0, dtype=float)))
    if spectral_abscissa(ops.a_xk) >= -stab_tol:
        return False
    return newton_start_radius(p, x0) < 1.0


def check_decreasing_start(p: ScareProblem, x0, x_hat, psd_tol: float = PSD_TOL, stab_tol: float = 1e-12) -> bool:
    """``x0 >= x_hat``, frozen closed loop at x0 Hurwitz and ``R(x0) <= 0``."""
    x0 = sym(np.asarray(x0, dtype=float))
    x_hat = sym(np.asarray(x_hat, dtype=float))
    scale = 1.0 + np.linalg.norm(x0)
    if min_eig(x0 - x_hat) < -psd_tol * scale:
        return False
    c = assemble_care(p, x0)
    if spectral_abscissa(c.a_c - c.g_c @ x0) >= -stab_tol:
        return False
    res = residual(p, x0)
    return max_eig(res) <= psd_tol * (1.0 + np.linalg.norm(res) + scale)


def decreasing_start(p: ScareProblem, x_hat, psd_tol: float = PSD_TOL) -> np.ndarray:
    """A start matrix above ``x_hat`` with ``R(x0) <= 0`` and stable closed loop.

    Tries ``x_hat (1 + s) + t I`` on a small grid first.  Otherwise uses
    ``x_hat + t Z`` with Z solving the Newton equation at ``x_hat`` with
    right-hand side ``-I``; by concavity of R this gives ``R <= -t I`` for
    small t.
    """
    x_hat = sym(np.asarray(x_hat, dtype=float))
    eye = np.eye(p.n)
    for s in (0.5, 0.1, 1.0, 0.01, 2.0):
        for t in (0.1, 0.01, 1.0, 0.0):
            x0 = x_hat * (1 + s) + t * eye
            if check_decreasing_start(p, x0, x_hat, psd_tol):
                return x0
    ops = newton_operators(p, x_hat)
    mats = [p.A0[i] + p.B0[i] @ ops.p_k[p.n:] for i in range(p.r)]
    z = kron_generalized_lyap_solve(ops.a_xk, mats, eye)
    base = max(1.0, np.linalg.norm(x_hat)) / max(np.linalg.norm(z), EPS)
    for t in base * np.logspace(-1, -8, 15):
        x0 = x_hat + t * z
        if check_decreasing_start(p, x0, x_hat, psd_tol):
            return x0
    raise NoPsdRoot("no decreasing start matrix found")
