"""SCARE coefficient data and the formulas every solver shares.

The stochastic continuous-time algebraic Riccati equation handled here is

    A^T X + X A + Q + Pi11(X)
        - (X B + L + Pi12(X)) (R + Pi22(X))^{-1} (X B + L + Pi12(X))^T = 0

with ``Pi(X) = sum_i [A0_i B0_i]^T X [A0_i B0_i]``.  Freezing ``X`` inside the
noise terms turns it into a deterministic CARE with coefficients
``(A_c, G_c, H_c)``; see :func:`assemble_care`.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import scipy.linalg as sla

from .errors import (
    DegenerateDenominatorWarning,
    DimensionError,
    InvalidProblem,
    SingularWeight,
)

EPS = np.finfo(float).eps
PSD_TOL = 1e-10
SYM_TOL = 1e-10
# condition estimate above which R_c is treated as singular
SINGULAR_COND = 1.0 / (100 * EPS)
# iterates beyond this magnitude are treated as diverging
DIVERGENCE_NORM = 1e150


def sym(m):
    """Return the symmetric part ``(M + M^T) / 2``."""
    return 0.5 * (m + m.T)


def min_eig(m):
    return float(np.linalg.eigvalsh(sym(m))[0]) if m.size else 0.0


def max_eig(m):
    return float(np.linalg.eigvalsh(sym(m))[-1]) if m.size else 0.0


def is_psd(m, tol=PSD_TOL):
    """Loewner test ``M >= 0`` with slack ``tol * (1 + ||M||_F)``."""
    return min_eig(m) >= -tol * (1.0 + np.linalg.norm(m))


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ScareProblem:
    """Coefficient bundle ``(A, B, Q, R, L, {A0_i}, {B0_i})`` of one SCARE.

    ``A0`` and ``B0`` are stored as stacked arrays of shape ``(r, n, n)`` and
    ``(r, n, m)``.  ``r = 0`` is allowed and gives a deterministic CARE.
    """

    A: np.ndarray
    B: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    L: np.ndarray | None = None
    A0: np.ndarray | list | None = None
    B0: np.ndarray | list | None = None
    validate: bool = field(default=True, repr=False)

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        B = np.asarray(self.B, dtype=float)
        if B.ndim == 1:
            B = B.reshape(-1, 1)
        B = np.atleast_2d(B)
        n, m = B.shape
        Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        R = np.atleast_2d(np.asarray(self.R, dtype=float))
        if self.L is None:
            L = np.zeros((n, m))
        else:
            L = np.asarray(self.L, dtype=float)
            if L.size == n * m:
                L = L.reshape(n, m)
        A0 = np.zeros((0, n, n)) if self.A0 is None or len(self.A0) == 0 else np.asarray(self.A0, dtype=float).reshape(-1, n, n)
        if self.B0 is None or len(self.B0) == 0:
            B0 = np.zeros((len(A0), n, m))
        else:
            B0 = np.asarray(self.B0, dtype=float).reshape(-1, n, m)

        shapes = {"A": (A, (n, n)), "Q": (Q, (n, n)), "R": (R, (m, m)), "L": (L, (n, m))}
        for name, (arr, shape) in shapes.items():
            if arr.shape != shape:
                raise DimensionError(f"{name} has shape {arr.shape}, expected {shape}")
        if len(A0) != len(B0):
            raise DimensionError(f"{len(A0)} noise matrices A0 but {len(B0)} matrices B0")

        for name, arr in (("A", A), ("B", B), ("Q", Q), ("R", R), ("L", L), ("A0", A0), ("B0", B0)):
            object.__setattr__(self, name, _frozen(arr))

        if self.validate:
            self.check()

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def r(self) -> int:
        return self.A0.shape[0]

    def check(self, psd_tol=PSD_TOL):
        """Raise :class:`InvalidProblem` unless Q, R symmetric, R > 0 and
        ``Q - L R^{-1} L^T >= 0``."""
        for name, M in (("Q", self.Q), ("R", self.R)):
            if np.linalg.norm(M - M.T) > SYM_TOL * (1 + np.linalg.norm(M)):
                raise InvalidProblem(f"{name} is not symmetric")
        if np.linalg.eigvalsh(sym(self.R))[0] <= 0:
            raise InvalidProblem("R is not positive definite")
        S = self.Q - self.L @ np.linalg.solve(self.R, self.L.T)
        if not is_psd(S, psd_tol):
            raise InvalidProblem(f"Q - L R^-1 L^T is indefinite (min eig {min_eig(S):.3e})")

    def without_noise(self) -> "ScareProblem":
        return ScareProblem(self.A, self.B, self.Q, self.R, self.L, validate=False)

    def scaled_noise(self, s: float) -> "ScareProblem":
        return ScareProblem(self.A, self.B, self.Q, self.R, self.L, s * self.A0, s * self.B0, validate=False)

    # -- JSON problem files ------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "n": self.n, "m": self.m, "r": self.r,
            "A": self.A.tolist(), "B": self.B.tolist(), "Q": self.Q.tolist(),
            "R": self.R.tolist(), "L": self.L.tolist(),
            "A0": [a.tolist() for a in self.A0], "B0": [b.tolist() for b in self.B0],
        }

    @classmethod
    def from_dict(cls, d: dict, validate: bool = True) -> "ScareProblem":
        """Build a problem from the JSON document layout.

        Integer fields ``n, m, r`` are checked against the matrices; a missing
        ``L`` means the zero matrix.
        """
        try:
            n, m, r = int(d["n"]), int(d["m"]), int(d["r"])
            A = np.array(d["A"], dtype=float).reshape(n, n)
            B = np.array(d["B"], dtype=float).reshape(n, m)
            Q = np.array(d["Q"], dtype=float).reshape(n, n)
            R = np.array(d["R"], dtype=float).reshape(m, m)
            L = np.array(d["L"], dtype=float).reshape(n, m) if d.get("L") is not None else None
            A0 = d.get("A0") or []
            B0 = d.get("B0") or []
        except (KeyError, TypeError, ValueError) as exc:
            raise DimensionError(f"malformed problem document: {exc}") from exc
        if len(A0) != r or len(B0) != r:
            raise DimensionError(f"r={r} but {len(A0)} A0 and {len(B0)} B0 matrices given")
        A0 = np.array(A0, dtype=float).reshape(r, n, n)
        B0 = np.array(B0, dtype=float).reshape(r, n, m)
        return cls(A, B, Q, R, L, A0, B0, validate=validate)

    def dump(self, fp):
        json.dump(self.to_dict(), fp)

    @classmethod
    def load(cls, fp, validate: bool = True) -> "ScareProblem":
        return cls.from_dict(json.load(fp), validate=validate)


class PiBlocks(NamedTuple):
    pi11: np.ndarray
    pi12: np.ndarray
    pi22: np.ndarray

    def stacked(self) -> np.ndarray:
        return np.block([[self.pi11, self.pi12], [self.pi12.T, self.pi22]])


@dataclass(frozen=True)
class CareCoefficients:
    """Frozen CARE data at a given X together with the weights it came from."""

    a_c: np.ndarray
    g_c: np.ndarray
    h_c: np.ndarray
    q_c: np.ndarray
    l_c: np.ndarray
    r_c: np.ndarray


@dataclass(frozen=True)
class NewtonOperators:
    a_xk: np.ndarray
    s_xk: np.ndarray
    p_k: np.ndarray
    m_xk: np.ndarray
    r_k: np.ndarray

    def project(self, blocks: PiBlocks) -> np.ndarray:
        """``P_k^T Pi P_k`` for a set of Pi blocks, i.e. ``Pi_{X_k}(Y)``."""
        n = self.a_xk.shape[0]
        K = self.p_k[n:]
        out = blocks.pi11 + blocks.pi12 @ K + K.T @ blocks.pi12.T + K.T @ blocks.pi22 @ K
        return sym(out)


@dataclass(frozen=True)
class ResidualReport:
    residual_matrix: np.ndarray
    nres: float
    components: dict
    degenerate: bool = False


def _check_square(p: ScareProblem, x):
    x = np.asarray(x, dtype=float)
    if x.shape != (p.n, p.n):
        raise DimensionError(f"X has shape {x.shape}, expected {(p.n, p.n)}")
    return x


def pi_of(p: ScareProblem, x) -> PiBlocks:
    """Evaluate the three blocks of ``Pi(X)``."""
    x = _check_square(p, x)
    if p.r == 0:
        return PiBlocks(np.zeros((p.n, p.n)), np.zeros((p.n, p.m)), np.zeros((p.m, p.m)))
    XA = np.matmul(x, p.A0)
    XB = np.matmul(x, p.B0)
    At = p.A0.transpose(0, 2, 1)
    Bt = p.B0.transpose(0, 2, 1)
    pi11 = np.matmul(At, XA).sum(axis=0)
    pi12 = np.matmul(At, XB).sum(axis=0)
    pi22 = np.matmul(Bt, XB).sum(axis=0)
    return PiBlocks(sym(pi11), pi12, sym(pi22))


def pi_full(p: ScareProblem, z) -> np.ndarray:
    """``Pi`` extended linearly to non-symmetric Z: ``M^T (I_r (x) Z) M``.

    Returns the full ``(n+m) x (n+m)`` matrix without symmetrization, so that
    ``pi_full(Z^T) == pi_full(Z)^T``.  Used by the vectorized oracles.
    """
    if p.r == 0:
        return np.zeros((p.n + p.m, p.n + p.m))
    M = np.concatenate([p.A0, p.B0], axis=2)
    return np.matmul(M.transpose(0, 2, 1), np.matmul(z, M)).sum(axis=0)


class _WeightSolve:
    """Linear solves with a symmetric weight ``R_c`` (never inverted)."""

    def __init__(self, rc):
        w = np.linalg.eigvalsh(rc)
        big = np.max(np.abs(w))
        small = np.min(np.abs(w))
        if small == 0 or big / small > SINGULAR_COND:
            raise SingularWeight(f"R + Pi22(X) is numerically singular (eigenvalues in [{w[0]:.3e}, {w[-1]:.3e}])")
        if w[0] > 0:
            self._cho = sla.cho_factor(rc)
            self._rc = None
        else:
            self._cho = None
            self._rc = rc

    def __call__(self, rhs):
        if self._cho is not None:
            return sla.cho_solve(self._cho, rhs)
        return sla.solve(self._rc, rhs, assume_a="sym")


def assemble_care(p: ScareProblem, x) -> CareCoefficients:
    """Frozen CARE coefficients at X.

    ``L_c = L + Pi12``, ``R_c = R + Pi22``, ``Q_c = Q + Pi11``,
    ``A_c = A - B R_c^{-1} L_c^T``, ``G_c = B R_c^{-1} B^T`` and
    ``H_c = Q_c - L_c R_c^{-1} L_c^T``.
    """
    blocks = pi_of(p, x)
    l_c = p.L + blocks.pi12
    r_c = sym(p.R + blocks.pi22)
    q_c = sym(p.Q + blocks.pi11)
    solve = _WeightSolve(r_c)
    rinv_bt = solve(p.B.T)
    rinv_lt = solve(l_c.T)
    a_c = p.A - p.B @ rinv_lt
    g_c = sym(p.B @ rinv_bt)
    h_c = sym(q_c - l_c @ rinv_lt)
    return CareCoefficients(a_c, g_c, h_c, q_c, l_c, r_c)


def care_residual(a, g, h, x):
    """``A^T X + X A - X G X + H`` for plain CARE data."""
    return sym(a.T @ x + x @ a - x @ g @ x + h)


def residual(p: ScareProblem, x) -> np.ndarray:
    """SCARE residual ``R(X) = A_c^T X + X A_c - X G_c X + H_c``."""
    x = sym(_check_square(p, x))
    c = assemble_care(p, x)
    return care_residual(c.a_c, c.g_c, c.h_c, x)


def fro_norm(m) -> float:
    """Frobenius norm that does not overflow for entries above 1e154."""
    m = np.asarray(m)
    if m.size == 0:
        return 0.0
    s = float(np.max(np.abs(m)))
    if s == 0.0 or not np.isfinite(s):
        return s
    return s * float(np.linalg.norm(m / s))


def normalized_residual(p: ScareProblem, x) -> ResidualReport:
    """Normalized residual used as the stopping and reporting metric.

    ``NRes = ||R(X)||_F / (2||A X||_F + ||Q||_F + ||Pi11(X)||_F + ||B(X)||_F)``
    with ``B(X) = S R_c^{-1} S^T`` and ``S = X B + L + Pi12(X)``.
    An all-zero denominator emits :class:`DegenerateDenominatorWarning` and
    returns ``||R(X)||_F`` unscaled; an overflowing residual gives NaN.
    """
    x = sym(_check_square(p, x))
    blocks = pi_of(p, x)
    s = x @ p.B + p.L + blocks.pi12
    solve = _WeightSolve(sym(p.R + blocks.pi22))
    bterm = sym(s @ solve(s.T))
    res = sym(p.A.T @ x + x @ p.A + p.Q + blocks.pi11 - bterm)
    comps = {
        "ax": fro_norm(p.A @ x),
        "q": fro_norm(p.Q),
        "pi11": fro_norm(blocks.pi11),
        "bterm": fro_norm(bterm),
    }
    denom = 2 * comps["ax"] + comps["q"] + comps["pi11"] + comps["bterm"]
    rnorm = fro_norm(res)
    if not (np.isfinite(rnorm) and np.isfinite(denom)):
        return ResidualReport(res, float("nan"), comps)
    if denom == 0.0:
        warnings.warn("normalized residual denominator is zero", DegenerateDenominatorWarning, stacklevel=2)
        return ResidualReport(res, rnorm, comps, degenerate=True)
    return ResidualReport(res, rnorm / denom, comps)


def omega(p: ScareProblem, x) -> np.ndarray:
    """Schur-complement matrix ``[[-G_c, -A_c], [-A_c^T, H_c]]`` of order 2n."""
    c = assemble_care(p, x)
    return sym(np.block([[-c.g_c, -c.a_c], [-c.a_c.T, c.h_c]]))


def newton_operators(p: ScareProblem, xk) -> NewtonOperators:
    """Coefficients of the Newton step linearized at ``X_k``."""
    xk = _check_square(p, xk)
    blocks = pi_of(p, xk)
    s = xk @ p.B + p.L + blocks.pi12
    r_k = sym(p.R + blocks.pi22)
    solve = _WeightSolve(r_k)
    K = -solve(s.T)
    a_xk = p.A + p.B @ K
    p_k = np.vstack([np.eye(p.n), K])
    W = np.block([[p.Q, p.L], [p.L.T, p.R]])
    m_xk = sym(p_k.T @ W @ p_k)
    return NewtonOperators(a_xk, s, p_k, m_xk, r_k)


def mnt_rhs(p: ScareProblem, xk, ops: NewtonOperators | None = None) -> np.ndarray:
    """Constant term ``Pi_{X_k}(X_k) + M_{X_k}`` of the modified Newton step."""
    if ops is None:
        ops = newton_operators(p, xk)
    return sym(ops.project(pi_of(p, xk)) + ops.m_xk)


def feedback_gain(p: ScareProblem, x) -> np.ndarray:
    """Optimal gain ``F = -(R + Pi22)^{-1} (B^T X + Pi12^T + L^T)``."""
    x = _check_square(p, x)
    blocks = pi_of(p, x)
    solve = _WeightSolve(sym(p.R + blocks.pi22))
    return -solve(p.B.T @ x + blocks.pi12.T + p.L.T)
