"""The eight benchmark SCAREs.

``ex1`` to ``ex4`` are small deterministic problems.  ``ex5`` to ``ex8``
(vehicle chain, missile guidance, F16 flight control, quadrotor) take their
noise matrices from a seeded Gaussian sampler, rescaled so that
``||A0_i||_inf = s_A * i * ||A||_inf`` and ``||B0_i||_inf = s_B * i * ||B||_inf``.

The sampler draws Philox uniforms, maps them through Box-Muller and fills
the matrix column by column.  Each matrix has its own key
``(seed, example number, i, kind)`` with kind 0 for A0 and 1 for B0, so the
problems are bit-reproducible across platforms and numpy versions that keep
the Philox stream fixed.  The noise is not the one used to produce any
published table; compare counts only up to a band.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .oracles import hautus_stabilizable
from .problem import ScareProblem, is_psd, min_eig

DEFAULT_SEED = 0
BENCHMARKS = tuple(f"ex{i}" for i in range(1, 9))


@dataclass(frozen=True)
class BenchmarkSpec:
    """Benchmark id plus its parameter.

    ``param`` is epsilon for ``ex2`` (default 0.01) and ``ex4`` (default 5),
    the number of vehicles for ``ex5`` (default 100) and unused otherwise.
    """

    id: str
    param: float | int | None = None
    noise_seed: int = DEFAULT_SEED

    def __post_init__(self):
        if self.id not in BENCHMARKS:
            raise ValueError(f"unknown benchmark {self.id!r}")

    @property
    def number(self) -> int:
        return int(self.id[2:])

    @property
    def label(self) -> str:
        return self.id if self.param is None else f"{self.id}({self.param:g})"


def gaussian_matrix(shape, key) -> np.ndarray:
    """Standard normal matrix from Philox uniforms via Box-Muller, filled
    column-major."""
    rows, cols = shape
    count = rows * cols
    half = (count + 1) // 2
    gen = np.random.Generator(np.random.Philox(np.random.SeedSequence(list(key))))
    u = gen.random((half, 2))
    radius = np.sqrt(-2.0 * np.log1p(-u[:, 0]))
    angle = 2.0 * np.pi * u[:, 1]
    z = np.column_stack([radius * np.cos(angle), radius * np.sin(angle)]).ravel()[:count]
    return z.reshape((rows, cols), order="F")


def _noise(ref, count, scale, seed, number, kind):
    ref_norm = np.linalg.norm(ref, np.inf)
    out = []
    for i in range(1, count + 1):
        raw = gaussian_matrix(ref.shape, (seed, number, i, kind))
        out.append(scale * i * ref_norm / np.linalg.norm(raw, np.inf) * raw)
    return np.array(out)


def _noisy(number, A, B, Q, R, r, sa, sb, seed):
    A0 = _noise(A, r, sa, seed, number, 0)
    B0 = _noise(B, r, sb, seed, number, 1)
    return ScareProblem(A, B, Q, R, None, A0, B0)


def _ex1():
    A = np.diag([0.9512, 0.9048])
    B = np.array([[4.8770, 4.8770], [-1.1895, 3.5690]])
    Q = np.diag([0.005, 0.020])
    R = np.diag([1 / 3, 3.0])
    A0 = [[[-0.1, 0.1], [-0.2, 0.2]], [[1, -0.1], [0.5, 0]], [[0, -0.2], [0.2, 0.5]]]
    B0 = [[[0, -0.1], [0.1, 0]], [[0.5, 1], [-0.1, 0.2]], [[1, -1], [-0.2, 1]]]
    return ScareProblem(A, B, Q, R, None, A0, B0)


def _ex2(eps=0.01):
    A = eps * np.array([[7, 2, 0], [2, 6, -2], [0, -2, 5]]) / 3
    B = np.eye(3) / np.sqrt(eps)
    ie = 1 / eps
    Q = np.array([
        [4 * eps + 4 + ie, 2 * (2 * eps - 1 - ie), 2 * (2 - eps - ie)],
        [2 * (2 * eps - 1 - ie), 1 + 4 * eps + 4 * ie, 2 * (-1 - eps + 2 * ie)],
        [2 * (2 - eps - ie), 2 * (-1 - eps + 2 * ie), 4 + eps + 4 * ie],
    ]) / 9
    A0 = 0.1 * np.array([[[0.1, -0.1, 0.01], [-0.2, 0.1, -0.1], [0.05, -0.01, 0.3]]])
    B0 = 0.1 * np.array([[[0, 0, 0.2], [0.36, -0.6, 0], [0, -0.95, -0.032]]])
    return ScareProblem(A, B, Q, np.eye(3), None, A0, B0)


def _ex3():
    A = np.diag([0.9512, 0.9048])
    B = np.array([[4.8770, 4.8770], [-1.1895, 3.5690]])
    Q = np.array([[0.0028, -0.0013], [-0.0013, 0.0190]])
    R = np.diag([1 / 3, 3.0])
    A0 = 6.5 * np.array([[[0.1, 0.2], [0.2, 0.1]]])
    B0 = 6.5 * np.eye(2)[None]
    return ScareProblem(A, B, Q, R, None, A0, B0)


def _ex4(eps=5.0):
    A = np.array([[3 - eps, 1], [4, 2 - eps]])
    B = np.array([[1.0], [1.0]])
    Q = np.array([[4 * eps - 11, 2 * eps - 5], [2 * eps - 5, 2 * eps - 2]])
    A0 = [[[0.1, -0.1], [-0.2, 0.1]]]
    B0 = [[[0.1], [0.0]]]
    return ScareProblem(A, B, Q, np.eye(1), None, A0, B0)


def vehicle_chain(m: int):
    """``(A, B, Q)`` of the string-of-vehicles model with m vehicles."""
    n = 2 * m - 1
    C = np.array([[-1, 0], [1, 0]])
    D = np.array([[0, 0], [-1, 0]])
    A = np.zeros((n, n))
    for i in range(m - 1):
        A[2 * i:2 * i + 2, 2 * i:2 * i + 2] = C
        # the last block row sees only the first column of D
        A[2 * i:2 * i + 2, 2 * i + 2:2 * i + 4] = D[:, : min(2, n - 2 * i - 2)]
    A[n - 1, n - 1] = -1
    B = np.zeros((n, m))
    B[np.arange(0, n, 2), np.arange(m)] = 1
    Q = np.zeros((n, n))
    idx = np.arange(1, n, 2)
    Q[idx, idx] = 10
    return A, B, Q


def _ex5(m=100, seed=DEFAULT_SEED):
    A, B, Q = vehicle_chain(int(m))
    return _noisy(5, A, B, Q, np.eye(int(m)), 5, 0.1, 0.15, seed)


def _ex6(seed=DEFAULT_SEED):
    A = np.array([
        [0, 1, 0, 0, 0],
        [0, 0.0696, 0, -0.0307, -1.91e-4],
        [0, 0, 0, 1, 0],
        [0, 0.123, 0, 0.0696, 6.13e-4],
        [0, 0, 0, 0, -0.1],
    ])
    B = np.array([[0, 0], [-9.13e-5, 0], [0, 0], [2.42e-5, -1.30e-4], [0, 0]])
    Q = np.diag([1000.0, 1000, 1000, 1000, 0])
    return _noisy(6, A, B, Q, np.eye(2), 4, 0.2, 0.1, seed)


def _ex7(seed=DEFAULT_SEED):
    A = np.array([
        [3.958e-5, 0, 0, 0, -5.866, -6.985],
        [2.116e-4, 0, 0, 5.866, 0, -84.66],
        [-0.1158, 0, 0, 6.985, 84.66, 0],
        [0, 0, 0, 1.791e-4, 4.303e-3, -5.006e-3],
        [0, 0, 0, -5.329e-3, 0, -4.259e-2],
        [0, 0, 0, -4.769e-3, 3.253e-2, -1.791e-4],
    ])
    B = np.array([
        [1.076e-4, 0, 0, 0],
        [0, 0, 0, 0],
        [0, 0, 0, 0],
        [0, 7.780e-5, 0, 7.780e-5],
        [3.964e-6, 0, 1.321e-5, 0],
        [0, 1.211e-6, 0, 1.171e-5],
    ])
    return _noisy(7, A, B, 5000 * np.eye(6), 2e-4 * np.eye(4), 3, 0.012, 0.012, seed)


def _ex8(seed=DEFAULT_SEED):
    A = np.array([
        [0, -8.208e-4, -1.047e-2, 0, -1.234e-4, 1.178, 0, -9.8000, 0],
        [8.208e-4, 0, -1.603e-3, 1.234e-4, 0, 2.203e-2, 9.800, -5.436e-4, 0],
        [1.047e-2, 1.603e-3, 0, -1.178, -2.203e-2, 0, 0, 0, 9.820e-1],
        [0, 0, 0, 0, 7.738e-4, -9.871e-3, 0, 0, 0],
        [0, 0, 0, -7.738e-4, 0, -1.511e-3, 0, 0, 0],
        [0, 0, 0, 0, 0, 0, 0, 0, 0],
        [0, 0, 0, 1.000, 1.386e-8, 2.499e-4, 2.617e-6, -5.464e-4, 0],
        [0, 0, 0, 0, 1.000, 0, -9.650e-3, 0, 0],
        [0, 0, 0, 0, 0, 0, 0, 0, -0.100],
    ])
    Ix = Iy = 0.01466
    Iz = 0.02848
    B = np.zeros((9, 4))
    B[2, 0] = -1.0  # -1/m with m = 1
    B[3, 1] = 1 / Ix
    B[4, 2] = 1 / Iy
    B[5, 3] = 1 / Iz
    Q = np.diag([2000.0, 2000, 3000, 10, 10, 100, 0, 0, 0])
    return _noisy(8, A, B, Q, np.eye(4), 3, 0.025, 0.01, seed)


def make_benchmark(spec: BenchmarkSpec | str, param=None, seed: int | None = None) -> ScareProblem:
    """Build a benchmark problem from a :class:`BenchmarkSpec` or an id such as ``"ex5"``."""
    if isinstance(spec, str):
        spec = BenchmarkSpec(spec, param, DEFAULT_SEED if seed is None else seed)
    k, p, s = spec.number, spec.param, spec.noise_seed
    if k == 1:
        return _ex1()
    if k == 2:
        return _ex2() if p is None else _ex2(float(p))
    if k == 3:
        return _ex3()
    if k == 4:
        return _ex4() if p is None else _ex4(float(p))
    if k == 5:
        return _ex5(100 if p is None else int(p), s)
    return {6: _ex6, 7: _ex7, 8: _ex8}[k](s)


def preflight(p: ScareProblem, psd_tol: float = 1e-10) -> dict:
    """Structural checks every benchmark is expected to pass."""
    S = p.Q - p.L @ np.linalg.solve(p.R, p.L.T)
    return {
        "r_positive_definite": bool(min_eig(p.R) > 0),
        "q_minus_lrl_psd": bool(is_psd(S, psd_tol)),
        "stabilizable": bool(hautus_stabilizable(p.A, p.B)),
    }
