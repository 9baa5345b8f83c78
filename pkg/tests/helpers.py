"""Random problem generators shared by the tests."""
import numpy as np

from scare import ScareProblem


def random_spd(rng, n, floor=0.1):
    m = rng.standard_normal((n, n))
    return m @ m.T / n + floor * np.eye(n)


def random_psd(rng, n, rank=None):
    rank = n if rank is None else rank
    m = rng.standard_normal((n, rank))
    return m @ m.T / max(rank, 1)


def random_sym(rng, n):
    m = rng.standard_normal((n, n))
    return (m + m.T) / 2


def random_hurwitz(rng, n, margin=0.5):
    m = rng.standard_normal((n, n))
    shift = np.max(np.linalg.eigvals(m).real) + margin + rng.uniform(0, 1)
    return m - shift * np.eye(n)


def random_problem(rng, n, m, r, noise=0.2, cross=True):
    """A stabilizable SCARE with small noise and R, Q - L R^-1 L^T positive."""
    A = rng.standard_normal((n, n)) / np.sqrt(n)
    B = rng.standard_normal((n, m))
    R = random_spd(rng, m, floor=0.5)
    L = 0.1 * rng.standard_normal((n, m)) if cross else np.zeros((n, m))
    Q = random_psd(rng, n) + L @ np.linalg.solve(R, L.T) + 0.1 * np.eye(n)
    A0 = noise * rng.standard_normal((r, n, n)) / np.sqrt(n)
    B0 = noise * rng.standard_normal((r, n, m)) / np.sqrt(n)
    return ScareProblem(A, B, Q, R, L, A0, B0)


def scalar_problem(a, b, q, rho, l=0.0, alphas=(), betas=()):
    return ScareProblem(
        [[a]], [[b]], [[q]], [[rho]], [[l]],
        [[[x]] for x in alphas] or np.zeros((0, 1, 1)),
        [[[x]] for x in betas] or np.zeros((0, 1, 1)),
    )


def random_care(rng, n):
    """Stabilizable/detectable CARE data ``(a, g, h)`` plus a stabilizing start.

    The start is Bass's gain ``Z^{-1}`` with
    ``-(A + bI) Z - Z (A + bI)^T + 2 G = 0``, ``-(A + bI)`` Hurwitz.
    """
    import scipy.linalg as sla

    while True:
        m = int(rng.integers(1, n + 1))
        a = rng.standard_normal((n, n)) / np.sqrt(n)
        b = rng.standard_normal((n, m)) / np.sqrt(n)
        c = rng.standard_normal((int(rng.integers(1, n + 1)), n)) / np.sqrt(n)
        g = b @ b.T
        h = c.T @ c
        beta = max(0.0, -np.min(np.linalg.eigvals(a).real)) + 1.0
        shifted = a + beta * np.eye(n)
        z = sla.solve_continuous_lyapunov(-shifted, -2 * g)
        z = (z + z.T) / 2
        # redraw numerically uncontrollable samples
        if np.linalg.cond(z) > 1e6:
            continue
        x0 = np.linalg.inv(z)
        x0 = (x0 + x0.T) / 2
        if np.max(np.linalg.eigvals(a - g @ x0).real) < -1e-8:
            return a, g, h, x0


# (criterion, passed, detail) lines collected by the acceptance tests and
# printed in the terminal summary
ACCEPTANCE_LINES = []


def record_criterion(number, failures, detail=""):
    status = "PASS" if not failures else "FAIL"
    text = detail if not failures else "; ".join(failures[:5])
    line = f"criterion {number:2d}: {status}  {text}"
    ACCEPTANCE_LINES.append((number, line))
    print(line)
    return line
