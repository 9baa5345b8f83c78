"""Monotone convergence of the frozen-CARE fixed point on ex1.

From X0 = 0 the iterates increase in the Loewner order and every residual
stays PSD.  From a start above the solution with a negative semidefinite
residual the same iteration, and modified Newton, decrease instead.  Both
branches meet at the same matrix.

Run with ``python3 demos/monotone_convergence.py``.
"""
import numpy as np

from scare import (
    SolverConfig,
    decreasing_start,
    fp_care_sda,
    make_benchmark,
    mnt_fp_lyap_sda,
    residual,
)
from scare.problem import max_eig, min_eig


def describe(p, rep, label):
    print(f"\n{label}: {rep.outer_iterations} iterations, final NRes {rep.nres:.2e}")
    print("  k   NRes(X_k+1) lam_min(X_k+1 - X_k)  lam_max(X_k+1 - X_k)  lam_min(R)   lam_max(R)")
    xs = rep.iterates
    for k, (a, b) in enumerate(zip(xs, xs[1:])):
        r = residual(p, a)
        print(
            f"{k:3d}   {rep.history[k].nres:.3e}   {min_eig(b - a):+.3e}            "
            f"{max_eig(b - a):+.3e}            {min_eig(r):+.2e}   {max_eig(r):+.2e}"
        )


def main():
    p = make_benchmark("ex1")
    cfg = SolverConfig(keep_iterates=True)

    up = fp_care_sda(p, cfg=cfg)
    describe(p, up, "fpc from X0 = 0 (nondecreasing)")

    x0 = decreasing_start(p, up.x)
    down = fp_care_sda(p, x0, cfg)
    describe(p, down, "fpc from a start above the solution (nonincreasing)")

    mnt = mnt_fp_lyap_sda(p, x0, cfg)
    describe(p, mnt, "modified Newton from the same start")

    print("\nsolution:\n", np.array2string(up.x, precision=10))
    for label, rep in (("decreasing fpc", down), ("modified Newton", mnt)):
        gap = np.linalg.norm(rep.x - up.x) / np.linalg.norm(up.x)
        print(f"relative gap to the increasing limit, {label}: {gap:.1e}")


if __name__ == "__main__":
    main()
