"""Predicted versus observed linear rate of the frozen-CARE fixed point.

The spectral radius of the linearized fixed-point map at the solution
predicts how fast ``||X_k - X||_F`` shrinks.  This script prints the
prediction next to the observed per-step ratios on ex1 to ex4, and then
tracks the rate as the noise of ex3 is scaled.  The dependence is not
monotone: the input noise of ex3 is large and partly helps.

Run with ``python3 demos/rate_certificate.py``.
"""
import numpy as np

from scare import ScareError, SolverConfig, fp_care_sda, make_benchmark, rlinear_rate

CFG = SolverConfig(keep_iterates=True, max_outer=5000)


def observed_ratios(rep):
    errs = [np.linalg.norm(x - rep.x) for x in rep.iterates]
    floor = 1e-9 * np.linalg.norm(rep.x)
    return [b / a for a, b in zip(errs, errs[1:]) if b > floor]


def main():
    print("example  predicted  observed (last ratios)")
    for ex in ("ex1", "ex2", "ex3", "ex4"):
        p = make_benchmark(ex)
        rep = fp_care_sda(p, cfg=CFG)
        rho = rlinear_rate(p, rep.x).rho
        tail = " ".join(f"{r:.4f}" for r in observed_ratios(rep)[-4:])
        print(f"{ex:7s}  {rho:.4f}     {tail}")

    print("\nex3 with its noise scaled by s")
    print("   s    rho      iterations")
    base = make_benchmark("ex3")
    for s in (0.0, 0.5, 1.0, 1.2, 1.4):
        p = base.scaled_noise(s)
        try:
            rep = fp_care_sda(p, cfg=CFG)
        except ScareError as exc:
            print(f"{s:4.1f}   -        {type(exc).__name__}")
            continue
        print(f"{s:4.1f}   {rlinear_rate(p, rep.x).rho:.4f}   {rep.outer_iterations}")


if __name__ == "__main__":
    main()
