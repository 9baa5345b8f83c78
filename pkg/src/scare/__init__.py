"""Solvers for stochastic continuous-time algebraic Riccati equations.

    A^T X + X A + Q + Pi11(X)
        - (X B + L + Pi12(X)) (R + Pi22(X))^{-1} (X B + L + Pi12(X))^T = 0

Start with :class:`ScareProblem` and :func:`solve`; the benchmark problems
are available through :func:`make_benchmark`.
"""
from .benchmarks import BENCHMARKS, BenchmarkSpec, make_benchmark, preflight
from .campaign import RunRecord, export_counts, export_history, run_campaign
from .care_sda import CareSolution, solve_care
from .config import DEFAULT, SolverConfig
from .errors import (
    DegenerateDenominatorWarning,
    DimensionError,
    Diverged,
    InnerStalled,
    InvalidProblem,
    LossOfPsd,
    NoPsdRoot,
    NotConverged,
    NotHurwitz,
    OracleSizeError,
    RankDeficiencyWarning,
    ScareError,
    SingularInnerSystem,
    SingularL,
    SingularPivot,
    SingularShift,
    SingularWeight,
)
from .lyap_sda import cayley_dare_form, solve_lyapunov
from .moebius import MoebiusData, build_moebius, fp_scare, perm_hat, perm_shuffle
from .oracles import (
    RateCertificate,
    check_decreasing_start,
    check_newton_start,
    decreasing_start,
    hautus_detectable,
    hautus_stabilizable,
    kron_lyap_solve,
    mean_square_stable,
    newton_kleinman_care,
    rlinear_rate,
    scalar_scare_solve,
)
from .problem import (
    CareCoefficients,
    NewtonOperators,
    PiBlocks,
    ResidualReport,
    ScareProblem,
    assemble_care,
    feedback_gain,
    mnt_rhs,
    newton_operators,
    normalized_residual,
    omega,
    pi_of,
    residual,
)
from .solvers import (
    SOLVERS,
    HistoryEntry,
    SolveReport,
    fp_care_sda,
    fpc_mnt,
    fpc_nt,
    mnt_fp_lyap_sda,
    nt_fp_lyap_sda,
    solve,
)

__version__ = "0.1.0"
