import numpy as np
import pytest
from hypothesis import given, strategies as st

from helpers import random_problem, scalar_problem
from scare import (
    NotConverged,
    RankDeficiencyWarning,
    ScareError,
    SingularShift,
    SolverConfig,
    build_moebius,
    fp_care_sda,
    fp_scare,
    make_benchmark,
    perm_hat,
    perm_shuffle,
)
from scare.errors import SingularInnerSystem
from scare.moebius import full_rank_factor, moebius_step
from scare.problem import min_eig

seeds = st.integers(0, 2**32 - 1)


def test_shuffle_degenerate():
    np.testing.assert_array_equal(perm_shuffle(1, 1), np.eye(1))
    np.testing.assert_array_equal(perm_shuffle(3, 1), np.eye(3))


def test_shuffle_order_four():
    P = perm_shuffle(2, 2)
    np.testing.assert_array_equal(P, np.eye(4)[:, [0, 2, 1, 3]])
    rng = np.random.default_rng(0)
    for _ in range(20):
        X = rng.standard_normal((2, 2))
        np.testing.assert_array_equal(P.T @ np.kron(X, np.eye(2)) @ P, np.kron(np.eye(2), X))


@given(seeds, st.integers(1, 4), st.integers(1, 4))
def test_permutation_identities(seed, n, r):
    X = np.random.default_rng(seed).standard_normal((n, n))
    P = perm_shuffle(n, r)
    Ph = perm_hat(n, r)
    for M in (P, Ph):
        np.testing.assert_array_equal(M.T @ M, np.eye(len(M)))
    np.testing.assert_array_equal(P.T @ np.kron(X, np.eye(r)) @ P, np.kron(np.eye(r), X))
    block = np.zeros((n * (r + 1), n * (r + 1)))
    block[:n, :n] = X
    block[n:, n:] = np.kron(X, np.eye(r))
    np.testing.assert_array_equal(Ph.T @ np.kron(X, np.eye(r + 1)) @ Ph, block)


def test_full_rank_factor():
    rng = np.random.default_rng(1)
    m = rng.standard_normal((5, 3))
    S = m @ m.T
    C = full_rank_factor(S)
    assert C.shape == (3, 5)
    np.testing.assert_allclose(C.T @ C, S, atol=1e-12 * np.linalg.norm(S))


def test_build_ex1_blocks():
    p = make_benchmark("ex1")
    d = build_moebius(p, 1.0)
    assert d.e_gamma.shape == (8, 2) and d.g_gamma.shape == (8, 8)
    assert min_eig(d.h_gamma) >= -1e-10 and min_eig(d.g_gamma) >= -1e-10
    np.testing.assert_allclose(d.c_hat.T @ d.c_hat, p.Q, atol=1e-12 * np.linalg.norm(p.Q))
    assert not d.rank_deficient


def test_rank_deficiency_warns():
    p = make_benchmark("ex6")
    with pytest.warns(RankDeficiencyWarning):
        d = build_moebius(p, 1.0)
    assert d.rank_deficient and d.c_hat.shape[0] == 4


def test_singular_shift():
    # A^ = A - B R^-1 L^T = 1 for this scalar problem
    p = scalar_problem(1.0, 1.0, 1.0, 1.0)
    with pytest.raises(SingularShift):
        build_moebius(p, 1.0)


def test_singular_shift_retried():
    p = scalar_problem(1.0, 1.0, 1.0, 1.0)
    rep = fp_scare(p, gamma=1.0)
    assert rep.converged and rep.diagnostics["gamma"] == 2.0


def test_first_iterate_is_h_gamma():
    p = make_benchmark("ex1")
    rep = fp_scare(p, cfg=SolverConfig(keep_iterates=True))
    d = build_moebius(p, rep.diagnostics["gamma"])
    np.testing.assert_array_equal(rep.iterates[1], d.h_gamma)
    assert rep.phase_iterations("gl") == rep.counts["gl"]["sweeps"] == rep.outer_iterations


@pytest.mark.parametrize("ex", ["ex1", "ex3", "ex4"])
def test_limit_matches_fpc(ex):
    p = make_benchmark(ex)
    a = fp_scare(p)
    b = fp_care_sda(p)
    assert a.converged
    assert np.linalg.norm(a.x - b.x) <= 1e-8 * np.linalg.norm(b.x)
    assert a.outer_iterations > b.outer_iterations


def test_gamma_invariance():
    p = make_benchmark("ex4")
    a = fp_scare(p, gamma=2.0)
    b = fp_scare(p, gamma=7.0)
    assert np.linalg.norm(a.x - b.x) <= 1e-8 * np.linalg.norm(b.x)


@pytest.mark.parametrize("ex", ["ex1", "ex4"])
def test_iterates_nondecreasing(ex):
    rep = fp_scare(make_benchmark(ex), cfg=SolverConfig(keep_iterates=True))
    xs = rep.iterates[1:]
    for a, b in zip(xs, xs[1:]):
        assert min_eig(b - a) >= -1e-10 * (1 + np.linalg.norm(a))
    assert rep.monotone_direction == "nondecreasing"


@given(seeds)
def test_random_problems_agree_with_fpc(seed):
    rng = np.random.default_rng(seed)
    p = random_problem(rng, 3, 2, 2, noise=0.1)
    try:
        ref = fp_care_sda(p)
    except ScareError:
        return
    try:
        rep = fp_scare(p, cfg=SolverConfig(max_outer=5000))
    except NotConverged as exc:
        # a roundoff stall just above the tolerance, never a wrong limit
        rep = exc.report
        assert "stalled" in str(exc) and rep.nres <= 1e-10
    assert np.linalg.norm(rep.x - ref.x) <= 1e-8 * np.linalg.norm(ref.x)


def test_stall_at_roundoff_is_reported():
    p = random_problem(np.random.default_rng(42218), 3, 2, 2, noise=0.1)
    ref = fp_care_sda(p)
    with pytest.raises(NotConverged, match="stalled") as info:
        fp_scare(p, cfg=SolverConfig(max_outer=5000))
    rep = info.value.report
    assert len(rep.history) < 100 and 1e-12 < rep.nres < 1e-11
    assert np.linalg.norm(rep.x - ref.x) <= 1e-10 * np.linalg.norm(ref.x)
    # a looser tolerance is met
    assert fp_scare(p, cfg=SolverConfig(outer_tol=1e-11)).converged


def test_not_converged_report():
    with pytest.raises(NotConverged) as info:
        fp_scare(make_benchmark("ex2"), cfg=SolverConfig(max_outer=5))
    assert info.value.phase == "gl" and len(info.value.report.history) == 5


def test_singular_inner_system():
    d = build_moebius(make_benchmark("ex1"), 1.0)
    n, k = 2, d.e_gamma.shape[0] // 2
    v = np.array([1.0, 0.0])
    w = np.kron(v[:, None], np.eye(k))
    lam = np.linalg.eigvalsh(w.T @ d.g_gamma @ w)[-1]
    # I + G (X kron I) has eigenvalue 1 - lam / lam = 0 for this X
    with pytest.raises(SingularInnerSystem):
        moebius_step(d, -np.outer(v, v) / lam)
