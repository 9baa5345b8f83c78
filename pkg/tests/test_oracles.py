import numpy as np
import pytest
from hypothesis import given, strategies as st

from helpers import random_hurwitz, random_problem, scalar_problem
from scare import (
    SolverConfig,
    check_decreasing_start,
    check_newton_start,
    fp_care_sda,
    hautus_detectable,
    hautus_stabilizable,
    kron_lyap_solve,
    make_benchmark,
    mean_square_stable,
    newton_kleinman_care,
    rlinear_rate,
    scalar_scare_solve,
)
from scare.errors import NoPsdRoot, NotHurwitz, OracleSizeError
from scare.oracles import (
    kron_generalized_lyap_solve,
    ms_operator,
    ms_spectral_bound,
    scalar_residual,
)
from scare.problem import newton_operators, residual

seeds = st.integers(0, 2**32 - 1)


def test_kron_lyap_scalar():
    assert kron_lyap_solve([[-1.0]], [[2.0]])[0, 0] == pytest.approx(1.0, abs=1e-15)


def test_kron_lyap_nonsymmetric_e():
    e = np.array([[-1.0, 2.0], [0.0, -3.0]])
    c = np.eye(2)
    y = kron_lyap_solve(e, c)
    np.testing.assert_allclose(e.T @ y + y @ e + c, 0, atol=1e-14)


def test_generalized_lyap_scalar():
    # -2 z + 0.25 z + 1 = 0
    z = kron_generalized_lyap_solve(np.array([[-1.0]]), [np.array([[0.5]])], [[1.0]])
    assert z[0, 0] == pytest.approx(1 / 1.75, abs=1e-15)


def test_newton_kleinman_scalar():
    assert newton_kleinman_care([[0.0]], [[1.0]], [[1.0]], [[2.0]])[0, 0] == pytest.approx(1.0, abs=1e-14)


def test_newton_kleinman_needs_stabilizing_start():
    with pytest.raises(NotHurwitz):
        newton_kleinman_care([[1.0]], [[1.0]], [[1.0]], [[0.0]])


def test_size_caps():
    with pytest.raises(OracleSizeError):
        kron_lyap_solve(-np.eye(65), np.eye(65))
    with pytest.raises(OracleSizeError):
        newton_kleinman_care(-np.eye(33), np.eye(33), np.eye(33), np.eye(33))


def test_scalar_scare_noiseless():
    # 2x + 1 - x^2 = 0 has root 1 + sqrt(2)
    p = scalar_problem(1.0, 1.0, 1.0, 1.0)
    assert scalar_scare_solve(p) == pytest.approx(1 + np.sqrt(2), rel=1e-15)


def test_scalar_scare_residual_formula():
    p = scalar_problem(0.3, 1.2, 2.0, 0.7, 0.4, [0.5, 0.2], [0.3, -0.1])
    for x in (0.0, 0.5, 3.0):
        assert scalar_residual(p, x) == pytest.approx(residual(p, [[x]])[0, 0], rel=1e-13)
    x = scalar_scare_solve(p)
    assert abs(scalar_residual(p, x)) <= 1e-12 * (1 + x)


def test_scalar_scare_no_root():
    # the residual stays positive: Q only grows with x
    p = scalar_problem(1.0, 0.0, 1.0, 1.0)
    with pytest.raises(NoPsdRoot):
        scalar_scare_solve(p, cap=1e6)


def test_hautus():
    a = np.diag([1.0, -1.0])
    assert hautus_stabilizable(a, [[1.0], [0.0]])
    assert not hautus_stabilizable(a, [[0.0], [1.0]])
    assert hautus_detectable([[1.0, 0.0]], a)
    assert not hautus_detectable([[0.0, 1.0]], a)


def test_hautus_benchmarks():
    for ex in ("ex1", "ex5", "ex8"):
        p = make_benchmark(ex)
        assert hautus_stabilizable(p.A, p.B)


@pytest.mark.parametrize("alpha, stable", [(0.5, True), (1.0, True), (2 ** 0.5, False), (1.5, False)])
def test_mean_square_scalar(alpha, stable):
    # generator 2k + alpha^2 with k = -1 vanishes at alpha = sqrt(2)
    p = scalar_problem(-1.0, 1.0, 1.0, 1.0, 0.0, [alpha], [0.0])
    assert mean_square_stable(p, [[0.0]]) is stable


@given(seeds)
def test_power_bracket_contains_radius(seed):
    rng = np.random.default_rng(seed)
    p = random_problem(rng, 3, 2, 2, noise=0.6)
    f = np.zeros((2, 3))
    k = random_hurwitz(rng, 3)
    p = type(p)(k, p.B, p.Q, p.R, p.L, p.A0, p.B0)
    ks = list(p.A0)
    eye = np.eye(3)
    lk = np.kron(eye, k.T) + np.kron(k.T, eye)
    pk = sum(np.kron(m.T, m.T) for m in ks)
    rho = np.max(np.abs(np.linalg.eigvals(np.linalg.solve(lk, pk))))
    lo, hi = ms_spectral_bound(p, f)
    assert lo <= rho * (1 + 1e-8) + 1e-12
    if hi < np.inf:
        assert rho <= hi * (1 + 1e-8) + 1e-12
    direct = np.max(np.linalg.eigvals(ms_operator(p, f)).real) < -1e-12
    assert direct == (rho < 1) or abs(rho - 1) < 1e-8


def test_mean_square_large_uses_power_route():
    p = make_benchmark("ex5")
    x = fp_care_sda(p).x
    f = -np.linalg.solve(p.R, p.B.T @ x + p.L.T)
    lo, hi = ms_spectral_bound(p, f)
    assert 0 < lo <= hi < 1
    assert mean_square_stable(p, f)


def _scalar_rate(p, x):
    a, b, q, rho = (float(M[0, 0]) for M in (p.A, p.B, p.Q, p.R))
    al, be = float(p.A0[0, 0, 0]), float(p.B0[0, 0, 0])
    u = x * b + al * be * x
    d = rho + be * be * x
    dfdx = 2 * a - 2 * b * u / d
    dfdy = al * al - 2 * al * be * u / d + be * be * u * u / d ** 2
    return abs(dfdy / dfdx)


@pytest.mark.parametrize("pars", [(1.0, 1.0, 1.0, 1.0, 0.5, 0.5), (-0.5, 2.0, 1.0, 0.3, 0.8, -0.2), (0.2, 1.0, 3.0, 1.0, 0.4, 0.9)])
def test_rate_scalar_hand_formula(pars):
    a, b, q, rho, al, be = pars
    p = scalar_problem(a, b, q, rho, 0.0, [al], [be])
    x = scalar_scare_solve(p)
    cert = rlinear_rate(p, [[x]])
    assert cert.rho == pytest.approx(_scalar_rate(p, x), rel=1e-8)
    assert cert.dimension == 1


def test_rate_vanishes_without_noise():
    p = scalar_problem(1.0, 1.0, 1.0, 1.0)
    assert rlinear_rate(p, [[1 + np.sqrt(2)]]).rho == 0.0


@pytest.mark.parametrize("ex", ["ex1", "ex3"])
def test_rate_matches_observed_contraction(ex):
    p = make_benchmark(ex)
    rep = fp_care_sda(p, cfg=SolverConfig(keep_iterates=True))
    rho = rlinear_rate(p, rep.x).rho
    errs = [np.linalg.norm(x - rep.x) for x in rep.iterates]
    ratios = [b / a for a, b in zip(errs, errs[1:]) if b > 1e-9 * np.linalg.norm(rep.x)]
    assert ratios[-1] == pytest.approx(rho, rel=0.05)


def test_newton_start_checks_ex1():
    p = make_benchmark("ex1")
    x_hat = fp_care_sda(p).x
    assert check_newton_start(p, 2 * x_hat + np.eye(2))
    assert check_decreasing_start(p, 2 * x_hat + np.eye(2), x_hat)
    assert not check_decreasing_start(p, 0.5 * x_hat, x_hat)


def test_newton_start_fails_when_unstable():
    p = make_benchmark("ex1")
    # A is not Hurwitz and the gain at X = 0 leaves it that way
    assert np.max(np.linalg.eigvals(newton_operators(p, np.zeros((2, 2))).a_xk).real) > 0
    assert not check_newton_start(p, np.zeros((2, 2)))
