import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import brentq

from depcag.dynamics import LinearDEPCAG
from depcag.errors import (MaxIterExceeded, MissingInitialData, NotAContraction,
                           NotStableCertificate, SmallnessViolated)
from depcag.functions import Harmonic, QuasiPeriodicMatrixFunction as QP
from depcag.mesh import uniform_mesh
from depcag.nonlinear_solver import (NonlinearRHS, contraction_operator, fixed_point,
                                     nonlinear_solution, reduce_nonlinear, sigma,
                                     sigma_increment)
from depcag.oracle import integrate_depcag, residual_check
from depcag.reduction import dichotomy_from_constant
from depcag.stability import (decay_certificate, decay_rate, forward_sequence,
                              perturbation_sequence)


def scalar_problem(C=0.05, lags=(1,), B=-0.5, window=(-60, 60), forcing=None):
    sys = LinearDEPCAG(QP([[0.0]]), QP([[B]]), uniform_mesh(1.0, window))
    g = QP([1.0]) if forcing is None else forcing
    rhs = NonlinearRHS(lags, g, [[[C]]] * len(lags))
    red = reduce_nonlinear(sys, rhs)
    return sys, rhs, red, dichotomy_from_constant(red.H_at(0), window)


@given(x=st.floats(-10, 10), e=st.floats(-1e-3, 1e-3), y=st.floats(-10, 10))
def test_sigma_increment_and_lipschitz(x, e, y):
    assert abs(sigma_increment(x, e) - (sigma(x + e) - sigma(x))) < 1e-15
    assert abs(sigma(x) - sigma(y)) <= abs(x - y) + 1e-15


def test_constant_fixed_point_matches_root():
    sys, rhs, red, cert = scalar_problem()
    grid, rep = fixed_point(red, cert, rhs)
    root = brentq(lambda c: 0.5 * c + 1 + 0.05 * np.sin(c) - c, 0, 5, xtol=1e-15)
    assert np.abs(grid.c - root).max() < 1e-9
    assert rep.contraction_factor == pytest.approx(0.2, rel=1e-5)
    assert rep.residual < 1e-9


def test_operator_lipschitz_ratio():
    sys, rhs, red, cert = scalar_problem()
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(20):
        a = rng.normal(size=(red.size, 1)) * 3
        b = rng.normal(size=(red.size, 1)) * 3
        ta, tb = (contraction_operator(red, cert, rhs, x) for x in (a, b))
        worst = max(worst, np.abs(ta - tb).max() / np.abs(a - b).max())
    assert worst <= 0.2 + 1e-6


def test_refuses_non_contraction_and_iteration_budget():
    sys, rhs, red, cert = scalar_problem(C=0.3)
    with pytest.raises(NotAContraction):
        fixed_point(red, cert, rhs)
    sys, rhs, red, cert = scalar_problem()
    with pytest.raises(MaxIterExceeded):
        fixed_point(red, cert, rhs, max_iter=2)


def test_lag_zero_and_oracle():
    g = QP([0.5], [Harmonic([1.0], 1.3)])
    sys, rhs, red, cert = scalar_problem(C=0.05, lags=(0, 2), forcing=g)
    grid, rep = fixed_point(red, cert, rhs)
    sol = nonlinear_solution(sys, rhs, grid)
    n0 = grid.n_lo + 2
    init = {n0 - j: grid.at(n0 - j) for j in range(3)}
    orc = integrate_depcag(sys, init, float(n0 + 12), rhs=rhs)
    ts = np.linspace(n0, n0 + 12, 241)
    assert np.abs(orc(ts) - sol.evaluate_many(ts)).max() < 1e-8
    assert residual_check(sol.evaluate_many, sys, n0, n0 + 11, rhs) < 1e-9


def test_forward_and_perturbation_sequences_agree():
    sys, rhs, red, cert = scalar_problem(window=(-10, 40))
    eta = [np.array([0.3]), np.array([-0.2])]
    delta = [np.array([1e-3]), np.array([2e-3])]
    c = forward_sequence(red, rhs, eta, 30)
    c2 = forward_sequence(red, rhs, [a + b for a, b in zip(eta, delta)], 30)
    e = perturbation_sequence(red, rhs, c, delta, 30)
    assert np.abs((c2 - c) - e).max() < 1e-13
    # the recursion itself
    n = 5
    i = n + 1
    expect = 0.5 * c[i] + 1.0 + 0.05 * np.sin(c[i - 1])
    assert np.abs(c[i + 1] - expect).max() < 1e-13
    with pytest.raises(MissingInitialData):
        forward_sequence(red, rhs, eta[:1], 30)


def test_decay_rate_formula():
    assert decay_rate(1.0, 0.5, 0.1, 1, 1) == pytest.approx(0.5 * (1 + 0.1 / 0.5))
    assert decay_rate(2.0, 0.4, 0.05, 2, 3) == pytest.approx(0.4 * (1 + 2 * 0.05 * 2 / 0.4 ** 3))


def test_decay_certificate_bounds_hold():
    sys, rhs, red, cert = scalar_problem(window=(-40, 70))
    grid, _ = fixed_point(red, cert, rhs)
    rng = np.random.default_rng(1)
    perts = [rng.normal(size=(2, 1)) * 1e-2 for _ in range(4)]
    summ = decay_certificate(sys, red, rhs, cert, grid.at, perts, horizon=50)
    assert summ.all_bounds_hold
    assert summ.rate_within(0.05)
    assert summ.alpha < 1


def test_decay_certificate_refusals():
    sys, rhs, red, cert = scalar_problem(B=-3.0)    # H = -2: unstable certificate
    with pytest.raises(NotStableCertificate):
        decay_certificate(sys, red, rhs, cert, lambda n: np.zeros(1), [np.zeros((2, 1))])
    sys, rhs, red, cert = scalar_problem(C=0.26)   # K/rho * L * kappa / (1 - rho) = 1.04
    with pytest.raises(SmallnessViolated):
        decay_certificate(sys, red, rhs, cert, lambda n: np.zeros(1), [np.zeros((2, 1))])
