import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from depcag.dynamics import LinearDEPCAG
from depcag.errors import OutOfWindow, WindowTooSmall
from depcag.functions import Harmonic, QuasiPeriodicMatrixFunction as QP
from depcag.linear_solver import (PiecewiseSolution, almost_periodicity_check, bounded_sequence,
                                  continuous_solution, recursion_residual, tail_bound,
                                  truncation_radius)
from depcag.mesh import TranslationReport, uniform_mesh
from depcag.oracle import integrate_depcag, residual_check
from depcag.reduction import ReducedSystem, dichotomy_from_constant, reduce_system

from conftest import counterexample_B, trig_forcing


@pytest.mark.parametrize("H0", [0.5, 2.0, -0.4, -3.0])
def test_scalar_constant_forcing(H0):
    red = ReducedSystem.constant([[H0]], (-60, 60), [1.0])
    g = bounded_sequence(red, dichotomy_from_constant([[H0]]))
    assert np.abs(g.c - 1.0 / (1.0 - H0)).max() < 1e-8
    assert g.residual <= 1e-8


@settings(max_examples=15)
@given(w=st.floats(0.1, 3.0), a=st.floats(0.1, 0.7), b=st.floats(1.4, 4.0))
def test_harmonic_forcing_matches_resolvent(w, a, b):
    H0 = np.array([[a, 0.7], [0.0, b]])
    v = np.array([1.0, -0.5])
    W = (-120, 120)
    n = np.arange(W[0], W[1] + 1)
    h = np.exp(1j * w * n)[:, None] * v
    red = ReducedSystem(np.broadcast_to(H0, (len(n), 2, 2)).copy(), h, W[0])
    g = bounded_sequence(red, dichotomy_from_constant(H0, W))
    x = np.linalg.solve(np.exp(1j * w) * np.eye(2) - H0, v)
    exact = np.exp(1j * w * g.indices)[:, None] * x
    assert np.abs(g.c - exact).max() <= 2 * g.tail_bound + 1e-10


def test_radius_and_tail_consistent():
    for K, rho, hs in [(1.0, 0.6, 1.0), (2.5, 0.9, 3.0), (1.0, 0.1, 1e-3)]:
        N = truncation_radius(K, rho, hs, 1e-8)
        assert tail_bound(K, rho, hs, N) <= 1e-8
        assert N == 1 or tail_bound(K, rho, hs, N - 1) > 1e-8


def test_window_too_small():
    red = ReducedSystem.constant([[0.99]], (-20, 20), [1.0])
    with pytest.raises(WindowTooSmall):
        bounded_sequence(red, dichotomy_from_constant([[0.99]], (-20, 20)))


def counterexample_solution(window=(-100, 100)):
    sys = LinearDEPCAG(QP(np.zeros((2, 2))), counterexample_B(), uniform_mesh(1.0, window),
                       trig_forcing())
    red = reduce_system(sys)
    cert = dichotomy_from_constant(red.H_at(0), window)
    grid = bounded_sequence(red, cert, 1e-11)
    return sys, red, cert, grid


def test_continuous_solution_interpolates_grid_and_solves_equation():
    sys, red, cert, grid = counterexample_solution()
    sol = PiecewiseSolution(sys, grid)
    for n in (grid.n_lo, 0, grid.n_hi):
        assert np.abs(continuous_solution(grid, sys, float(n)) - grid.at(n)).max() < 1e-13
    assert residual_check(sol.evaluate_many, sys, -10, 10) < 1e-10
    assert recursion_residual(red, grid.c, grid.n_lo) < 1e-10
    with pytest.raises(OutOfWindow):
        sol(sys.mesh.t(grid.n_hi + 1) + 0.5)


def test_continuous_solution_matches_oracle():
    sys, red, cert, grid = counterexample_solution()
    sol = PiecewiseSolution(sys, grid)
    # seeding error grows like (1 + 2/pi)^n along the unstable direction
    n0 = -12
    orc = integrate_depcag(sys, {n0: grid.at(n0)}, 0.0)
    ts = np.linspace(-12, 0, 241)
    assert np.abs(orc(ts) - sol.evaluate_many(ts)).max() < 1e-8


def test_almost_periodicity_check_periodic_solution():
    sys, red, cert, grid = counterexample_solution((-80, 80))
    sol = PiecewiseSolution(sys, grid)
    # the forcing has period 2 pi and coefficients period 1, so shifts near 44 = 7 * 2 pi
    tau = 44.0
    eps = abs(44.0 - 14 * np.pi)
    out = almost_periodicity_check(sol, [TranslationReport(0.05, tau, 44, 0.0, eps)])
    assert out[0].sup_difference < 10 * eps
    assert out[0].constant == pytest.approx(out[0].sup_difference / 0.05)
