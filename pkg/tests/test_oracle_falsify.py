import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from depcag.dynamics import LinearDEPCAG, fundamental_matrix
from depcag.errors import MissingInitialData, OutOfWindow
from depcag.falsify import (_full_sup, _rank_one_sup, candidate_projections,
                            falsify_continuous_dichotomy, rank_one_projection)
from depcag.functions import Harmonic, QuasiPeriodicMatrixFunction as QP
from depcag.mesh import uniform_mesh
from depcag.nonlinear_solver import NonlinearRHS
from depcag.oracle import integrate_depcag, residual_check
from depcag.reduction import reduce_system

from conftest import counterexample_B, trig_forcing

PI = np.pi


def test_oracle_closed_form_zero_A():
    sys = LinearDEPCAG(QP([[0.0]]), QP([[-0.5]]), uniform_mesh(1.0, (-5, 5)),
                       QP([0.0], [Harmonic([1.0], 2.0)]))
    orc = integrate_depcag(sys, {0: np.array([1.0])}, 3.0)
    y = 1.0
    for n in range(3):
        for d in (0.3, 0.7, 1.0):
            exact = y - 0.5 * y * d + sys.f.integral(n, n + d)[0]
            assert abs(orc(n + d)[0] - exact) < 1e-11
        y = y - 0.5 * y + sys.f.integral(n, n + 1)[0]
    assert residual_check(orc, sys, 0, 2) < 1e-11


def test_oracle_input_checks():
    sys = LinearDEPCAG(QP([[0.0]]), QP([[-0.5]]), uniform_mesh(1.0, (-5, 5)))
    rhs = NonlinearRHS([2], QP([1.0]), [[[0.1]]])
    with pytest.raises(MissingInitialData):
        integrate_depcag(sys, {0: [1.0], -1: [1.0]}, 2.0, rhs=rhs)
    with pytest.raises(OutOfWindow):
        integrate_depcag(sys, {0: [1.0]}, 10.0)


def test_residual_check_detects_wrong_solution():
    sys = LinearDEPCAG(QP([[0.0]]), QP([[-0.5]]), uniform_mesh(1.0, (-5, 5)))
    wrong = lambda t: np.exp(-0.5 * (np.asarray(t) - np.floor(t)))[:, None].astype(complex)
    assert residual_check(wrong, sys, 0, 2) > 1e-3


@settings(max_examples=20)
@given(a=st.floats(0, PI), b=st.floats(0, PI), alpha=st.floats(0.0, 0.3),
       forward=st.booleans())
def test_rank_one_shortcut_matches_pair_loop(a, b, alpha, forward):
    if abs(np.sin(a - b)) < 0.1:
        return
    rng = np.random.default_rng(0)
    times = np.sort(rng.uniform(-5, 5, 40))
    Y = rng.normal(size=(40, 2, 2)) + 2 * np.eye(2)
    Yinv = np.linalg.inv(Y)
    P = rank_one_projection(a, b)
    u, s, vh = np.linalg.svd(P)
    fast = _rank_one_sup(times, Y, Yinv, u[:, 0] * s[0], vh[0].conj(), alpha, forward)
    slow = _full_sup(times, Y @ P, Yinv, alpha, forward)
    assert fast == pytest.approx(slow, rel=1e-10)


def test_candidate_grid():
    c = candidate_projections(2, 4)
    assert len(c) == 2 + 4 * 3
    for _, P in c:
        assert np.abs(P @ P - P).max() < 1e-12


def test_counterexample_stable_branch_returns_to_one():
    sys = LinearDEPCAG(QP(np.zeros((2, 2))), counterexample_B(), uniform_mesh(1.0, (-60, 60)))
    from depcag.dynamics import zn_matrix
    for n in (-3, 0, 7):
        assert abs(zn_matrix(sys, n, n + 0.5)[0, 0] - 1.0) < 1e-14
        assert abs(zn_matrix(sys, n, n + 1.0)[0, 0] - (1 - 2 / PI)) < 1e-14


def test_no_ode_dichotomy_has_identity_fundamental_matrix():
    sys = LinearDEPCAG(QP(np.zeros((2, 2))), QP(np.diag([-1.5, 0.5])), uniform_mesh(1.0, (-9, 9)))
    rng = np.random.default_rng(2)
    for t, s in rng.uniform(-9, 9, (20, 2)):
        assert np.abs(fundamental_matrix(sys, t, s) - np.eye(2)).max() <= 1e-12


def test_falsifier_accepts_genuine_continuous_dichotomy():
    sys = LinearDEPCAG(QP(-np.eye(2)), QP(np.zeros((2, 2))), uniform_mesh(1.0, (-50, 50)))
    red = reduce_system(sys)
    rep = falsify_continuous_dichotomy(sys, red.H, T=10.0, angles=4)
    assert not rep.violated
    full = [c for c in rep.candidates if c.label == "rank2"][0]
    assert full.M_long == pytest.approx(1.0, abs=1e-9)
    assert "violated for every candidate: False" in rep.to_text()


def test_sampled_margin_misses_interior_singularity():
    """``J_n`` vanishes at two thirds of each interval; the sampled check reports a small margin only."""
    from depcag.dynamics import jn_matrix
    sys = LinearDEPCAG(QP(np.zeros((2, 2))), QP(np.diag([-1.5, 0.5])), uniform_mesh(1.0, (-9, 9)))
    assert abs(jn_matrix(sys, 0, 2 / 3)[0, 0]) < 1e-15
    red = reduce_system(sys)
    assert 1e-10 < red.margins.min() < 1e-2
