import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from depcag.dynamics import LinearDEPCAG
from depcag.errors import (CertificateViolated, EigenvalueOnUnitCircle,
                           NonDiagonalizablePeripheral)
from depcag.functions import Harmonic, QuasiPeriodicMatrixFunction as QP
from depcag.mesh import uniform_mesh
from depcag.reduction import (DichotomyCertificate, GreenKernel, ReducedSystem, certify,
                              dichotomy_from_constant, dichotomy_from_periodic,
                              dichotomy_from_projection, green_matrix, reduce_system,
                              spectral_projection, verify_dichotomy)

from conftest import counterexample_B, trig_forcing

PI = np.pi


def explicit_green(H0, P, n, k):
    """Green matrix of a constant system from matrix powers."""
    q = H0.shape[0]
    I = np.eye(q)
    if n > k:
        return np.linalg.matrix_power(H0, n - k - 1) @ P
    return -np.linalg.matrix_power(np.linalg.inv(H0), k + 1 - n) @ (I - P)


def test_counterexample_reduction_is_exact():
    sys = LinearDEPCAG(QP(np.zeros((2, 2))), counterexample_B(), uniform_mesh(1.0, (-10, 10)),
                       trig_forcing())
    red = reduce_system(sys)
    assert np.abs(red.H - np.diag([1 - 2 / PI, 1 + 2 / PI])).max() < 1e-14
    # h(n) = int_n^{n+1} f for A = 0
    for n in (-3, 0, 4):
        assert np.abs(red.h_at(n) - sys.f.integral(n, n + 1)).max() < 1e-14
    assert red.margins.min() > 0.3


def test_constant_certificate_saddle_non_normal():
    H0 = np.array([[0.5, 3.0], [0.0, 1.8]])
    cert = dichotomy_from_constant(H0)
    P = cert.Pi
    assert np.abs(P @ P - P).max() < 1e-12
    assert np.abs(P @ H0 - H0 @ P).max() < 1e-12
    assert cert.rank == 1
    assert cert.rho == pytest.approx(max(0.5, 1 / 1.8), rel=2e-6)
    red = ReducedSystem.constant(H0, (-50, 50))
    assert verify_dichotomy(red, cert).verified
    for n, k in [(5, 2), (2, 5), (0, 0), (-3, 4), (7, -1)]:
        assert np.abs(green_matrix(red, cert, n, k) - explicit_green(H0, P, n, k)).max() < 1e-10


def test_constant_certificate_diagonal_has_unit_constant():
    cert = dichotomy_from_constant(np.diag([1 - 2 / PI, 1 + 2 / PI]))
    assert np.allclose(cert.Pi, np.diag([1, 0]))
    assert cert.K <= 1 + 1e-6
    assert cert.rho <= 0.6111


def test_certificate_failures():
    with pytest.raises(EigenvalueOnUnitCircle):
        dichotomy_from_constant(np.diag([0.5, 1.0]))
    with pytest.raises(NonDiagonalizablePeripheral):
        dichotomy_from_constant(np.array([[0.5, 1.0], [0.0, 0.5]]))
    red = ReducedSystem.constant(np.diag([0.5, 2.0]), (-30, 30))
    with pytest.raises(CertificateViolated):
        verify_dichotomy(red, DichotomyCertificate(np.eye(2), 1.0, 0.5, (-30, 30)))
    with pytest.raises(CertificateViolated):   # correct projection, too small K for skewed H
        H0 = np.array([[0.5, 3.0], [0.0, 1.8]])
        verify_dichotomy(ReducedSystem.constant(H0, (-30, 30)),
                         DichotomyCertificate(dichotomy_from_constant(H0).Pi, 1.0, 0.56,
                                              (-30, 30)))


def test_certificate_text_round_trip():
    cert = dichotomy_from_constant(np.array([[0.5, 3.0], [0.0, 1.8]]))
    back = DichotomyCertificate.from_text(cert.to_text())
    assert np.array_equal(back.Pi, cert.Pi)
    assert (back.K, back.rho, back.window) == (cert.K, cert.rho, cert.window)


def test_periodic_certificate_matches_two_step_monodromy():
    H = np.empty((60, 2, 2), complex)
    A1 = np.array([[0.3, 1.0], [0.0, 2.0]])
    A2 = np.array([[0.8, 0.0], [0.5, 1.2]])
    for i in range(60):
        H[i] = A1 if (i - 30) % 2 == 0 else A2
    red = ReducedSystem(H, np.zeros((60, 2)), -30)
    cert = dichotomy_from_periodic(red, 2)
    M = A2 @ A1
    lam = np.abs(np.linalg.eigvals(M))
    assert cert.rho == pytest.approx(max(lam.min(), 1 / lam.max()) ** 0.5, rel=2e-6)
    assert verify_dichotomy(red, cert).verified


def test_projection_certificate_estimates_rate():
    red = ReducedSystem.constant(np.diag([0.4, 2.5]), (-60, 60))
    cert = dichotomy_from_projection(red, np.diag([1.0, 0.0]))
    assert cert.rho == pytest.approx(0.4, rel=1e-3)
    assert cert.K == pytest.approx(1.0, abs=1e-3)
    assert certify(red, "constant").Pi == pytest.approx(np.diag([1, 0]))


def hyperbolic_matrices():
    def build(x):
        lam = np.array([x[0], x[1], x[2]])
        V = np.eye(3) + 0.3 * x[3:].reshape(3, 3)
        return V @ np.diag(lam) @ np.linalg.inv(V)
    moduli = st.one_of(st.floats(0.1, 0.8), st.floats(1.25, 4.0), st.floats(-0.8, -0.1),
                       st.floats(-4.0, -1.25))
    return st.tuples(moduli, moduli, moduli,
                     arrays(float, 9, elements=st.floats(-1, 1))).map(
        lambda t: build(np.concatenate([np.array(t[:3]), t[3]])))


@given(hyperbolic_matrices())
def test_spectral_projection_is_invariant_idempotent(M):
    P, lam = spectral_projection(M)
    scale = max(1.0, np.linalg.cond(M))
    assert np.abs(P @ P - P).max() < 1e-8 * scale
    assert np.abs(P @ M - M @ P).max() < 1e-8 * scale * np.abs(M).max()
    assert round(np.trace(P).real) == int(np.sum(np.abs(lam) < 1))


@given(st.integers(-20, 20), st.integers(-20, 20))
def test_green_jump_relation(n, k):
    H = np.empty((60, 2, 2), complex)
    rng = np.random.default_rng(0)
    for i in range(60):
        H[i] = np.diag([0.5, 2.0]) + 0.1 * rng.standard_normal((2, 2))
    red = ReducedSystem(H, np.zeros((60, 2)), -30)
    cert = dichotomy_from_projection(red, np.diag([1.0, 0.0]))
    G = GreenKernel(red, cert.Pi)
    jump = G.matrix(n + 1, k) - red.H_at(n) @ G.matrix(n, k)
    expect = np.eye(2) if n == k else np.zeros((2, 2))
    assert np.abs(jump - expect).max() < 1e-10


def test_kernel_projection_consistency():
    sys = LinearDEPCAG(QP([[-0.6, 0], [0, 0.5]], [Harmonic([[0.2, 0], [0, 0.1]], 2 * PI)]),
                       QP(np.zeros((2, 2)), [Harmonic(0.1 * np.eye(2), 2 * PI)]),
                       uniform_mesh(1.0, (-40, 40)))
    red = reduce_system(sys)
    G = GreenKernel(red, np.diag([1.0, 0.0]))
    assert G.anchor_error < 1e-10
    assert G.invariance_error < 1e-10
    assert G.idempotency_error < 1e-10
