import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from depcag.errors import NonMonotoneMesh, NoTranslationFound, OutOfWindow
from depcag.functions import FusedEvaluator, Harmonic, QuasiPeriodicMatrixFunction as QP
from depcag.mesh import (MeshSpec, build_mesh, find_translations, gamma, interval_index,
                         uniform_mesh)

reals = st.floats(-3, 3, allow_nan=False)


def test_evaluation_scalar_and_array_agree():
    f = QP([[1.0, 2.0], [0.0, -1.0]], [Harmonic([[0.5, 0], [0, 1]], 3.0, 0.2)])
    ts = np.array([-1.3, 0.0, 2.7])
    many = f(ts)
    for t, m in zip(ts, many):
        expect = np.array([[1, 2], [0, -1]]) + np.array([[0.5, 0], [0, 1]]) * np.sin(3 * t + 0.2)
        assert np.allclose(f(t), expect, atol=1e-15)
        assert np.allclose(m, expect, atol=1e-15)


@given(a=reals, b=reals, w=st.floats(0.1, 10), ph=reals)
def test_integral_matches_quadrature(a, b, w, ph):
    f = QP([0.3], [Harmonic([1.2], w, ph)])
    exact = quad(lambda u: f(u)[0].real, a, b, epsabs=1e-13, epsrel=1e-13)[0]
    assert abs(f.integral(a, b)[0] - exact) < 1e-10


def test_sup_norm_bounds_samples():
    f = QP([[1.0, 0], [0, 0]], [Harmonic([[0, 1], [1, 0]], 1.0), Harmonic(np.eye(2), 2.0)])
    vals = f(np.linspace(-20, 20, 2001))
    assert np.linalg.norm(vals, 2, axis=(1, 2)).max() <= f.sup_norm() + 1e-12


def test_fused_evaluator_matches_individual_calls():
    fs = [QP(np.eye(2), [Harmonic(np.ones((2, 2)), 1.5)]),
          QP([1.0, 2.0], [Harmonic([0.0, 1.0], 0.7, 0.1)]), QP(np.zeros((2, 2)))]
    ev = FusedEvaluator(fs)
    for t in (-2.0, 0.3, 5.5):
        for f, v in zip(fs, ev.evaluate(t)):
            assert np.allclose(f(t), v, atol=1e-15)


def test_shape_validation():
    with pytest.raises(ValueError):
        QP([[1, 2, 3], [4, 5, 6]])
    with pytest.raises(ValueError):
        QP([1.0, 2.0], [Harmonic([1.0], 1.0)])


def test_uniform_mesh_and_lookup():
    m = uniform_mesh(0.5, (-4, 4))
    assert m.t(-4) == -2.0 and m.t(5) == 2.5
    assert interval_index(m, 0.0) == 0
    assert interval_index(m, 0.49) == 0
    assert interval_index(m, -0.01) == -1
    assert m.theta == 0.5
    with pytest.raises(OutOfWindow):
        interval_index(m, 2.5)


@given(t=st.floats(-9.99, 9.99), p=st.integers(0, 3))
def test_gamma_points_to_lagged_mesh_point(t, p):
    m = build_mesh(MeshSpec(1.0, 0.2, 0.618, (-15, 15)))
    k = interval_index(m, t)
    assert m.t(k) <= t < m.t(k + 1)
    assert gamma(m, p, t) == m.t(k - p)


def test_non_monotone_mesh_rejected():
    with pytest.raises(NonMonotoneMesh):
        build_mesh(MeshSpec(1.0, 0.9, 0.4, (-10, 10)))
    with pytest.raises(ValueError):
        MeshSpec(1.0, 0.0, 0.0, (0, 10))


def test_translations_of_jittered_mesh():
    beta = (np.sqrt(5) - 1) / 2
    m = build_mesh(MeshSpec(1.0, 0.2, beta, (-100, 100)))
    A = QP([[0.0]], [Harmonic([[1.0]], 2 * np.pi)])
    found = find_translations(m, [A], 0.05, 1e-3)
    assert found
    for r in found:
        d = m.points[r.p:] - m.points[:-r.p]
        assert np.max(np.abs(d - r.tau)) <= 0.05 + 1e-12
        assert r.residual_functions <= 0.05


def test_no_translation_on_tiny_window():
    m = build_mesh(MeshSpec(1.0, 0.2, 0.618, (-3, 3)))
    with pytest.raises(NoTranslationFound):
        find_translations(m, [], 1e-4, 1e-3)
