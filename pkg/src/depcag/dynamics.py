"""Transition operators of the homogeneous linear DEPCAG.

On each interval ``J_n`` the augmented linear system

    Phi' = A Phi,          Phi(t_n) = I      ->  X(t, t_n)
    Z'   = A Z + B,        Z(t_n)   = I      ->  Z_n(t) = X(t, t_n) J_n(t)
    v'   = A v + f,        v(t_n)   = 0      ->  int_{t_n}^t X(t, u) f(u) du
    Q'   = A Q + I,        Q(t_n)   = 0      ->  int_{t_n}^t X(t, u) du

is integrated in one pass.  The second and third lines are the
variation-of-constants forms of ``J_n`` and of the forcing integral, so one
adaptive integration replaces a nested quadrature over ``X``.  When
``A == 0`` every quantity has a closed form and no integration is done.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import InverseIllConditioned, SingularFactor, SingularJn
from .functions import FusedEvaluator, QuasiPeriodicMatrixFunction
from .integrate import propagate
from .mesh import TimeMesh, interval_index

SINGULARITY_TOL = 1e-10
ILL_CONDITIONED = 1e12


@dataclass(frozen=True, eq=False)
class LinearDEPCAG:
    """``y'(t) = A(t) y(t) + B(t) y(gamma^0(t)) + f(t)`` on a mesh."""

    A: QuasiPeriodicMatrixFunction
    B: QuasiPeriodicMatrixFunction
    mesh: TimeMesh
    f: QuasiPeriodicMatrixFunction | None = None

    def __post_init__(self):
        q = self.A.dimension
        if self.A.is_vector or self.B.is_vector:
            raise ValueError("A and B must be matrix valued")
        if self.B.dimension != q:
            raise ValueError(f"B has dimension {self.B.dimension}, A has {q}")
        if self.f is None:
            object.__setattr__(self, "f", QuasiPeriodicMatrixFunction.zeros(q, vector=True))
        elif not self.f.is_vector or self.f.dimension != q:
            raise ValueError(f"f must be a vector function of dimension {q}")

    @property
    def q(self):
        return self.A.dimension

    def with_forcing(self, f):
        return LinearDEPCAG(self.A, self.B, self.mesh, f)


def inverse(M, what="matrix"):
    """Inverse with a condition-number check."""
    cond = np.linalg.cond(M)
    if not np.isfinite(cond):
        raise SingularFactor(f"{what} is singular")
    if cond > ILL_CONDITIONED:
        warnings.warn(f"{what} has condition number {cond:.3g}", InverseIllConditioned,
                      stacklevel=2)
    return np.linalg.inv(M)


def interval_states(sys, n, times, tol, forcing=None, gain=False, dense=False):
    """States of the augmented interval system at ``times`` inside ``[t_n, t_{n+1}]``.

    Returns a dict with arrays ``X`` = X(t, t_n), ``Z`` = Z_n(t), and when
    requested ``v`` (forcing integral, needs ``forcing``) and ``Q``
    (integral of X(t, u) du), each stacked along the first axis.  With
    ``dense`` the interior times are read off the integrator's continuous
    extension; the last time is always reached exactly.
    """
    q = sys.q
    t_n = float(sys.mesh.t(n))
    times = np.atleast_1d(np.asarray(times, dtype=float))
    eye = np.eye(q, dtype=complex)
    out = {}
    if sys.A.is_zero:
        m = len(times)
        out["X"] = np.broadcast_to(eye, (m, q, q)).copy()
        out["Z"] = np.stack([eye + sys.B.integral(t_n, t) for t in times]) if m else \
            np.zeros((0, q, q), complex)
        if forcing is not None:
            out["v"] = np.stack([forcing.integral(t_n, t) for t in times]) if m else \
                np.zeros((0, q), complex)
        if gain:
            out["Q"] = (times - t_n)[:, None, None] * eye
        return out

    use_f = forcing is not None and not forcing.is_zero
    ncol = 2 * q + (1 if use_f else 0) + (q if gain else 0)
    coef = FusedEvaluator([sys.A, sys.B] + ([forcing] if use_f else []))

    def rhs(t, Y):
        vals = coef.evaluate(t)
        dY = vals[0] @ Y
        dY[:, q:2 * q] += vals[1]
        col = 2 * q
        if use_f:
            dY[:, col] += vals[2]
            col += 1
        if gain:
            dY[:, col:col + q] += eye
        return dY

    Y0 = np.zeros((q, ncol), dtype=complex)
    Y0[:, :q] = eye
    Y0[:, q:2 * q] = eye
    states = np.stack(propagate(rhs, t_n, Y0, times, tol, dense=dense)) if len(times) else \
        np.zeros((0, q, ncol), complex)
    out["X"] = states[:, :, :q]
    out["Z"] = states[:, :, q:2 * q]
    col = 2 * q
    if forcing is not None:
        if use_f:
            out["v"] = states[:, :, col]
            col += 1
        else:
            out["v"] = np.zeros((len(times), q), complex)
    if gain:
        out["Q"] = states[:, :, col:col + q]
    return out


def fundamental_matrix(sys, t, s, tol=1e-10, max_span=None):
    """``X(t, s)`` for ``x' = A(t) x``, integrated directly from ``s`` to ``t``."""
    q = sys.q
    if max_span is not None and abs(t - s) > max_span:
        raise ValueError(f"|t - s| = {abs(t - s)} exceeds the span bound {max_span}")
    eye = np.eye(q, dtype=complex)
    if sys.A.is_zero or t == s:
        return eye
    A = sys.A
    return propagate(lambda u, Y: A(u) @ Y, s, eye, [t], tol)[0]


def _check_in_interval(mesh, n, t):
    t_n, t_n1 = mesh.t(n), mesh.t(n + 1)
    slack = 1e-12 * max(1.0, abs(t_n1))
    if not t_n - slack <= t <= t_n1 + slack:
        raise ValueError(f"t={t} outside [t_{n}, t_{n + 1}] = [{t_n}, {t_n1}]")


def jn_matrix(sys, n, t, tol=1e-10):
    """``J_n(t) = I + int_{t_n}^t X(t_n, u) B(u) du``."""
    _check_in_interval(sys.mesh, n, t)
    if t == sys.mesh.t(n):
        return np.eye(sys.q, dtype=complex)
    st = interval_states(sys, n, [t], tol)
    return np.linalg.solve(st["X"][0], st["Z"][0])


def zn_matrix(sys, n, t, tol=1e-10, singularity_tol=SINGULARITY_TOL):
    """``Z_n(t) = X(t, t_n) J_n(t)``; raises :class:`SingularJn` when ``J_n(t)`` degenerates."""
    _check_in_interval(sys.mesh, n, t)
    st = interval_states(sys, n, [t], tol)
    J = np.linalg.solve(st["X"][0], st["Z"][0])
    margin = np.linalg.svd(J, compute_uv=False).min()
    if margin <= singularity_tol:
        raise SingularJn(f"J_{n}({t}) has smallest singular value {margin:.3g}", n, margin)
    return st["Z"][0]


@dataclass(frozen=True, eq=False)
class TransitionCache:
    """Monodromy factors ``H(n) = Z_n(t_{n+1})`` over the mesh window."""

    sys: LinearDEPCAG
    tol: float
    H: np.ndarray
    margins: np.ndarray
    singularity_tol: float = SINGULARITY_TOL

    @property
    def n_min(self):
        return self.sys.mesh.n_min

    @property
    def n_max(self):
        return self.sys.mesh.n_max

    def H_at(self, n):
        return self.H[n - self.n_min]

    def Z(self, n, t):
        return interval_states(self.sys, n, [t], self.tol)["Z"][0]


def sweep_window(sys, tol=1e-10, samples=64, forcing=None, gain=False,
                 singularity_tol=SINGULARITY_TOL):
    """One pass over every interval of the window.

    Returns ``(cache, h, Q)`` where ``h[n]`` is the forcing integral over
    ``J_n`` (``None`` without ``forcing``) and ``Q[n] = int X(t_{n+1}, u) du``
    (``None`` unless ``gain``).
    """
    mesh = sys.mesh
    q = sys.q
    W = mesh.n_max - mesh.n_min + 1
    H = np.empty((W, q, q), complex)
    margins = np.empty(W)
    h = np.empty((W, q), complex) if forcing is not None else None
    Q = np.empty((W, q, q), complex) if gain else None
    for i, n in enumerate(range(mesh.n_min, mesh.n_max + 1)):
        times = np.linspace(mesh.t(n), mesh.t(n + 1), samples + 1)
        st = interval_states(sys, n, times, tol, forcing=forcing, gain=gain, dense=True)
        if sys.A.is_zero:
            J = st["Z"]
        else:
            J = np.linalg.solve(st["X"], st["Z"])
        margin = np.linalg.svd(J, compute_uv=False).min()
        if margin <= singularity_tol:
            raise SingularJn(f"J_{n} is singular on [t_{n}, t_{n + 1}] "
                             f"(smallest singular value {margin:.3g})", n, margin)
        margins[i] = margin
        H[i] = st["Z"][-1]
        if h is not None:
            h[i] = st["v"][-1]
        if Q is not None:
            Q[i] = st["Q"][-1]
    cache = TransitionCache(sys, tol, H, margins, singularity_tol)
    return cache, h, Q


def monodromy_sequence(sys, tol=1e-10, samples=64, singularity_tol=SINGULARITY_TOL):
    """``H(n)`` for every ``n`` in the window, with invertibility margins of ``J_n``."""
    return sweep_window(sys, tol, samples, singularity_tol=singularity_tol)[0]


def cauchy_matrix(cache, sys, t, s, tol=None):
    """Cauchy matrix ``Z(t, s)`` of the homogeneous DEPCAG.

    For ``t > s`` the ordered product
    ``Z_{k(t)}(t) H(k(t)-1) ... H(k(s)) Z_{k(s)}(s)^{-1}`` is formed left to
    right without re-association; for ``t < s`` the inverse of ``Z(s, t)``.
    """
    q = sys.q
    tol = cache.tol if tol is None else tol
    if t == s:
        return np.eye(q, dtype=complex)
    if t < s:
        return inverse(cauchy_matrix(cache, sys, s, t, tol), f"Z({s}, {t})")
    kt = interval_index(sys.mesh, t)
    ks = interval_index(sys.mesh, s)
    Zt = interval_states(sys, kt, [t], tol)["Z"][0]
    Zs_inv = inverse(interval_states(sys, ks, [s], tol)["Z"][0], f"Z_{ks}({s})")
    if kt == ks:
        return Zt @ Zs_inv
    prod = Zt
    for m in range(kt - 1, ks - 1, -1):
        prod = prod @ cache.H_at(m)
    return prod @ Zs_inv
