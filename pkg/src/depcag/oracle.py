"""Direct interval-by-interval integration of a DEPCAG, used as ground truth.

On ``J_n`` the deviated arguments are frozen at stored mesh values, so each
interval is an ordinary nonautonomous ODE solved with ``scipy``'s DOP853.
Nothing here touches Green series, Cauchy products or contraction code.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import IntegratorFailure, MissingInitialData, OutOfWindow
from .mesh import interval_indices


@dataclass(eq=False)
class OracleTrajectory:
    """Mesh values ``y(t_n)`` for ``n_start <= n <= n_end`` and the dense interval solutions."""

    n_start: int
    mesh_values: np.ndarray
    t_end: float
    tol: float
    mesh: object
    pieces: list
    history: dict

    @property
    def n_end(self):
        return self.n_start + len(self.mesh_values) - 1

    def value_at_mesh(self, n):
        if n in self.history:
            return self.history[n]
        i = n - self.n_start
        if not 0 <= i < len(self.mesh_values):
            raise OutOfWindow(f"y(t_{n}) not stored")
        return self.mesh_values[i]

    def __call__(self, times):
        """Dense evaluation at an array of times in ``[t_{n_start}, t_end]``."""
        times = np.atleast_1d(np.asarray(times, dtype=float))
        t0 = float(self.mesh.t(self.n_start))
        if times.size and (times.min() < t0 or times.max() > self.t_end):
            raise OutOfWindow(f"times outside [{t0}, {self.t_end}]")
        clipped = np.minimum(times, np.nextafter(self.t_end, -np.inf))
        ks = interval_indices(self.mesh, np.maximum(clipped, t0))
        out = np.empty((times.size, self.mesh_values.shape[1]), complex)
        for k in np.unique(ks):
            sel = ks == k
            sol = self.pieces[int(k) - self.n_start]
            out[sel] = sol(times[sel]).T
        return out


def integrate_depcag(sys, initial, t_end, tol=1e-12, rhs=None, n_start=None):
    """Integrate ``y' = A y + B y(t_n) + f`` (or ``+ F(t, y(t_{n-p_1}), ...)``) forward.

    Parameters
    ----------
    sys : LinearDEPCAG
        Supplies ``A``, ``B``, the mesh and, in the linear case, ``f``.
    initial : dict or array_like
        Mesh values ``y(t_n)`` for ``n = n_start - p .. n_start`` where ``p``
        is the largest lag.  A dict maps ``n`` to the value; an array is read
        in increasing ``n`` and must end at ``n_start``.
    t_end : float
    tol : float
        Relative and absolute tolerance handed to the integrator.
    rhs : NonlinearRHS, optional
        When given it replaces ``f``.
    n_start : int, optional
        Required when ``initial`` is an array; defaults to ``0``.
    """
    mesh = sys.mesh
    q = sys.q
    p = max(rhs.lags) if rhs is not None and len(rhs.lags) else 0
    if isinstance(initial, dict):
        history = {int(k): np.asarray(v, dtype=complex).reshape(q) for k, v in initial.items()}
        if n_start is None:
            n_start = max(history)
    else:
        n_start = 0 if n_start is None else n_start
        arr = np.asarray(initial, dtype=complex).reshape(-1, q)
        history = {n_start - len(arr) + 1 + i: arr[i] for i in range(len(arr))}
    missing = [n for n in range(n_start - p, n_start + 1) if n not in history]
    if missing:
        raise MissingInitialData(f"initial values missing for mesh indices {missing}")
    if not mesh.t(n_start) < t_end <= mesh.points[-1]:
        raise OutOfWindow(f"t_end={t_end} not inside ({mesh.t(n_start)}, {mesh.points[-1]}]")

    vals = {n_start: history[n_start]}

    def value(n):
        return vals[n] if n in vals else history[n]

    A, B = sys.A, sys.B
    pieces = []
    n = n_start
    while True:
        t_n = float(mesh.t(n))
        t_next = min(float(mesh.t(n + 1)), t_end)
        y_n = value(n)
        if rhs is None:
            f = sys.f

            def fun(t, y, y_n=y_n):
                return A(t) @ y + B(t) @ y_n + f(t)
        else:
            frozen = rhs.coupling_term([value(n - p) for p in rhs.lags])
            g = rhs.forcing

            def fun(t, y, y_n=y_n, frozen=frozen):
                return A(t) @ y + B(t) @ y_n + g(t) + frozen
        sol = solve_ivp(fun, (t_n, t_next), y_n.astype(complex), method="DOP853",
                        rtol=tol, atol=tol, dense_output=True)
        if not sol.success:
            raise IntegratorFailure(f"oracle failed on J_{n}: {sol.message}")
        pieces.append(sol.sol)
        if t_next >= t_end:
            break
        vals[n + 1] = sol.y[:, -1]
        n += 1
    mesh_values = np.array([vals[k] for k in range(n_start, n + 1)])
    return OracleTrajectory(n_start, mesh_values, float(t_end), tol, mesh, pieces, history)


_GL_X, _GL_W = np.polynomial.legendre.leggauss(12)


def residual_check(evaluate, sys, n_lo, n_hi, rhs=None, samples_per_interval=8):
    """Max of ``|y(t) - y(t_n) - int_{t_n}^t [A y + B y(t_n) + f] du|`` over samples.

    ``evaluate`` maps an array of times to an ``(m, q)`` array.  The
    integral is a composite 12-point Gauss-Legendre rule between samples.
    """
    mesh = sys.mesh
    A, B = sys.A, sys.B
    worst = 0.0
    for n in range(n_lo, n_hi + 1):
        t_n, t_n1 = float(mesh.t(n)), float(mesh.t(n + 1))
        s = np.linspace(t_n, t_n1, samples_per_interval + 1)
        a, b = s[:-1], s[1:]
        nodes = (0.5 * (b - a)[:, None] * _GL_X + 0.5 * (a + b)[:, None]).ravel()
        weights = (0.5 * (b - a)[:, None] * _GL_W).ravel()
        y_nodes = evaluate(nodes)
        y_s = evaluate(s)
        y_n = y_s[0]
        if rhs is None:
            extra = sys.f(nodes)
        else:
            lagged = evaluate(np.array([mesh.t(n - p) for p in rhs.lags]))
            extra = rhs.forcing(nodes) + rhs.coupling_term(list(lagged))
        integrand = (np.einsum("mij,mj->mi", A(nodes), y_nodes)
                     + np.einsum("mij,j->mi", B(nodes), y_n) + extra)
        seg = (weights[:, None] * integrand).reshape(len(a), len(_GL_X), -1).sum(axis=1)
        cum = np.cumsum(seg, axis=0)
        r = y_s[1:] - y_n - cum
        worst = max(worst, float(np.max(np.linalg.norm(r, axis=1))))
    return worst
