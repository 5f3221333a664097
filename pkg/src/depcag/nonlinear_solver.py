"""Almost periodic solution of the nonlinear DEPCAG by Picard iteration.

The right-hand side is ``F(t, x_1..x_l) = g(t) + sum_j C_j sigma(x_j)`` with
``sigma`` the sine applied to real and imaginary parts separately (Lipschitz
constant 1).  On ``J_n`` the state arguments are frozen at grid values, so

    h(n, c_hat(n)) = h_g(n) + Q(n) sum_j C_j sigma(c(n - p_j)),
    Q(n) = int_{t_n}^{t_{n+1}} X(t_{n+1}, u) du,

and the contraction operator is the Green series applied to this lifted
forcing.  The operator acts on the whole window with the stencil clipped at
the edges, which makes it a self-map; the reported solution is restricted to
the indices whose stencil and lags lie fully inside the window.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import interval_states
from .errors import MaxIterExceeded, NotAContraction, OutOfWindow, WindowTooSmall
from .functions import QuasiPeriodicMatrixFunction
from .linear_solver import GridSolution, PiecewiseSolution, tail_bound, truncation_radius
from .reduction import GreenKernel, reduce_system


def sigma(x):
    x = np.asarray(x)
    return np.sin(x.real) + 1j * np.sin(x.imag)


def sigma_increment(x, e):
    """``sigma(x + e) - sigma(x)`` without cancellation for small ``e``."""
    x, e = np.asarray(x), np.asarray(e)

    def part(a, d):
        return 2.0 * np.cos(a + 0.5 * d) * np.sin(0.5 * d)

    return part(x.real, e.real) + 1j * part(x.imag, e.imag)


@dataclass(frozen=True, eq=False)
class NonlinearRHS:
    """``F(t, x_1..x_l) = g(t) + sum_j C_j sigma(x_j)`` with lags ``p_j``."""

    lags: tuple
    forcing: QuasiPeriodicMatrixFunction
    coupling: tuple = field(default_factory=tuple)

    def __post_init__(self):
        lags = tuple(int(p) for p in self.lags)
        if any(p < 0 for p in lags):
            raise ValueError("lags must be non-negative")
        C = tuple(np.atleast_2d(np.asarray(c, dtype=complex)) for c in self.coupling)
        if len(C) != len(lags):
            raise ValueError(f"{len(lags)} lags but {len(C)} coupling matrices")
        q = self.forcing.dimension
        if not self.forcing.is_vector:
            raise ValueError("forcing must be vector valued")
        for c in C:
            if c.shape != (q, q):
                raise ValueError(f"coupling matrix of shape {c.shape}, expected {(q, q)}")
        object.__setattr__(self, "lags", lags)
        object.__setattr__(self, "coupling", C)

    @property
    def q(self):
        return self.forcing.dimension

    @property
    def ell(self):
        return len(self.lags)

    @property
    def max_lag(self):
        return max(self.lags, default=0)

    @property
    def L(self):
        return max((float(np.linalg.norm(c, 2)) for c in self.coupling), default=0.0)

    def coupling_term(self, states):
        """``sum_j C_j sigma(x_j)`` for the lagged states ``x_1..x_l``."""
        out = np.zeros(self.q, complex)
        for C, x in zip(self.coupling, states):
            out = out + C @ sigma(x)
        return out

    def __call__(self, t, states):
        return self.forcing(t) + self.coupling_term(states)


def reduce_nonlinear(sys, rhs, tol=1e-10, samples=64):
    """Reduced system with ``h = h_g`` and the interval gains ``Q(n)``."""
    if rhs.q != sys.q:
        raise ValueError(f"right-hand side has dimension {rhs.q}, system has {sys.q}")
    return reduce_system(sys.with_forcing(rhs.forcing), tol, samples, gain=True)


def lifted_forcing(sys, rhs, c, n, tol=1e-10):
    """``int_{t_n}^{t_{n+1}} X(t_{n+1}, s) F(s, c_hat(n)) ds`` by direct integration.

    ``c`` is a mapping or callable giving ``c(m)`` for the lagged indices.
    """
    get = c if callable(c) else c.__getitem__
    try:
        states = [np.asarray(get(n - p), dtype=complex) for p in rhs.lags]
    except (KeyError, IndexError) as exc:
        raise OutOfWindow(f"lagged value missing for index {n}: {exc}") from exc
    st = interval_states(sys, n, [sys.mesh.t(n + 1)], tol, forcing=rhs.forcing, gain=True)
    return st["v"][0] + st["Q"][0] @ rhs.coupling_term(states)


def frozen_terms(rhs, c):
    """``w(k) = sum_j C_j sigma(c(k - p_j))`` over a full-window sequence, clipped at the left edge."""
    W = len(c)
    w = np.zeros_like(c, dtype=complex)
    for p, C in zip(rhs.lags, rhs.coupling):
        if p < W:
            w[p:] += sigma(c[:W - p]) @ C.T
    return w


def lifted_sequence(red, rhs, c):
    """``h(k, c_hat(k))`` for every window position."""
    w = frozen_terms(rhs, c)
    return red.h + np.einsum("kij,kj->ki", red.gain, w)


def green_sum_clipped(kernel, h, N):
    """``sum_{|k-n| <= N, k in window} G(n, k) h(k)`` for every window position ``n``."""
    W = kernel.red.size
    c = np.zeros((W, kernel.red.q), complex)
    for d in range(1, min(N, W - 1) + 1):
        c[d:] += np.einsum("kij,kj->ki", kernel.stable_band(d)[:W - d], h[:W - d])
    for d in range(0, min(N, W - 1) + 1):
        c[:W - d] += np.einsum("kij,kj->ki", kernel.unstable_band(d)[:W - d], h[d:])
    return c


@dataclass(frozen=True)
class ContractionReport:
    contraction_factor: float
    iterations: int
    final_update_norm: float
    L: float
    kappa: float
    ell: int
    update_ratios: tuple = ()
    residual: float = float("nan")


class ContractionSetup:
    """Constants and truncation shared by the operator and the iteration."""

    def __init__(self, red, cert, rhs, resid_tol=1e-10, one_sided=False, kernel=None):
        if red.gain is None:
            raise ValueError("reduced system lacks interval gains; use reduce_nonlinear")
        if one_sided and not cert.is_stable:
            raise ValueError("one-sided factor needs a certificate with Pi = I")
        self.red, self.cert, self.rhs = red, cert, rhs
        self.kernel = GreenKernel(red, cert.Pi) if kernel is None else kernel
        self.kappa = float(np.max(np.linalg.norm(red.gain, 2, axis=(1, 2))))
        self.L = rhs.L
        branches = 1.0 if one_sided else 2.0
        self.factor = branches * cert.K * self.L * self.kappa * rhs.ell / (1 - cert.rho)
        hg = float(np.max(np.linalg.norm(red.h, axis=1), initial=0.0))
        sig = np.sqrt(2.0 * rhs.q)
        self.h_sup = hg + self.kappa * sum(float(np.linalg.norm(C, 2)) for C in rhs.coupling) * sig
        self.N = truncation_radius(cert.K, cert.rho, self.h_sup, resid_tol)
        W = red.size
        self.lo = self.N + rhs.max_lag
        self.hi = W - 1 - self.N
        if self.hi - self.lo < 1:
            raise WindowTooSmall(f"window of {W} indices cannot hold radius {self.N} "
                                 f"and lag {rhs.max_lag}")
        self.tail = tail_bound(cert.K, cert.rho, self.h_sup, self.N)

    def apply(self, c):
        return green_sum_clipped(self.kernel, lifted_sequence(self.red, self.rhs, c), self.N)


def contraction_operator(red, cert, rhs, c_in, resid_tol=1e-10, setup=None):
    """``(Tc)(n) = sum_k G(n, k) h(k, c_hat(k))`` on the full window.

    ``c_in`` has one entry per window index.  Entries outside
    ``[N + max_lag, W - 1 - N]`` (positions) see a clipped stencil.
    """
    setup = ContractionSetup(red, cert, rhs, resid_tol) if setup is None else setup
    c_in = np.asarray(c_in, dtype=complex).reshape(red.size, red.q)
    return setup.apply(c_in)


def fixed_point(red, cert, rhs, tol=1e-9, max_iter=200, c0=None, one_sided=False,
                resid_tol=1e-10):
    """Picard iteration ``c_{m+1} = T c_m`` from ``c_0 = 0`` (or ``c0``).

    Returns
    -------
    GridSolution, ContractionReport
        The grid solution covers the interior positions and carries the
        frozen nonlinear terms needed by the continuous solution.

    Raises
    ------
    NotAContraction
        When the contraction factor is ``>= 1``.
    MaxIterExceeded
    """
    setup = ContractionSetup(red, cert, rhs, resid_tol, one_sided)
    if not setup.factor < 1:
        raise NotAContraction(
            f"contraction factor {setup.factor:.6g} >= 1 (K={cert.K:.6g}, L={setup.L:.6g}, "
            f"kappa={setup.kappa:.6g}, ell={rhs.ell}, rho={cert.rho:.6g})")
    c = np.zeros((red.size, red.q), complex) if c0 is None else \
        np.asarray(c0, dtype=complex).reshape(red.size, red.q).copy()
    ratios = []
    prev = None
    for it in range(1, max_iter + 1):
        c_new = setup.apply(c)
        upd = float(np.max(np.abs(c_new - c)))
        if prev is not None and prev > 0:
            ratios.append(upd / prev)
        prev = upd
        c = c_new
        if upd <= tol:
            break
    else:
        raise MaxIterExceeded(f"no convergence in {max_iter} iterations (update {upd:.3g})")
    w = frozen_terms(rhs, c)
    lifted = red.h + np.einsum("kij,kj->ki", red.gain, w)
    lo, hi = setup.lo, setup.hi
    r = c[lo + 1:hi + 1] - np.einsum("kij,kj->ki", red.H[lo:hi], c[lo:hi]) - lifted[lo:hi]
    res = float(np.max(np.linalg.norm(r, axis=1)))
    grid = GridSolution(c[lo:hi + 1].copy(), red.n_min + lo, setup.N, setup.tail, res,
                        setup.h_sup, frozen=w[lo:hi + 1].copy())
    report = ContractionReport(setup.factor, it, upd, setup.L, setup.kappa, rhs.ell,
                               tuple(ratios), res)
    return grid, report


def nonlinear_solution(sys, rhs, grid, tol=1e-10):
    """Continuous solution assembled from a fixed point grid."""
    return PiecewiseSolution(sys.with_forcing(rhs.forcing), grid, tol, frozen=grid.frozen)


def assemble_nonlinear_solution(grid, sys, rhs, t, tol=1e-10):
    """``y(t) = Z_k(t) c(k) + int_{t_k}^t X(t, u) F(u, c_hat(k)) du``."""
    return nonlinear_solution(sys, rhs, grid, tol)(t)
