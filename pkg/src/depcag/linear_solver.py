"""Bounded solution of the linear DEPCAG from the truncated Green series."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import interval_states
from .errors import OutOfWindow, ResidualExceeded, WindowTooSmall
from .mesh import interval_indices
from .reduction import GreenKernel

EVAL_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class GridSolution:
    """``c(n)`` for ``n_lo <= n <= n_hi`` with truncation radius ``N``."""

    c: np.ndarray
    n_lo: int
    N: int
    tail_bound: float
    residual: float
    h_sup: float = 0.0
    frozen: np.ndarray | None = None

    @property
    def n_hi(self):
        return self.n_lo + len(self.c) - 1

    @property
    def indices(self):
        return np.arange(self.n_lo, self.n_hi + 1)

    def at(self, n):
        i = n - self.n_lo
        if not 0 <= i < len(self.c):
            raise OutOfWindow(f"c({n}) outside interior [{self.n_lo}, {self.n_hi}]")
        return self.c[i]

    def sup_norm(self):
        return float(np.max(np.linalg.norm(self.c, axis=1), initial=0.0))


def truncation_radius(K, rho, h_sup, resid_tol):
    """Smallest ``N >= 1`` with ``K rho^N |h| (1+rho)/(1-rho) <= resid_tol``."""
    if h_sup == 0.0:
        return 1
    need = math.log(resid_tol * (1 - rho) / (K * h_sup * (1 + rho))) / math.log(rho)
    N = max(1, math.ceil(need - 1e-12))
    while K * rho ** N * h_sup * (1 + rho) / (1 - rho) > resid_tol:
        N += 1
    return N


def tail_bound(K, rho, h_sup, N):
    return K * rho ** N * h_sup * (1 + rho) / (1 - rho)


def green_sum(kernel: GreenKernel, h, N):
    """``c(n) = sum_{|k-n| <= N} G(n, k) h(k)`` for window positions ``N .. W-1-N``."""
    W = kernel.red.size
    if W < 2 * N + 1:
        raise WindowTooSmall(f"window of {W} indices cannot hold truncation radius {N}")
    m = W - 2 * N
    c = np.zeros((m, kernel.red.q), complex)
    for d in range(1, N + 1):
        c += np.einsum("kij,kj->ki", kernel.stable_band(d)[N - d:W - N - d], h[N - d:W - N - d])
    for d in range(0, N + 1):
        c += np.einsum("kij,kj->ki", kernel.unstable_band(d)[N:W - N], h[N + d:W - N + d])
    return c


def recursion_residual(red, c, n_lo, h=None):
    """``max |c(n+1) - H(n) c(n) - h(n)|`` over consecutive interior pairs."""
    if len(c) < 2:
        return 0.0
    i0 = n_lo - red.n_min
    H = red.H[i0:i0 + len(c) - 1]
    h = red.h if h is None else h
    hh = h[i0:i0 + len(c) - 1]
    r = c[1:] - np.einsum("kij,kj->ki", H, c[:-1]) - hh
    return float(np.max(np.linalg.norm(r, axis=1)))


def bounded_sequence(red, cert, resid_tol=1e-8, radius=None, kernel=None):
    """Truncated Green series on the interior window.

    Parameters
    ----------
    red : ReducedSystem
    cert : DichotomyCertificate
    resid_tol : float
        Target for both the geometric tail bound and the recursion residual.
    radius : int, optional
        Force a truncation radius instead of the minimal one.

    Raises
    ------
    WindowTooSmall
        When the window cannot hold ``2N + 1`` indices.
    ResidualExceeded
        When the recursion residual exceeds ``resid_tol``.
    """
    kernel = GreenKernel(red, cert.Pi) if kernel is None else kernel
    h_sup = float(np.max(np.linalg.norm(red.h, axis=1), initial=0.0))
    N = truncation_radius(cert.K, cert.rho, h_sup, resid_tol) if radius is None else int(radius)
    c = green_sum(kernel, red.h, N)
    n_lo = red.n_min + N
    res = recursion_residual(red, c, n_lo)
    tail = tail_bound(cert.K, cert.rho, h_sup, N)
    allowance = 64 * np.finfo(float).eps * (1.0 + h_sup + (np.abs(c).max() if c.size else 0.0))
    if res > max(resid_tol, tail) + allowance:
        raise ResidualExceeded(f"recursion residual {res:.3g} exceeds {resid_tol:.3g}")
    return GridSolution(c, n_lo, N, tail, res, h_sup)


class PiecewiseSolution:
    """Continuous solution ``y(t) = Z_k(t) c(k) + int_{t_k}^t X(t, u) (f(u) + w(k)) du``.

    ``w`` is an optional per-interval constant added to the forcing; it
    carries the frozen nonlinear terms.  ``y(t_n) = c(n)`` exactly.
    """

    def __init__(self, sys, grid: GridSolution, tol=EVAL_TOL, frozen=None):
        self.sys = sys
        self.grid = grid
        self.tol = tol
        frozen = grid.frozen if frozen is None else frozen
        self.frozen = None if frozen is None else np.asarray(frozen, dtype=complex)
        if self.frozen is not None and self.frozen.shape != grid.c.shape:
            raise ValueError("frozen forcing must match the grid shape")
        mesh = sys.mesh
        self.t_lo = float(mesh.t(grid.n_lo))
        self.t_hi = float(mesh.t(grid.n_hi + 1))

    @property
    def domain(self):
        return (self.t_lo, self.t_hi)

    def __call__(self, t):
        return self.evaluate_many([t])[0]

    def evaluate_many(self, times):
        times = np.asarray(times, dtype=float)
        if times.size and (times.min() < self.t_lo or times.max() > self.t_hi):
            raise OutOfWindow(f"times outside the solution domain [{self.t_lo}, {self.t_hi}]")
        q = self.sys.q
        out = np.empty((times.size, q), complex)
        if not times.size:
            return out
        mesh = self.sys.mesh
        last = np.minimum(times, np.nextafter(self.t_hi, -np.inf))
        ks = interval_indices(mesh, last)
        for k in np.unique(ks):
            sel = np.flatnonzero(ks == k)
            order = sel[np.argsort(times[sel])]
            ts = times[order]
            gain = self.frozen is not None
            st = interval_states(self.sys, int(k), ts, self.tol, forcing=self.sys.f, gain=gain,
                                 dense=True)
            y = st["Z"] @ self.grid.at(int(k)) + st["v"]
            if gain:
                y = y + st["Q"] @ self.frozen[int(k) - self.grid.n_lo]
            out[order] = y
        return out

    def sample_times(self, per_interval=16):
        mesh = self.sys.mesh
        pts = mesh.t(np.arange(self.grid.n_lo, self.grid.n_hi + 2))
        frac = np.arange(per_interval) / per_interval
        return (pts[:-1, None] + np.diff(pts)[:, None] * frac).ravel()


def continuous_solution(grid, sys, t, tol=EVAL_TOL):
    """``y(t)`` from the grid values; equals ``c(n)`` at ``t = t_n``."""
    return PiecewiseSolution(sys, grid, tol)(t)


@dataclass(frozen=True)
class NormBoundReport:
    c_sup: float
    c_bound: float
    y_sup: float
    y_bound: float
    f_sup: float
    h_sup: float

    @property
    def ok(self):
        return self.c_sup <= self.c_bound * (1 + 1e-12) and self.y_sup <= self.y_bound * (1 + 1e-12)


def norm_bound_check(solution: PiecewiseSolution, consts, cert, samples_per_interval=16):
    """Compare measured sup norms with ``2K|h|/(1-rho)`` and ``K_3 |f|``.

    ``|f|`` uses the computable surrogate of the forcing.
    """
    grid = solution.grid
    y = solution.evaluate_many(solution.sample_times(samples_per_interval))
    y_sup = float(np.max(np.linalg.norm(y, axis=1), initial=0.0))
    f_sup = solution.sys.f.sup_norm()
    return NormBoundReport(grid.sup_norm(), 2 * cert.K / (1 - cert.rho) * grid.h_sup,
                           y_sup, consts.K3 * f_sup, f_sup, grid.h_sup)


@dataclass(frozen=True)
class TranslationCheck:
    tau: float
    p: int
    epsilon: float
    sup_difference: float
    constant: float


def almost_periodicity_check(solution: PiecewiseSolution, translations, samples_per_interval=8):
    """Sampled ``sup |y(t + tau) - y(t)|`` for each translation, with ``C = sup / eps``.

    Only ``t`` with both ``t`` and ``t + tau`` inside the solution domain are used.
    """
    nu = float(np.mean(np.diff(solution.sys.mesh.points)))
    jobs = []
    for tr in translations:
        lo, hi = solution.t_lo, solution.t_hi - tr.tau
        if hi > lo:
            jobs.append((tr, np.linspace(lo, hi, max(2, int(samples_per_interval * (hi - lo) / nu)))))
    if not jobs:
        return []
    # one evaluation pass for every shifted and unshifted sample
    allt = np.concatenate([np.concatenate([ts, ts + tr.tau]) for tr, ts in jobs])
    ys = solution.evaluate_many(allt)
    out, i = [], 0
    for tr, ts in jobs:
        m = ts.size
        d = ys[i + m:i + 2 * m] - ys[i:i + m]
        i += 2 * m
        sup = float(np.max(np.linalg.norm(d, axis=1)))
        C = sup / tr.epsilon if tr.epsilon > 0 else math.inf
        out.append(TranslationCheck(tr.tau, tr.p, tr.epsilon, sup, C))
    return out
