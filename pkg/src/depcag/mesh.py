"""Time meshes ``t_n``, the deviation maps and epsilon-translation search.

Meshes are uniform with a quasi-periodic jitter,
``t_n = n * nu + a * sin(2 * pi * beta * n)``, stored on a finite index
window ``n_min..n_max``.  Interval ``J_n = [t_n, t_{n+1})`` exists for every
``n`` in the window, so ``n_max + 2 - n_min`` points are kept.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonMonotoneMesh, NoTranslationFound, OutOfWindow


@dataclass(frozen=True)
class MeshSpec:
    base_spacing: float
    jitter_amplitude: float = 0.0
    jitter_frequency: float = 0.0
    window: tuple = (-50, 50)

    def __post_init__(self):
        if not self.base_spacing > 0:
            raise ValueError("base_spacing must be positive")
        if self.jitter_amplitude < 0:
            raise ValueError("jitter_amplitude must be non-negative")
        n_min, n_max = (int(w) for w in self.window)
        if not n_min < 0 < n_max:
            raise ValueError(f"window {self.window} must satisfy n_min < 0 < n_max")
        object.__setattr__(self, "window", (n_min, n_max))


@dataclass(frozen=True, eq=False)
class TimeMesh:
    """Mesh points ``t_{n_min} .. t_{n_max+1}`` with the largest gap ``theta``."""

    points: np.ndarray
    n_min: int
    theta: float
    spec: MeshSpec | None = None

    @property
    def n_max(self):
        return self.n_min + len(self.points) - 2

    @property
    def window(self):
        return (self.n_min, self.n_max)

    @property
    def indices(self):
        return np.arange(self.n_min, self.n_max + 1)

    def t(self, n):
        """Mesh point ``t_n`` for ``n_min <= n <= n_max + 1``."""
        i = np.asarray(n) - self.n_min
        if np.any(i < 0) or np.any(i >= len(self.points)):
            raise OutOfWindow(f"mesh index {n} outside [{self.n_min}, {self.n_max + 1}]")
        return self.points[i]

    def gap(self, n):
        return self.t(n + 1) - self.t(n)

    def index(self, tau):
        return interval_index(self, tau)

    def gamma(self, p, t):
        return gamma(self, p, t)

    def __repr__(self):
        return f"TimeMesh(window={self.window}, theta={self.theta:.6g})"


def build_mesh(spec: MeshSpec) -> TimeMesh:
    """Generate the jittered mesh and verify it is strictly increasing.

    Raises
    ------
    NonMonotoneMesh
        If some gap ``t_{n+1} - t_n`` is not positive.  This can only happen
        when ``jitter_amplitude >= base_spacing / 2``.
    """
    n_min, n_max = spec.window
    n = np.arange(n_min, n_max + 2)
    points = n * spec.base_spacing
    if spec.jitter_amplitude:
        points = points + spec.jitter_amplitude * np.sin(2 * np.pi * spec.jitter_frequency * n)
    gaps = np.diff(points)
    bad = np.flatnonzero(gaps <= 0)
    if bad.size:
        k = int(n[bad[0]])
        raise NonMonotoneMesh(
            f"t_{k + 1} - t_{k} = {gaps[bad[0]]:.3g} <= 0 "
            f"(jitter_amplitude={spec.jitter_amplitude} vs base_spacing/2={spec.base_spacing / 2})")
    return TimeMesh(points=points, n_min=n_min, theta=float(gaps.max()), spec=spec)


def uniform_mesh(nu, window) -> TimeMesh:
    return build_mesh(MeshSpec(nu, 0.0, 0.0, window))


def interval_index(mesh: TimeMesh, tau) -> int:
    """Return ``n`` with ``t_n <= tau < t_{n+1}``."""
    pts = mesh.points
    if not pts[0] <= tau < pts[-1]:
        raise OutOfWindow(f"time {tau} outside [{pts[0]}, {pts[-1]})")
    return int(np.searchsorted(pts, tau, side="right")) - 1 + mesh.n_min


def interval_indices(mesh: TimeMesh, taus) -> np.ndarray:
    """Vectorised :func:`interval_index`."""
    taus = np.asarray(taus, dtype=float)
    pts = mesh.points
    if taus.size and (taus.min() < pts[0] or taus.max() >= pts[-1]):
        raise OutOfWindow(f"times outside [{pts[0]}, {pts[-1]})")
    return np.searchsorted(pts, taus, side="right") - 1 + mesh.n_min


def gamma(mesh: TimeMesh, p: int, t) -> float:
    """Deviation map: ``t_{k(t) - p}`` where ``t`` lies in ``J_{k(t)}``."""
    if p < 0:
        raise ValueError("lag p must be non-negative")
    k = interval_index(mesh, t)
    if k - p < mesh.n_min:
        raise OutOfWindow(f"gamma^{p}({t}) needs t_{k - p}, before the window start")
    return float(mesh.t(k - p))


@dataclass(frozen=True)
class TranslationReport:
    epsilon: float
    tau: float
    p: int
    residual_mesh: float
    residual_functions: float


def find_translations(mesh, funcs, eps, search_grid, samples_per_interval=64):
    """Scan for ``(tau, p)`` that are simultaneous eps-translations.

    For every shift ``p`` the admissible ``tau`` must satisfy
    ``max_n |t_{n+p} - t_n - tau| <= eps``; candidates are taken on the grid
    ``p * nu + j * search_grid`` and tried in order of increasing mesh
    residual.  The first candidate for which every function in ``funcs`` also
    moves by at most ``eps`` (sampled ``samples_per_interval`` times per mesh
    interval) is reported for that ``p``.

    Raises
    ------
    NoTranslationFound
        When no candidate passes; usually the window is too short for ``eps``.
    """
    if eps < 0:
        raise ValueError("eps must be non-negative")
    if not search_grid > 0:
        raise ValueError("search_grid must be positive")
    pts = mesh.points
    nu = mesh.spec.base_spacing if mesh.spec is not None else float(np.mean(np.diff(pts)))
    n_int = len(pts) - 1
    reports = []
    for p in range(1, n_int):
        d = pts[p:] - pts[:-p]
        lo, hi = d.max() - eps, d.min() + eps
        if lo > hi:
            continue
        j_lo = int(np.ceil((lo - p * nu) / search_grid - 1e-12))
        j_hi = int(np.floor((hi - p * nu) / search_grid + 1e-12))
        taus = p * nu + np.arange(j_lo, j_hi + 1) * search_grid
        r_all = np.array([np.max(np.abs(d - tau)) for tau in taus])
        for tau, r_mesh in sorted(zip(taus, r_all), key=lambda x: x[1]):
            r_mesh = float(r_mesh)
            if r_mesh > eps:
                break
            t_end = pts[-1] - tau
            if t_end <= pts[0]:
                continue
            m = max(2, int(round(samples_per_interval * (t_end - pts[0]) / nu)))
            times = np.linspace(pts[0], t_end, m)
            r_fun = max((g.translation_residual(tau, times) for g in funcs), default=0.0)
            if r_fun <= eps:
                reports.append(TranslationReport(eps, float(tau), p, r_mesh, r_fun))
                break
    if not reports:
        raise NoTranslationFound(
            f"no (tau, p) with residuals <= {eps} on window {mesh.window}")
    return reports
