"""Search for a continuous-time dichotomy of the homogeneous DEPCAG.

For a candidate projection ``P`` the continuous bound asks for ``M`` with

    |Z(t, t_0) P Z(s, t_0)^{-1}|       <= M exp(-alpha (t - s)),  t >= s,
    |Z(t, t_0) (I - P) Z(s, t_0)^{-1}| <= M exp(-alpha (s - t)),  s >= t.

The smallest admissible ``M`` is measured on sampled times in ``[-T, T]``
and ``[-2T, 2T]``; a candidate is rejected when it grows by at least the
given factor.  Rank-one pieces ``r k^T`` factor as
``|Z(t) r| |k^T Z(s)^{-1}|`` so their supremum over pairs is a running
maximum.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import interval_states
from .mesh import interval_indices


def _sampled_cauchy(sys, H, T, per_interval, tol):
    """Times in ``[-T, T]`` and ``Z(t, t_0)`` with ``t_0`` the mesh point of index 0."""
    mesh = sys.mesh
    q = sys.q
    lo = int(interval_indices(mesh, [-T])[0])
    hi = int(interval_indices(mesh, [np.nextafter(T, -np.inf)])[0])
    Phi = {0: np.eye(q, dtype=complex)}
    for k in range(0, hi):
        Phi[k + 1] = H[k - mesh.n_min] @ Phi[k]
    for k in range(-1, lo - 1, -1):
        Phi[k] = np.linalg.solve(H[k - mesh.n_min], Phi[k + 1])
    times, mats = [], []
    for k in range(lo, hi + 1):
        ts = np.linspace(mesh.t(k), mesh.t(k + 1), per_interval + 1)[:-1]
        ts = ts[(ts >= -T) & (ts <= T)]
        if not ts.size:
            continue
        Z = interval_states(sys, k, ts, tol)["Z"]
        times.append(ts)
        mats.append(Z @ Phi[k])
    return np.concatenate(times), np.concatenate(mats)


def _rank_one_sup(times, Y, Yinv, r, k, alpha, forward):
    """``sup |Y(t) r| |k^T Y(s)^{-1}| exp(-+alpha (t - s))`` over ordered pairs."""
    a = np.linalg.norm(Y @ r, axis=1)
    b = np.linalg.norm(k.conj() @ Yinv, axis=1)
    if forward:   # t >= s
        left = a * np.exp(alpha * times)
        right = b * np.exp(-alpha * times)
        return float(np.max(left * np.maximum.accumulate(right)))
    left = a * np.exp(-alpha * times)
    right = b * np.exp(alpha * times)
    return float(np.max(left * np.maximum.accumulate(right[::-1])[::-1]))


def _full_sup(times, Y, Yinv, alpha, forward):
    """``sup |Y(t) Y(s)^{-1}| exp(+-alpha (t - s))`` over ordered pairs, by direct loop."""
    best = 0.0
    for i, t in enumerate(times):
        sel = slice(0, i + 1) if forward else slice(i, None)
        prods = Y[i] @ Yinv[sel]
        n = np.linalg.norm(prods, 2, axis=(1, 2)) * np.exp(alpha * np.abs(t - times[sel]))
        best = max(best, float(n.max()))
    return best


def _direction(angle):
    v = np.array([np.cos(angle), np.sin(angle)])
    v[np.abs(v) < 1e-15] = 0.0   # grid angles that are multiples of pi/2 are exact axes
    return v


def rank_one_projection(range_angle, kernel_angle):
    """2x2 projection with range spanned by angle ``range_angle`` and kernel by ``kernel_angle``."""
    r = _direction(range_angle)
    kdir = _direction(kernel_angle)
    kperp = np.array([-kdir[1], kdir[0]])
    return np.outer(r, kperp) / (kperp @ r)


def required_constant(times, Y, Yinv, P, alpha):
    """Smallest ``M`` making both branches hold on the sampled pairs."""
    q = P.shape[0]
    eye = np.eye(q)
    out = 0.0
    for proj, forward in ((P, True), (eye - P, False)):
        u, s, vh = np.linalg.svd(proj)
        r = int(np.sum(s > 1e-12 * max(1.0, s.max(initial=0.0))))
        if r == 0:
            continue
        if r == 1:
            out = max(out, _rank_one_sup(times, Y, Yinv, u[:, 0] * s[0], vh[0].conj(),
                                         alpha, forward))
        else:
            Yp = Y @ proj
            out = max(out, _full_sup(times, Yp, Yinv, alpha, forward))
    return out


@dataclass(frozen=True)
class CandidateResult:
    label: str
    rank: int
    M_short: float
    M_long: float

    @property
    def growth(self):
        return self.M_long / self.M_short if self.M_short > 0 else np.inf


@dataclass(frozen=True)
class FalsifierReport:
    alpha: float
    T: float
    growth_factor: float
    candidates: tuple

    @property
    def rejected(self):
        return tuple(c for c in self.candidates if c.growth >= self.growth_factor)

    @property
    def survivors(self):
        return tuple(c for c in self.candidates if c.growth < self.growth_factor)

    @property
    def violated(self):
        """True when no candidate admits a continuous bound on the sampled windows."""
        return not self.survivors

    def to_text(self):
        lines = [f"# continuous dichotomy search alpha={self.alpha} T={self.T} "
                 f"growth threshold={self.growth_factor}",
                 "label,rank,M_T,M_2T,growth,rejected"]
        for c in self.candidates:
            lines.append(f"{c.label},{c.rank},{c.M_short:.6g},{c.M_long:.6g},{c.growth:.6g},"
                         f"{int(c.growth >= self.growth_factor)}")
        lines.append(f"# violated for every candidate: {self.violated}")
        return "\n".join(lines) + "\n"


def candidate_projections(q, angles=8, extra=()):
    """Ranks ``0`` and ``q`` plus, for ``q = 2``, rank-one projections on an angle grid."""
    cands = [("rank0", np.zeros((q, q))), (f"rank{q}", np.eye(q))]
    if q == 2:
        grid = np.arange(angles) * np.pi / angles
        for i, a in enumerate(grid):
            for j, b in enumerate(grid):
                if i != j:
                    cands.append((f"range{i}/{angles}pi_kernel{j}/{angles}pi",
                                  rank_one_projection(a, b)))
    for label, P in extra:
        cands.append((label, np.asarray(P, dtype=complex)))
    return cands


def falsify_continuous_dichotomy(sys, H, cert=None, T=20.0, alpha=0.05, angles=8,
                                 per_interval=8, growth_factor=2.0, tol=1e-10):
    """Measure the required ``M`` on ``[-T, T]`` and ``[-2T, 2T]`` for each candidate.

    Parameters
    ----------
    sys : LinearDEPCAG
    H : ndarray
        Monodromy factors over the mesh window (``ReducedSystem.H``).
    cert : DichotomyCertificate, optional
        Its projection is added to the candidates.
    """
    extra = [] if cert is None else [("certificate", cert.Pi)]
    times, Y = _sampled_cauchy(sys, H, 2 * T, per_interval, tol)
    Yinv = np.linalg.inv(Y)
    short = np.abs(times) <= T
    results = []
    for label, P in candidate_projections(sys.q, angles, extra):
        rank = int(round(np.trace(P).real))
        m_short = required_constant(times[short], Y[short], Yinv[short], P, alpha)
        m_long = required_constant(times, Y, Yinv, P, alpha)
        results.append(CandidateResult(label, rank, m_short, m_long))
    return FalsifierReport(alpha, T, growth_factor, tuple(results))
