"""Reduced difference system, exponential dichotomy certificates, Green matrix.

The reduced system is ``c(n+1) = H(n) c(n) + h(n)`` on the mesh window.
The discrete fundamental matrix is normalised by ``Phi(0) = I`` so a
certificate's projection ``Pi`` lives at index 0.

Dichotomy evidence is measured with the exponent counted from the diagonal
of the Green matrix: ``|G(n, k)| <= K rho^(n-k-1)`` for ``n > k`` and
``|G(n, k)| <= K rho^(k+1-n)`` for ``n <= k``.  With this convention a
diagonal constant system has ``K = 1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .dynamics import SINGULARITY_TOL, inverse, sweep_window
from .errors import (CertificateViolated, EigenvalueOnUnitCircle,
                     NonDiagonalizablePeripheral, OutOfWindow, SingularFactor)

RHO_INFLATION = 1.0 + 1e-6
UNIT_CIRCLE_MARGIN = 1e-6


@dataclass(frozen=True, eq=False)
class ReducedSystem:
    """Sequences ``H(n)``, ``h(n)`` for ``n_min <= n <= n_max``.

    ``gain[n] = int_{t_n}^{t_{n+1}} X(t_{n+1}, u) du`` is present when the
    system was reduced for a nonlinear right-hand side.
    """

    H: np.ndarray
    h: np.ndarray
    n_min: int
    gain: np.ndarray | None = None
    margins: np.ndarray | None = None

    def __post_init__(self):
        H = np.asarray(self.H, dtype=complex)
        h = np.asarray(self.h, dtype=complex)
        if H.ndim != 3 or H.shape[1] != H.shape[2]:
            raise ValueError("H must have shape (W, q, q)")
        if h.shape != H.shape[:2]:
            raise ValueError(f"h has shape {h.shape}, expected {H.shape[:2]}")
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "h", h)

    @property
    def q(self):
        return self.H.shape[1]

    @property
    def size(self):
        return self.H.shape[0]

    @property
    def n_max(self):
        return self.n_min + self.size - 1

    @property
    def window(self):
        return (self.n_min, self.n_max)

    def H_at(self, n):
        return self.H[self._i(n)]

    def h_at(self, n):
        return self.h[self._i(n)]

    def _i(self, n):
        i = n - self.n_min
        if not 0 <= i < self.size:
            raise OutOfWindow(f"index {n} outside reduced window {self.window}")
        return i

    @classmethod
    def constant(cls, H0, window, h0=None):
        n_min, n_max = window
        W = n_max - n_min + 1
        H0 = np.asarray(H0, dtype=complex)
        H0 = H0.reshape(1, 1) if H0.ndim == 0 else H0
        q = H0.shape[0]
        h = np.zeros((W, q)) if h0 is None else np.broadcast_to(h0, (W, q))
        return cls(np.broadcast_to(H0, (W, q, q)).copy(), np.array(h, dtype=complex), n_min)


def reduce_system(sys, tol=1e-10, samples=64, forcing=None, gain=False,
                  singularity_tol=SINGULARITY_TOL):
    """Reduce a linear DEPCAG to its difference system in a single sweep."""
    forcing = sys.f if forcing is None else forcing
    cache, h, Q = sweep_window(sys, tol, samples, forcing=forcing, gain=gain,
                               singularity_tol=singularity_tol)
    return ReducedSystem(cache.H, h, sys.mesh.n_min, gain=Q, margins=cache.margins)


def reduced_forcing(sys, tol=1e-10):
    """``h(n) = int_{t_n}^{t_{n+1}} X(t_{n+1}, u) f(u) du`` over the window."""
    return sweep_window(sys, tol, samples=1, forcing=sys.f)[1]


# --- certificates ------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DichotomyCertificate:
    Pi: np.ndarray
    K: float
    rho: float
    window: tuple
    evidence_stable: float = 0.0
    evidence_unstable: float = 0.0

    def __post_init__(self):
        Pi = np.atleast_2d(np.asarray(self.Pi, dtype=complex))
        if np.max(np.abs(Pi @ Pi - Pi), initial=0.0) > 1e-12 * max(1.0, np.abs(Pi).max()):
            raise ValueError("Pi is not a projection")
        if not 0 < self.rho < 1:
            raise ValueError(f"rho={self.rho} must lie in (0, 1)")
        if self.K < 1:
            raise ValueError(f"K={self.K} must be >= 1")
        object.__setattr__(self, "Pi", Pi)

    @property
    def rank(self):
        return int(round(np.trace(self.Pi).real))

    @property
    def is_stable(self):
        """True when ``Pi = I`` (exponential stability)."""
        return np.allclose(self.Pi, np.eye(self.Pi.shape[0]), atol=1e-9)

    def to_text(self):
        lines = ["# dichotomy certificate", f"dimension = {self.Pi.shape[0]}"]
        for i, row in enumerate(self.Pi):
            vals = " ".join(f"({z.real:.17g},{z.imag:.17g})" for z in row)
            lines.append(f"Pi[{i}] = {vals}")
        lines += [f"K = {self.K:.17g}", f"rho = {self.rho:.17g}",
                  f"window = {self.window[0]} {self.window[1]}",
                  f"evidence_stable = {self.evidence_stable:.17g}",
                  f"evidence_unstable = {self.evidence_unstable:.17g}"]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        kv = {}
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, val = line.partition("=")
            kv[key.strip()] = val.strip()
        q = int(kv["dimension"])
        rows = []
        for i in range(q):
            entries = kv[f"Pi[{i}]"].split()
            rows.append([complex(*map(float, e.strip("()").split(","))) for e in entries])
        w = tuple(int(x) for x in kv["window"].split())
        return cls(np.array(rows), float(kv["K"]), float(kv["rho"]), w,
                   float(kv["evidence_stable"]), float(kv["evidence_unstable"]))


def _orth_range(P, r):
    u, _, _ = np.linalg.svd(P)
    return u[:, :r]


def _qr(M):
    return np.linalg.qr(M)[0]


class GreenKernel:
    """Green matrix of ``phi(n+1) = H(n) phi(n)`` for a given projection at index 0.

    The projection at index ``m`` is ``Phi(m) Pi Phi(m)^{-1}``.  It is formed
    from the stable subspace swept backward from the right edge and the
    unstable subspace swept forward from the left edge; both sweeps are
    contracting, unlike forward conjugation of ``Pi``.  Green-matrix bands are
    then generated with re-projection at every step.
    """

    def __init__(self, red: ReducedSystem, Pi):
        self.red = red
        Pi = np.atleast_2d(np.asarray(Pi, dtype=complex))
        self.Pi = Pi
        H = red.H
        W, q = red.size, red.q
        self.Hinv = np.stack([inverse(H[i], f"H({red.n_min + i})") for i in range(W)])
        r = int(round(np.trace(Pi).real))
        eye = np.eye(q, dtype=complex)
        P = np.empty((W + 1, q, q), complex)
        if r == q:
            P[:] = eye
        elif r == 0:
            P[:] = 0
        else:
            S = [None] * (W + 1)
            U = [None] * (W + 1)
            S[W] = _orth_range(Pi, r)
            for m in range(W - 1, -1, -1):
                S[m] = _qr(self.Hinv[m] @ S[m + 1])
            U[0] = _orth_range(eye - Pi, q - r)
            for m in range(W):
                U[m + 1] = _qr(H[m] @ U[m])
            for m in range(W + 1):
                V = np.hstack([S[m], U[m]])
                P[m] = S[m] @ np.linalg.inv(V)[:r]
        self.P = P
        self._stable = [None, P[1:].copy()]
        self._unstable = [-(eye - P[:W]) @ self.Hinv @ (eye - P[1:])]

    # projection diagnostics

    @property
    def anchor_error(self):
        return float(np.linalg.norm(self.P[-self.red.n_min] - self.Pi, 2))

    @property
    def invariance_error(self):
        H, P = self.red.H, self.P
        return float(np.max(np.linalg.norm(P[1:] @ H - H @ P[:-1], 2, axis=(1, 2))))

    @property
    def idempotency_error(self):
        P = self.P
        return float(np.max(np.linalg.norm(P @ P - P, 2, axis=(1, 2))))

    # bands

    def stable_band(self, d):
        """``G(k+d, k)`` for ``k`` index ``0 .. W-d`` (``d >= 1``)."""
        if d < 1:
            raise ValueError("stable offsets start at 1")
        W = self.red.size
        H, P = self.red.H, self.P
        while len(self._stable) <= d:
            e = len(self._stable) - 1
            prev = self._stable[e]
            self._stable.append(P[e + 1:W + 1] @ H[e:W] @ prev[:W - e])
        return self._stable[d]

    def unstable_band(self, d):
        """``G(k-d, k)`` for ``k`` index ``d .. W-1`` (``d >= 0``)."""
        W, q = self.red.size, self.red.q
        eye = np.eye(q)
        while len(self._unstable) <= d:
            e = len(self._unstable) - 1
            prev = self._unstable[e]
            self._unstable.append((eye - self.P[:W - e - 1]) @ self.Hinv[:W - e - 1] @ prev[1:])
        return self._unstable[d]

    def matrix(self, n, k):
        """``G(n, k)`` for ``n_min <= n <= n_max + 1`` and ``n_min <= k <= n_max``."""
        W = self.red.size
        i, j = n - self.red.n_min, k - self.red.n_min
        if not (0 <= i <= W and 0 <= j < W):
            raise OutOfWindow(f"G({n}, {k}) outside window {self.red.window}")
        if i > j:
            return self.stable_band(i - j)[j]
        if i == W:
            raise OutOfWindow(f"G({n}, {k}) outside window {self.red.window}")
        return self.unstable_band(j - i)[i]

    def evidence(self, rho, max_offset=None):
        """``(max_{n>k} |G| rho^-(n-k-1), max_{n<=k} |G| rho^-(k+1-n))`` on the window."""
        W = self.red.size
        D = W if max_offset is None else min(max_offset, W)
        log_rho = math.log(rho)
        best_s = best_u = -np.inf
        with np.errstate(divide="ignore"):
            for d in range(1, D + 1):
                band = self.stable_band(d)
                if band.shape[0]:
                    a = np.log(np.linalg.norm(band, 2, axis=(1, 2)).max())
                    best_s = max(best_s, a - (d - 1) * log_rho)
            for d in range(0, D):
                band = self.unstable_band(d)
                if band.shape[0]:
                    a = np.log(np.linalg.norm(band, 2, axis=(1, 2)).max())
                    best_u = max(best_u, a - (d + 1) * log_rho)
        return float(np.exp(best_s)), float(np.exp(best_u))

    def decay_rate(self, max_offset=60):
        """Crude per-step rate of the slower branch, from band norms relative to the first band."""
        W = self.red.size
        D = max(2, min(max_offset, W // 2))
        rates = [0.0]
        with np.errstate(divide="ignore"):
            a1 = np.linalg.norm(self.stable_band(1), 2, axis=(1, 2)).max()
            b0 = np.linalg.norm(self.unstable_band(0), 2, axis=(1, 2)).max()
            for d in range(D // 2, D + 1):
                if a1 > 0:
                    a = np.linalg.norm(self.stable_band(d), 2, axis=(1, 2)).max()
                    rates.append((a / a1) ** (1.0 / (d - 1)))
                if b0 > 0:
                    b = np.linalg.norm(self.unstable_band(d), 2, axis=(1, 2)).max()
                    rates.append((b / b0) ** (1.0 / d))
        return max(rates)


def green_matrix(red, cert, n, k):
    """Green matrix ``G(n, k)``: ``Phi(n) Pi Phi(k+1)^{-1}`` for ``n > k``,
    ``-Phi(n) (I - Pi) Phi(k+1)^{-1}`` for ``n <= k``."""
    return GreenKernel(red, cert.Pi).matrix(n, k)


def spectral_projection(M, unit_circle_margin=UNIT_CIRCLE_MARGIN):
    """Projection onto the invariant subspace of ``M`` for eigenvalues inside the unit circle.

    Uses an ordered Schur form, so defective matrices are handled.
    Returns ``(Pi, eigenvalues)``.
    """
    M = np.atleast_2d(np.asarray(M, dtype=complex))
    q = M.shape[0]
    lam = np.linalg.eigvals(M)
    if np.min(np.abs(lam)) < 1e-14 * max(1.0, np.abs(M).max()):
        raise SingularFactor("matrix is singular")
    close = np.abs(np.abs(lam) - 1.0) <= unit_circle_margin
    if np.any(close):
        raise EigenvalueOnUnitCircle(f"eigenvalue(s) {lam[close]} within "
                                     f"{unit_circle_margin} of the unit circle")
    T, Q, sdim = scipy.linalg.schur(M, output="complex", sort=lambda z: abs(z) < 1.0)
    r = int(sdim)
    if r == 0:
        return np.zeros((q, q), complex), lam
    if r == q:
        return np.eye(q, dtype=complex), lam
    T11, T12, T22 = T[:r, :r], T[:r, r:], T[r:, r:]
    Y = scipy.linalg.solve_sylvester(T11, -T22, -T12)
    block = np.zeros((q, q), complex)
    block[:r, :r] = np.eye(r)
    block[:r, r:] = -Y
    return Q @ block @ Q.conj().T, lam


def _peripheral_rate(M, lam):
    """Dichotomy rate from the spectrum and a defect check at the gap."""
    mod = np.abs(lam)
    stable, unstable = mod[mod < 1], mod[mod > 1]
    rho = max(stable.max() if stable.size else 0.0,
              1.0 / unstable.min() if unstable.size else 0.0)
    q = M.shape[0]
    scale = max(1.0, np.abs(M).max())
    for z in lam:
        a = abs(z)
        if not (abs(a - rho) <= 1e-9 * max(rho, 1e-300) or
                (a > 1 and abs(1.0 / a - rho) <= 1e-9 * max(rho, 1e-300))):
            continue
        alg = int(np.sum(np.abs(lam - z) <= 1e-6 * max(1.0, a)))
        geo = q - np.linalg.matrix_rank(M - z * np.eye(q), tol=1e-8 * scale)
        if geo < alg:
            raise NonDiagonalizablePeripheral(
                f"eigenvalue {z} at the spectral gap has algebraic multiplicity {alg} "
                f"but geometric multiplicity {geo}")
    return rho


def _measure(red, Pi, rho):
    kernel = GreenKernel(red, Pi)
    es, eu = kernel.evidence(rho)
    return max(1.0, es, eu), es, eu


def dichotomy_from_constant(H0, window=(-50, 50), unit_circle_margin=UNIT_CIRCLE_MARGIN):
    """Certificate for a constant monodromy factor ``H0``.

    ``Pi`` is the spectral projection for the eigenvalues inside the unit
    circle, ``rho`` the slower of the two spectral rates inflated by
    ``1 + 1e-6``, and ``K`` the measured evidence over ``window``.
    """
    H0 = np.atleast_2d(np.asarray(H0, dtype=complex))
    Pi, lam = spectral_projection(H0, unit_circle_margin)
    rho = _peripheral_rate(H0, lam) * RHO_INFLATION
    red = ReducedSystem.constant(H0, window)
    K, es, eu = _measure(red, Pi, rho)
    return DichotomyCertificate(Pi, K, rho, tuple(window), es, eu)


def dichotomy_from_periodic(red, period, unit_circle_margin=UNIT_CIRCLE_MARGIN):
    """Certificate for ``H`` periodic in ``n``, from the monodromy over one period at index 0."""
    if period < 1 or period > red.n_max + 1:
        raise ValueError(f"period {period} does not fit the window {red.window}")
    M = np.eye(red.q, dtype=complex)
    for n in range(period):
        M = red.H_at(n) @ M
    Pi, lam = spectral_projection(M, unit_circle_margin)
    rho = _peripheral_rate(M, lam) ** (1.0 / period) * RHO_INFLATION
    K, es, eu = _measure(red, Pi, rho)
    return DichotomyCertificate(Pi, K, rho, red.window, es, eu)


def dichotomy_from_projection(red, Pi, rho=None):
    """Certificate for a user-supplied projection at index 0.

    When ``rho`` is omitted it is estimated from the decay of the Green
    matrix bands and inflated by ``1 + 1e-6``; ``K`` is always measured.
    """
    kernel = GreenKernel(red, Pi)
    if rho is None:
        rho = kernel.decay_rate() * RHO_INFLATION
        if not rho < 1:
            raise CertificateViolated(f"no decay measured along the supplied splitting "
                                      f"(rate {rho:.4g})")
    es, eu = kernel.evidence(rho)
    K = max(1.0, es, eu)
    return DichotomyCertificate(kernel.Pi, K, rho, red.window, es, eu)


def certify(red, method="constant", period=None, projection=None, rho=None):
    """Dispatch to one of the certificate constructions by name."""
    if method == "constant":
        H0 = red.H_at(0)
        dev = np.max(np.abs(red.H - H0))
        if dev > 1e-8 * (1.0 + np.abs(H0).max()):
            raise ValueError(f"H(n) is not constant on the window (deviation {dev:.3g})")
        Pi, lam = spectral_projection(H0)
        rho_c = _peripheral_rate(H0, lam) * RHO_INFLATION
        K, es, eu = _measure(red, Pi, rho_c)
        return DichotomyCertificate(Pi, K, rho_c, red.window, es, eu)
    if method == "periodic":
        return dichotomy_from_periodic(red, int(period))
    if method == "projection":
        return dichotomy_from_projection(red, np.asarray(projection, dtype=complex), rho)
    raise ValueError(f"unknown certificate method {method!r}")


@dataclass(frozen=True)
class DichotomyEvidence:
    max_stable: float
    max_unstable: float
    tightest_K: float
    anchor_error: float
    invariance_error: float
    idempotency_error: float
    verified: bool
    messages: list = field(default_factory=list)


def verify_dichotomy(red, cert, slack=0.01, anchor_tol=1e-6):
    """Evaluate the Green matrix on all window pairs against ``(K, rho)``.

    Raises
    ------
    CertificateViolated
        When the evidence exceeds ``K`` by more than ``slack`` or when the
        certificate's projection is not the invariant splitting at index 0.
    """
    kernel = GreenKernel(red, cert.Pi)
    es, eu = kernel.evidence(cert.rho)
    tight = max(es, eu)
    anchor = kernel.anchor_error
    msgs = []
    if tight > cert.K * (1 + slack):
        msgs.append(f"evidence {tight:.6g} exceeds K={cert.K:.6g} "
                    f"(stable {es:.6g}, unstable {eu:.6g})")
    if anchor > anchor_tol * max(1.0, np.abs(cert.Pi).max()):
        msgs.append(f"Pi differs from the propagated splitting by {anchor:.3g}")
    report = DichotomyEvidence(es, eu, tight, anchor, kernel.invariance_error,
                               kernel.idempotency_error, not msgs, msgs)
    if msgs:
        raise CertificateViolated("; ".join(msgs))
    return report


# --- bound constants -----------------------------------------------------------

@dataclass(frozen=True)
class BoundConstants:
    K0: float
    K3: float
    K4: float
    theta: float


def bound_constants(sys, cert) -> BoundConstants:
    """Constants of the a priori bounds, from the sup-norm surrogates of ``A`` and ``B``."""
    theta = sys.mesh.theta
    a, b = sys.A.sup_norm(), sys.B.sup_norm()
    sq = math.sqrt(sys.q)
    K, rho = cert.K, cert.rho
    K0 = math.exp(a * theta)
    K3 = (sq * K0 * (1 + b * theta) * 2 * K / (1 - rho) + 1) * sq * K0 * theta
    K4 = K * sq * K0 ** 2 * (1 + sq * K0 * b * theta) ** 2
    return BoundConstants(K0, K3, K4, theta)
