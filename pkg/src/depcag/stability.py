"""Forward solutions from perturbed initial data and their exponential decay.

Perturbations are propagated in increment form,

    e(n+1) = H(n) e(n) + Q(n) sum_j C_j [sigma(c(n-p_j) + e(n-p_j)) - sigma(c(n-p_j))],

with the sine increment evaluated without cancellation, so decay is
resolved far below the rounding level of ``c`` itself.

The certified rate uses the Green-matrix constants translated to the
forward form ``|Phi(n, k+1)| <= K' rho^(n-k)``: with the certificate's
``|G(n, k)| <= K rho^(n-k-1)`` this gives ``K' = K / rho``, and the
Lipschitz constant of the lifted forcing is ``L * kappa`` with
``kappa = max_n |Q(n)|``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import interval_states
from .errors import MissingInitialData, NotStableCertificate, OutOfWindow, SmallnessViolated
from .linear_solver import GridSolution, PiecewiseSolution
from .nonlinear_solver import frozen_terms, sigma, sigma_increment


def decay_rate(K, rho, L, ell, p):
    """``alpha = rho (1 + K L ell rho^-p)``."""
    return rho * (1.0 + K * L * ell * rho ** (-p))


def _initial_block(rhs, eta, q):
    p = rhs.max_lag
    eta = [np.asarray(e, dtype=complex).reshape(q) for e in eta]
    if len(eta) < p + 1:
        raise MissingInitialData(f"{len(eta)} initial values given, {p + 1} needed "
                                 f"(c(0), c(-1), ..., c(-{p}))")
    return eta[:p + 1]


def forward_sequence(red, rhs, eta, horizon):
    """``c~(n)`` for ``n = -p .. horizon`` from ``c~(-j) = eta_j``.

    Uses ``c~(n+1) = H(n) c~(n) + h_g(n) + Q(n) sum_j C_j sigma(c~(n - p_j))``.
    Row ``i`` of the result is ``c~(i - p)``.
    """
    q = red.q
    eta = _initial_block(rhs, eta, q)
    p = rhs.max_lag
    if horizon > red.n_max + 1:
        raise OutOfWindow(f"horizon {horizon} beyond the reduced window {red.window}")
    c = np.empty((p + horizon + 1, q), complex)
    for j in range(p + 1):
        c[p - j] = eta[j]
    for n in range(horizon):
        i = n + p
        w = np.zeros(q, complex)
        for lag, C in zip(rhs.lags, rhs.coupling):
            w += C @ sigma(c[i - lag])
        c[i + 1] = red.H_at(n) @ c[i] + red.h_at(n) + red.gain[n - red.n_min] @ w
    return c


def perturbation_sequence(red, rhs, c_ref, delta, horizon):
    """Increment ``e(n) = c~(n) - c(n)`` for a reference forward sequence ``c_ref``.

    ``c_ref`` is laid out like :func:`forward_sequence` output and ``delta``
    lists ``e(0), e(-1), ..., e(-p)``.
    """
    q = red.q
    delta = _initial_block(rhs, delta, q)
    p = rhs.max_lag
    e = np.empty((p + horizon + 1, q), complex)
    for j in range(p + 1):
        e[p - j] = delta[j]
    for n in range(horizon):
        i = n + p
        w = np.zeros(q, complex)
        for lag, C in zip(rhs.lags, rhs.coupling):
            w += C @ sigma_increment(c_ref[i - lag], e[i - lag])
        e[i + 1] = red.H_at(n) @ e[i] + red.gain[n - red.n_min] @ w
    return e


def forward_solution(c_tilde, sys, rhs, t, tol=1e-10):
    """``y~(t) = Z_k(t) c~(k) + int_{t_k}^t X(t, u) F(u, c~_hat(k)) du`` for ``t >= t_0``."""
    return forward_piecewise(c_tilde, sys, rhs, tol)(t)


def forward_piecewise(c_tilde, sys, rhs, tol=1e-10):
    """Piecewise evaluator of a forward sequence laid out as by :func:`forward_sequence`."""
    p = rhs.max_lag
    w = frozen_terms(rhs, c_tilde)
    grid = GridSolution(c_tilde[p:], 0, 0, 0.0, 0.0, frozen=w[p:])
    return PiecewiseSolution(sys.with_forcing(rhs.forcing), grid, tol)


@dataclass(frozen=True)
class StabilityExperiment:
    delta: np.ndarray
    horizon: int
    alpha: float
    decay_samples: np.ndarray
    grid_bound: np.ndarray
    grid_bound_holds: bool
    fitted_rate: float
    K_tilde: float
    K_tilde_bound: float
    continuous_bound_holds: bool


@dataclass(frozen=True)
class DecaySummary:
    K: float
    K_forward: float
    rho: float
    L: float
    kappa: float
    ell: int
    p: int
    alpha: float
    smallness: float
    smallness_holds: bool
    rate_condition_holds: bool
    K_prime: float
    experiments: tuple

    @property
    def max_fitted_rate(self):
        return max((e.fitted_rate for e in self.experiments), default=float("nan"))

    def rate_within(self, slack=0.05):
        return self.max_fitted_rate <= self.alpha * (1 + slack)

    @property
    def all_bounds_hold(self):
        return all(e.grid_bound_holds and e.continuous_bound_holds for e in self.experiments)


def fit_rate(samples, skip_fraction=1.0 / 3.0):
    """Per-step rate from a log-linear fit over the tail of ``samples``."""
    n = np.arange(len(samples))
    start = int(len(samples) * skip_fraction)
    sel = (n >= start) & (samples > 0)
    if sel.sum() < 2:
        return 0.0
    slope = np.polyfit(n[sel], np.log(samples[sel]), 1)[0]
    return float(np.exp(slope))


def decay_certificate(sys, red, rhs, cert, c_bounded, perturbations, horizon=60,
                      samples_per_interval=16, tol=1e-10):
    """Run perturbed forward solutions and compare with the certified decay.

    Parameters
    ----------
    sys : LinearDEPCAG
    red : ReducedSystem
        Reduced for ``rhs`` (with gains), window covering ``0 .. horizon``.
    rhs : NonlinearRHS
    cert : DichotomyCertificate
        Must have ``Pi = I``.
    c_bounded : callable
        ``c_bounded(n)`` for ``n = -p .. 0``: the almost periodic solution.
    perturbations : sequence of arrays
        Each entry lists ``delta_0 .. delta_p`` so that ``c~(-j) = c(-j) + delta_j``.

    Raises
    ------
    NotStableCertificate
        When the certificate projection is not the identity.
    SmallnessViolated
        When ``K' L kappa ell / (1 - rho) >= 1``.
    """
    if not cert.is_stable:
        raise NotStableCertificate("decay certification needs a certificate with Pi = I")
    p = rhs.max_lag
    if p < 1:
        raise ValueError("stability analysis needs every lag >= 1")
    if min(rhs.lags) < 1:
        raise ValueError("stability analysis needs every lag >= 1")
    rho = cert.rho
    Kf = cert.K / rho
    kappa = float(np.max(np.linalg.norm(red.gain, 2, axis=(1, 2))))
    L, ell = rhs.L, rhs.ell
    Lh = L * kappa
    small = Kf * Lh * ell / (1 - rho)
    if not small < 1:
        raise SmallnessViolated(f"K' L ell / (1 - rho) = {small:.6g} >= 1")
    rate_cond = small < rho ** (p - 1)
    alpha = decay_rate(Kf, rho, Lh, ell, p)

    eta = [c_bounded(-j) for j in range(p + 1)]
    c_ref = forward_sequence(red, rhs, eta, horizon)

    # interval operators on the horizon, shared by every run
    times, Zs, Qs = [], [], []
    for n in range(horizon):
        ts = np.linspace(sys.mesh.t(n), sys.mesh.t(n + 1), samples_per_interval + 1)[:-1]
        st = interval_states(sys, n, ts, tol, gain=True)
        times.append(ts)
        Zs.append(st["Z"])
        Qs.append(st["Q"])
    supZ = max(float(np.max(np.linalg.norm(z, 2, axis=(1, 2)))) for z in Zs)
    supQ = max(float(np.max(np.linalg.norm(x, 2, axis=(1, 2)))) for x in Qs)
    K_prime = supZ + supQ * L * ell * alpha ** (-p)
    K_tilde_bound = Kf * K_prime

    experiments = []
    ns = np.arange(horizon + 1)
    for delta in perturbations:
        delta = np.asarray(delta, dtype=complex).reshape(p + 1, -1)
        e = perturbation_sequence(red, rhs, c_ref, list(delta), horizon)
        size = float(np.max(np.linalg.norm(delta, axis=1)))
        samples = np.linalg.norm(e[p:], axis=1)
        bound = Kf * alpha ** ns * size
        grid_ok = bool(np.all(samples <= bound * (1 + 1e-9) + 1e-15))
        K_tilde = 0.0
        for n in range(horizon):
            w = np.zeros(sys.q, complex)
            for lag, C in zip(rhs.lags, rhs.coupling):
                w += C @ sigma_increment(c_ref[n + p - lag], e[n + p - lag])
            diff = Zs[n] @ e[n + p] + Qs[n] @ w
            if size > 0:
                K_tilde = max(K_tilde, float(np.max(np.linalg.norm(diff, axis=1)))
                              / (alpha ** n * size))
        experiments.append(StabilityExperiment(
            delta, horizon, alpha, samples, bound, grid_ok, fit_rate(samples),
            K_tilde, K_tilde_bound, K_tilde <= K_tilde_bound * (1 + 1e-9)))
    return DecaySummary(cert.K, Kf, rho, L, kappa, ell, p, alpha, small, small < 1,
                        rate_cond, K_prime, tuple(experiments))
