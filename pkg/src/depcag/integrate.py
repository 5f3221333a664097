"""Adaptive Dormand-Prince 5(4) stepping for linear matrix ODEs.

Only what the transition-matrix code needs: march from ``t0`` through a
sorted list of target times, landing exactly on each, with the local error
per step kept below ``tol * max(1, |y|) * |h| / span`` so that the global
error over the whole span stays near ``tol``.
"""
import numpy as np

from .errors import IntegratorFailure

_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array(_A[6] + [0.0])
_AROWS = np.array([row + [0.0] * (7 - len(row)) for row in _A])
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])
# continuous extension of the 5th order solution
_D = np.array([-12715105075 / 11282082432, 0.0, 87487479700 / 32700410799,
               -10690763975 / 1880347072, 701980252875 / 199316789632,
               -1453857185 / 822651844, 69997945 / 29380423])

MAX_STEPS = 200_000


def _interpolate(y, y_new, step, ks, theta):
    r2 = y_new - y
    r3 = step * ks[0] - r2
    r4 = r2 - step * ks[6] - r3
    r5 = step * np.tensordot(_D, ks, axes=1)
    return y + theta * (r2 + (1 - theta) * (r3 + theta * (r4 + (1 - theta) * r5)))


def propagate(rhs, t0, y0, targets, tol, h0=None, dense=False):
    """Integrate ``y' = rhs(t, y)`` from ``(t0, y0)`` and return ``y`` at each target.

    Parameters
    ----------
    rhs : callable
        ``rhs(t, y)`` returning an array shaped like ``y``.
    t0 : float
    y0 : ndarray
    targets : sequence of float
        Monotone in the direction of integration (all ``>= t0`` or all ``<= t0``).
    tol : float
        Global accuracy goal.
    dense : bool
        Read intermediate targets off the continuous extension instead of
        shortening steps to land on them.  The last target is always hit
        exactly.

    Returns
    -------
    list of ndarray
        States at the targets.  A target equal to ``t0`` returns ``y0`` exactly.

    Raises
    ------
    IntegratorFailure
        On step-size underflow or when the step budget is exhausted.
    """
    targets = [float(t) for t in targets]
    y = np.array(y0, dtype=complex)
    out = []
    if not targets:
        return out
    t_last = targets[-1]
    span = abs(t_last - t0)
    direction = 1.0 if t_last >= t0 else -1.0
    if any(direction * (b - a) < 0 for a, b in zip([t0] + targets[:-1], targets)):
        raise ValueError("targets must be monotone in the integration direction")
    if span <= 1e-14 * max(1.0, abs(t0), abs(t_last)):
        # below the resolution of the time axis: nothing to integrate
        return [y.copy() for _ in targets]

    t = float(t0)
    h = direction * (h0 if h0 else min(span, 0.05 * max(span, 1.0)))
    k1 = rhs(t, y)
    steps = 0
    pending = list(targets)
    if dense:
        out = [y.copy() for tt in pending if tt == t0]
        pending = [tt for tt in pending if tt != t0]
        while pending:
            target = pending[-1]
            last = direction * (t + h - target) >= 0
            step = (target - t) if last else h
            if abs(step) < 1e-14 * max(1.0, abs(t)):
                if not last:
                    raise IntegratorFailure(f"step size underflow at t={t}")
                out.extend(y.copy() for _ in pending)
                break
            ks, y_new, err = _stage(rhs, t, y, k1, step)
            scale = tol * max(1.0, float(np.max(np.abs(y_new)))) * abs(step) / span
            steps += 1
            if steps > MAX_STEPS:
                raise IntegratorFailure(f"step budget exhausted near t={t}")
            if err <= scale:
                t_new = target if last else t + step
                while pending and direction * (pending[0] - t_new) <= 0:
                    tt = pending.pop(0)
                    out.append(y_new.copy() if tt == t_new else
                               _interpolate(y, y_new, step, ks, (tt - t) / step))
                t, y, k1 = t_new, y_new, ks[6]
                factor = 5.0 if err == 0.0 else min(5.0, 0.9 * (scale / err) ** 0.25)
                h = factor * step
            else:
                h = step * max(0.2, 0.9 * (scale / err) ** 0.25)
        return out
    for target in pending:
        while direction * (target - t) > 0:
            if steps > MAX_STEPS:
                raise IntegratorFailure(f"step budget exhausted near t={t}")
            last = direction * (t + h - target) >= 0
            step = (target - t) if last else h
            if abs(step) < 1e-14 * max(1.0, abs(t)):
                if last:
                    # residual gap below resolution: snap to the target
                    t = target
                    break
                raise IntegratorFailure(f"step size underflow at t={t}")
            ks, y_new, err = _stage(rhs, t, y, k1, step)
            scale = tol * max(1.0, float(np.max(np.abs(y_new)))) * abs(step) / span
            steps += 1
            if err <= scale:
                t = target if last else t + step
                y = y_new
                k1 = ks[6]
                factor = 5.0 if err == 0.0 else min(5.0, 0.9 * (scale / err) ** 0.25)
                if not last or abs(factor * step) > abs(h):
                    h = factor * step
            else:
                h = step * max(0.2, 0.9 * (scale / err) ** 0.25)
        out.append(y.copy())
    return out


def _stage(rhs, t, y, k1, step):
    ks = np.empty((7,) + y.shape, dtype=complex)
    ks[0] = k1
    flat = ks.reshape(7, -1)
    for i in range(1, 7):
        yi = y + step * (_AROWS[i][:i] @ flat[:i]).reshape(y.shape)
        ks[i] = rhs(t + _C[i] * step, yi)
    y_new = y + step * (_B @ flat).reshape(y.shape)
    err = step * (_E @ flat)
    return ks, y_new, float(np.max(np.abs(err)))
