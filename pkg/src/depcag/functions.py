"""Finite trigonometric polynomials used as almost periodic coefficients.

A function is stored as a constant term plus a list of harmonics
``amplitude * sin(frequency * t + phase)``.  The same class represents
matrix-valued coefficients (shape ``(q, q)``) and vector-valued forcing
terms (shape ``(q,)``).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Harmonic:
    amplitude: np.ndarray
    frequency: float
    phase: float = 0.0


@dataclass(frozen=True, eq=False)
class QuasiPeriodicMatrixFunction:
    """``M(t) = constant + sum_j amplitude_j * sin(frequency_j * t + phase_j)``.

    Parameters
    ----------
    constant : array_like
        Constant term, shape ``(q, q)`` for matrices or ``(q,)`` for vectors.
    harmonics : sequence of Harmonic
        Finite list of harmonics; each amplitude has the shape of
        ``constant``.  Frequencies are angular (radians per time unit).
    """

    constant: np.ndarray
    harmonics: tuple = field(default_factory=tuple)

    def __post_init__(self):
        const = np.array(self.constant, dtype=complex)
        if const.ndim not in (1, 2):
            raise ValueError("constant term must be a vector or a square matrix")
        if const.ndim == 2 and const.shape[0] != const.shape[1]:
            raise ValueError(f"matrix coefficient must be square, got {const.shape}")
        hs = []
        for h in self.harmonics:
            if not isinstance(h, Harmonic):
                h = Harmonic(*h)
            amp = np.array(h.amplitude, dtype=complex)
            if amp.shape != const.shape:
                raise ValueError(
                    f"harmonic amplitude shape {amp.shape} != constant shape {const.shape}")
            hs.append(Harmonic(amp, float(h.frequency), float(h.phase)))
        object.__setattr__(self, "constant", const)
        object.__setattr__(self, "harmonics", tuple(hs))
        if hs:
            amps = np.stack([h.amplitude for h in hs])
        else:
            amps = np.zeros((0,) + const.shape, dtype=complex)
        object.__setattr__(self, "_amps", amps)
        object.__setattr__(self, "_amps_flat", amps.reshape(len(hs), const.size))
        object.__setattr__(self, "_freqs", np.array([h.frequency for h in hs], dtype=float))
        object.__setattr__(self, "_phases", np.array([h.phase for h in hs], dtype=float))

    # constructors -------------------------------------------------------

    @classmethod
    def zeros(cls, q, vector=False):
        shape = (q,) if vector else (q, q)
        return cls(np.zeros(shape))

    # queries ------------------------------------------------------------

    @property
    def shape(self):
        return self.constant.shape

    @property
    def dimension(self):
        return self.constant.shape[0]

    @property
    def is_vector(self):
        return self.constant.ndim == 1

    @property
    def is_zero(self):
        return not np.any(self.constant) and not np.any(self._amps)

    @property
    def is_constant(self):
        return all(h.frequency == 0.0 or not np.any(h.amplitude) for h in self.harmonics)

    def sup_norm(self):
        """Computable upper bound ``|constant| + sum |amplitude|`` of ``sup_t |M(t)|``."""
        return _norm(self.constant) + sum(_norm(h.amplitude) for h in self.harmonics)

    # evaluation ---------------------------------------------------------

    def __call__(self, t):
        """Evaluate at a scalar time or an array of times.

        For array input of shape ``(m,)`` the result has shape ``(m,) + self.shape``.
        """
        t_arr = np.asarray(t, dtype=float)
        if t_arr.ndim == 0:
            if self._freqs.size == 0:
                return self.constant.copy()
            s = np.sin(self._freqs * float(t_arr) + self._phases)
            return self.constant + (s @ self._amps_flat).reshape(self.shape)
        out = np.broadcast_to(self.constant, t_arr.shape + self.shape).copy()
        if self._freqs.size:
            s = np.sin(np.multiply.outer(t_arr, self._freqs) + self._phases)
            out += (s @ self._amps_flat).reshape(t_arr.shape + self.shape)
        return out

    def integral(self, a, b):
        """Exact value of ``int_a^b M(u) du``."""
        out = self.constant * (b - a)
        for h in self.harmonics:
            if h.frequency == 0.0:
                out = out + h.amplitude * np.sin(h.phase) * (b - a)
            else:
                w = h.frequency
                # cos x - cos y = -2 sin((x+y)/2) sin((x-y)/2), avoids cancellation for short spans
                mid = 0.5 * w * (a + b) + h.phase
                half = 0.5 * w * (b - a)
                out = out + h.amplitude * (2.0 * np.sin(mid) * np.sin(half) / w)
        return out

    def translation_residual(self, tau, times):
        """Sampled ``max_t |M(t + tau) - M(t)|`` over the given times."""
        times = np.asarray(times, dtype=float)
        if self.is_zero or times.size == 0:
            return 0.0
        diff = self(times + tau) - self(times)
        return _max_norm(diff)

    def __repr__(self):
        return (f"QuasiPeriodicMatrixFunction(shape={self.shape}, "
                f"harmonics={len(self.harmonics)})")


def _norm(x):
    x = np.asarray(x)
    if x.ndim == 1:
        return float(np.linalg.norm(x))
    return float(np.linalg.norm(x, 2))


def _max_norm(x):
    """``max_i |x_i|`` for a stack, computing spectral norms only where they can win."""
    x = np.asarray(x)
    if x.ndim == 2:
        return float(np.max(np.linalg.norm(x, axis=-1)))
    frob = np.linalg.norm(x, axis=(-2, -1))
    # frob / sqrt(rank) <= |x|_2 <= frob
    floor = frob.max() / np.sqrt(min(x.shape[-2:]))
    cand = x[frob >= floor]
    return float(np.max(np.linalg.norm(cand, 2, axis=(-2, -1))))


class FusedEvaluator:
    """Evaluate several functions of one variable with a single ``sin`` call.

    ``evaluate(t)`` returns one array per function, in the given order.
    """

    def __init__(self, funcs):
        self.shapes = [f.shape for f in funcs]
        sizes = [f.constant.size for f in funcs]
        self.offsets = np.concatenate([[0], np.cumsum(sizes)])
        self.constant = np.concatenate([f.constant.ravel() for f in funcs])
        freqs, phases, rows = [], [], []
        for i, f in enumerate(funcs):
            for h in f.harmonics:
                row = np.zeros(self.offsets[-1], complex)
                row[self.offsets[i]:self.offsets[i + 1]] = h.amplitude.ravel()
                freqs.append(h.frequency)
                phases.append(h.phase)
                rows.append(row)
        self.freqs = np.array(freqs, dtype=float)
        self.phases = np.array(phases, dtype=float)
        self.amps = np.array(rows, dtype=complex).reshape(len(rows), self.offsets[-1])

    def evaluate(self, t):
        flat = self.constant
        if self.freqs.size:
            flat = flat + np.sin(self.freqs * t + self.phases) @ self.amps
        return [flat[a:b].reshape(shape)
                for a, b, shape in zip(self.offsets[:-1], self.offsets[1:], self.shapes)]
