"""Time stepping for small complex linear ODEs.

* :func:`dopri5` - Dormand-Prince 5(4) with PI step-size control and
  continuous (4th order) output.
* :func:`expm2` - closed-form exponential of 2x2 matrices (batched).
* :func:`piecewise_exponential` - slice-wise exact exponentials of a
  midpoint-frozen generator; an independent reference for the adaptive path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import StepSizeError

# Dormand & Prince (1980) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = np.array(
    [
        [0, 0, 0, 0, 0, 0],
        [1 / 5, 0, 0, 0, 0, 0],
        [3 / 40, 9 / 40, 0, 0, 0, 0],
        [44 / 45, -56 / 15, 32 / 9, 0, 0, 0],
        [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729, 0, 0],
        [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656, 0],
        [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
    ]
)
_B5 = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0])
_B4 = np.array(
    [5179 / 57600, 0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)
_E = _B5 - _B4
# continuous extension: y(t + s h) = y + h * K.T @ _P @ [s, s^2, s^3, s^4]
_P = np.array(
    [
        [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
        [0, 0, 0, 0],
        [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
        [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
        [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
        [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
        [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
    ]
)

SAFETY = 0.9
FAC_MIN = 0.2
FAC_MAX = 10.0
PI_BETA = 0.04
PI_ALPHA = 0.2 - 0.75 * PI_BETA


@dataclass
class StepStats:
    accepted: int = 0
    rejected: int = 0
    nfev: int = 0


@dataclass
class Solution:
    t_eval: np.ndarray
    y_eval: np.ndarray  # (len(t_eval), n)
    t_end: float
    y_end: np.ndarray
    stats: StepStats


def _error_norm(err, y_old, y_new, rtol, atol):
    e = np.abs(err) / (atol + rtol * np.maximum(np.abs(y_old), np.abs(y_new)))
    return math.sqrt(float(e @ e) / e.size)


def _initial_step(f, t0, y0, f0, direction, rtol, atol):
    scale = atol + rtol * np.abs(y0)
    d0 = np.sqrt(np.mean(np.abs(y0 / scale) ** 2))
    d1 = np.sqrt(np.mean(np.abs(f0 / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    f1 = f(t0 + direction * h0, y0 + direction * h0 * f0)
    d2 = np.sqrt(np.mean(np.abs((f1 - f0) / scale) ** 2)) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1)


def dopri5(
    f: Callable[[float, np.ndarray], np.ndarray],
    t0: float,
    t1: float,
    y0,
    rtol: float = 1e-10,
    atol: float = 1e-12,
    t_eval=None,
    first_step: Optional[float] = None,
    max_steps: int = 10_000_000,
    on_step: Optional[Callable[[float, np.ndarray], None]] = None,
) -> Solution:
    """Integrate y' = f(t, y) from t0 to t1.

    Requested ``t_eval`` points are filled from the continuous extension of
    the step that contains them. ``on_step(t, y)`` is called after every
    accepted step and may raise to abort.
    """
    y = np.array(y0, dtype=complex)
    t = float(t0)
    t1 = float(t1)
    direction = 1.0 if t1 >= t else -1.0
    t_eval = np.empty(0) if t_eval is None else np.asarray(t_eval, dtype=float)
    out = np.empty((t_eval.size, y.size), dtype=complex)
    next_out = 0
    while next_out < t_eval.size and t_eval[next_out] == t:
        out[next_out] = y
        next_out += 1

    stats = StepStats()
    k = np.empty((7, y.size), dtype=complex)
    k[0] = f(t, y)
    stats.nfev += 1
    if t == t1:
        return Solution(t_eval, out, t, y, stats)
    h = first_step or _initial_step(f, t, y, k[0], direction, rtol, atol)
    stats.nfev += 1
    err_old = 1e-4
    rejected_last = False

    while direction * (t1 - t) > 0:
        if stats.accepted + stats.rejected >= max_steps:
            raise StepSizeError(t, h)
        min_step = 16 * np.spacing(max(abs(t), abs(t1)))
        if h < min_step:
            raise StepSizeError(t, h)
        last = h >= abs(t1 - t) * (1 - 1e-12)
        if last:
            h = abs(t1 - t)
        hs = direction * h
        for i in range(1, 7):
            k[i] = f(t + _C[i] * hs, y + hs * (_A[i, :i] @ k[:i]))
        stats.nfev += 6
        y_new = y + hs * (_B5 @ k)
        err = _error_norm(hs * (_E @ k), y, y_new, rtol, atol)

        if err <= 1.0:
            t_new = t1 if last else t + hs
            if next_out < t_eval.size:
                q = k.T @ _P
                while next_out < t_eval.size and direction * (t_new - t_eval[next_out]) >= 0:
                    s = (t_eval[next_out] - t) / hs
                    out[next_out] = y + hs * (q @ np.array([s, s * s, s**3, s**4]))
                    next_out += 1
            fac11 = err**PI_ALPHA
            fac = min(1 / FAC_MIN, max(1 / FAC_MAX, fac11 / err_old**PI_BETA / SAFETY))
            h_new = h / fac
            if rejected_last:
                h_new = min(h_new, h)
            err_old = max(err, 1e-4)
            t, y = t_new, y_new
            k[0] = k[6]
            stats.accepted += 1
            rejected_last = False
            if on_step is not None:
                on_step(t, y)
            h = h_new
        else:
            h = h / min(1 / FAC_MIN, err**PI_ALPHA / SAFETY)
            stats.rejected += 1
            rejected_last = True

    while next_out < t_eval.size:  # points sitting exactly at t1
        out[next_out] = y
        next_out += 1
    return Solution(t_eval, out, t, y, stats)


def expm2(m) -> np.ndarray:
    """exp(M) for one 2x2 matrix or a stack of shape (..., 2, 2).

    exp(M) = e^mu [cosh(s) I + sinh(s)/s (M - mu I)], mu = tr M / 2,
    s^2 = ((a - d)/2)^2 + b c.
    """
    m = np.asarray(m, dtype=complex)
    a, b, c, d = m[..., 0, 0], m[..., 0, 1], m[..., 1, 0], m[..., 1, 1]
    mu = 0.5 * (a + d)
    s = np.sqrt((0.5 * (a - d)) ** 2 + b * c)
    small = np.abs(s) < 1e-6
    s_safe = np.where(small, 1.0, s)
    sinhc = np.where(small, 1.0 + s * s / 6.0, np.sinh(s_safe) / s_safe)
    ch = np.cosh(s)
    pref = np.exp(mu)
    out = np.empty(m.shape, dtype=complex)
    out[..., 0, 0] = pref * (ch + sinhc * (a - mu))
    out[..., 0, 1] = pref * sinhc * b
    out[..., 1, 0] = pref * sinhc * c
    out[..., 1, 1] = pref * (ch + sinhc * (d - mu))
    return out


def ordered_product(mats: np.ndarray) -> np.ndarray:
    """mats[n-1] @ ... @ mats[1] @ mats[0] by pairwise reduction."""
    mats = np.asarray(mats, dtype=complex)
    eye = np.eye(mats.shape[-1], dtype=complex)
    while mats.shape[0] > 1:
        if mats.shape[0] % 2:
            mats = np.concatenate([mats, eye[None]], axis=0)
        mats = mats[1::2] @ mats[0::2]
    return mats[0]


def piecewise_exponential(
    hamiltonian_batch: Callable[[np.ndarray], np.ndarray],
    t0: float,
    t1: float,
    psi0,
    slices: int = 50_000,
) -> np.ndarray:
    """Propagate i psi' = H(t) psi with H frozen at each slice midpoint.

    ``hamiltonian_batch`` maps an array of times to a stack of 2x2 operators.
    Second order in the slice width.
    """
    edges = np.linspace(t0, t1, slices + 1)
    mids = 0.5 * (edges[:-1] + edges[1:])
    dt = np.diff(edges)
    gens = -1j * hamiltonian_batch(mids) * dt[:, None, None]
    return ordered_product(expm2(gens)) @ np.asarray(psi0, dtype=complex)
