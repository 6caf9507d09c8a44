"""Adaptive Dormand-Prince 5(4) stepper for linear-ish complex ODE systems.

A small hand-rolled integrator so that a projection hook (Hermitian
symmetrization of the density matrix) can run after every accepted step,
which ``scipy.integrate.solve_ivp`` does not allow.
"""

from __future__ import annotations

import numpy as np

# Dormand-Prince tableau
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
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)
_E = _B5 - _B4


class IntegrationError(RuntimeError):
    """Raised when the stepper cannot meet its tolerances."""

    def __init__(self, message, t):
        super().__init__(f"{message} at t={t!r}")
        self.t = t


def integrate_adaptive(
    rhs,
    y0,
    t_eval,
    atol=1e-10,
    rtol=1e-8,
    project=None,
    first_step=None,
    max_step=np.inf,
    min_step_rel=1e-14,
    max_steps=1_000_000,
    breakpoints=(),
):
    """Integrate ``dy/dt = rhs(t, y)`` and return ``y`` at every ``t_eval``.

    ``t_eval`` must be increasing; the stepper lands exactly on each output
    time and on each entry of ``breakpoints`` (e.g. kinks of a pulse), so no
    dense-output interpolation is involved.  ``project(y)`` is applied after
    every accepted step.
    """
    t_eval = np.asarray(t_eval, dtype=float)
    if t_eval.ndim != 1 or t_eval.size == 0:
        raise ValueError("t_eval must be a non-empty 1-D array")
    if np.any(np.diff(t_eval) <= 0):
        raise ValueError("t_eval must be strictly increasing")

    y = np.array(y0, dtype=complex)
    t = float(t_eval[0])
    span = float(t_eval[-1] - t_eval[0])
    stops = sorted(set(t_eval[1:].tolist()) | {b for b in breakpoints if t < b < t_eval[-1]})

    out = np.empty((t_eval.size,) + y.shape, dtype=complex)
    out[0] = y
    out_idx = 1
    h_min = min_step_rel * max(span, abs(t), 1.0)

    k1 = rhs(t, y)
    if not np.all(np.isfinite(k1)):
        raise IntegrationError("non-finite derivative", t)
    h = first_step if first_step is not None else _initial_step(rhs, t, y, k1, atol, rtol)
    h = min(h, max_step)
    n_steps = 0
    ks = [None] * 7

    for stop in stops:
        while t < stop:
            if n_steps >= max_steps:
                raise IntegrationError("maximum number of steps exceeded", t)
            last = False
            h_free = h
            if t + h >= stop or stop - (t + h) < h_min:
                h = stop - t
                last = True
            ks[0] = k1
            for i in range(1, 7):
                dy = sum(a * ks[j] for j, a in enumerate(_A[i]) if a != 0.0)
                ks[i] = rhs(t + _C[i] * h, y + h * dy)
            y_new = y + h * sum(b * k for b, k in zip(_B5, ks) if b != 0.0)
            err_vec = h * sum(e * k for e, k in zip(_E, ks) if e != 0.0)
            scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
            err = float(np.max(np.abs(err_vec) / scale))
            n_steps += 1
            if err <= 1.0:
                t = stop if last else t + h
                if project is not None:
                    y_new = project(y_new)
                y = y_new
                # FSAL is broken by the projection; re-evaluate the derivative.
                k1 = rhs(t, y) if project is not None else ks[6]
                factor = 5.0 if err == 0.0 else min(5.0, 0.9 * err ** (-0.2))
                h = min((h_free if last else h) * factor, max_step)
            else:
                h *= max(0.2, 0.9 * err ** (-0.2)) if np.isfinite(err) else 0.2
                if not h >= h_min:
                    raise IntegrationError("step size underflow", t)
            if not np.all(np.isfinite(y)):
                raise IntegrationError("non-finite state", t)
        while out_idx < t_eval.size and t_eval[out_idx] <= t:
            out[out_idx] = y
            out_idx += 1
    return out, n_steps


def _initial_step(rhs, t, y, f0, atol, rtol):
    scale = atol + rtol * np.abs(y)
    d0 = np.sqrt(np.mean(np.abs(y / scale) ** 2))
    d1 = np.sqrt(np.mean(np.abs(f0 / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    f1 = rhs(t + h0, y + h0 * f0)
    d2 = np.sqrt(np.mean(np.abs((f1 - f0) / scale) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1)
