"""Explicit time integrators: adaptive Bogacki-Shampine 3(2) and fixed RK4.

Both integrators record dense output on a caller-supplied grid via cubic
Hermite interpolation, honour a list of breakpoints (demand switches,
ramp end) as hard step boundaries, and report every accepted step to an
optional observer.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = ["IntegrationError", "Trajectory", "integrate_rk23", "integrate_rk4_fixed"]


class IntegrationError(RuntimeError):
    """Raised when stepping cannot continue; partial output is attached."""

    def __init__(self, message: str, partial: "Trajectory | None" = None):
        super().__init__(message)
        self.partial = partial


@dataclass
class Trajectory:
    """Dense output samples: t has shape (n,), y has shape (n, dim)."""

    t: np.ndarray
    y: np.ndarray
    n_steps: int = 0
    n_rhs: int = 0


def _hermite(t0, y0, f0, t1, y1, f1, t):
    """Cubic Hermite interpolant on [t0, t1], third-order accurate."""
    h = t1 - t0
    s = (t - t0) / h
    h00 = (1.0 + 2.0 * s) * (1.0 - s)**2
    h10 = s * (1.0 - s)**2
    h01 = s * s * (3.0 - 2.0 * s)
    h11 = s * s * (s - 1.0)
    return h00 * y0 + h10 * h * f0 + h01 * y1 + h11 * h * f1


def _segments(t_span, breakpoints):
    t0, t1 = t_span
    pts = [t0, t1]
    for b in breakpoints or ():
        if t0 < b < t1:
            pts.append(float(b))
    pts = sorted(set(pts))
    return list(zip(pts[:-1], pts[1:]))


class _Recorder:
    """Pulls dense-output samples off accepted steps in t order."""

    def __init__(self, t_record: np.ndarray, dim: int):
        self.t_record = np.asarray(t_record, float)
        self.y = np.empty((len(self.t_record), dim))
        self.idx = 0

    def start(self, t0, y0):
        while self.idx < len(self.t_record) and self.t_record[self.idx] <= t0:
            self.y[self.idx] = y0
            self.idx += 1

    def advance(self, t0, y0, f0, t1, y1, f1):
        while self.idx < len(self.t_record) and self.t_record[self.idx] <= t1:
            tq = self.t_record[self.idx]
            self.y[self.idx] = _hermite(t0, y0, f0, t1, y1, f1, tq)
            self.idx += 1

    def finish(self, t1, y1):
        while self.idx < len(self.t_record):
            self.y[self.idx] = y1
            self.idx += 1

    def done(self) -> Trajectory:
        return Trajectory(t=self.t_record.copy(), y=self.y)

    def partial(self) -> Trajectory:
        """Only the rows actually filled before an abort."""
        return Trajectory(t=self.t_record[:self.idx].copy(),
                          y=self.y[:self.idx].copy())


def _error_norm(err, y0, y1, rtol, atol):
    scale = atol + rtol * np.maximum(np.abs(y0), np.abs(y1))
    return float(np.sqrt(np.mean((err / scale)**2)))


def integrate_rk23(rhs: Callable, y0: np.ndarray, t_span: tuple[float, float],
                   rtol: float = 1e-6, atol: float = 1e-9,
                   max_step: float = 10.0, dt_min: float = 1e-10,
                   breakpoints=None, t_record=None,
                   step_observer: Callable | None = None) -> Trajectory:
    """Adaptive Bogacki-Shampine 3(2) pair with FSAL.

    Per-step error control on the RMS of the embedded difference scaled by
    atol + rtol max(|y|); breakpoints are never stepped across.  Raises
    :class:`IntegrationError` with partial output when the step size
    underflows ``dt_min`` (expected near discontinuous feedback).
    """
    if rtol <= 0 or atol <= 0:
        raise ValueError("rtol and atol must be positive")
    t0, t_end = float(t_span[0]), float(t_span[1])
    y = np.asarray(y0, float).copy()
    if t_record is None:
        t_record = np.array([t0, t_end])
    rec = _Recorder(t_record, len(y))
    rec.start(t0, y)

    n_steps = 0
    n_rhs = 0
    # classic 3(2) tableau with first-same-as-last fourth stage
    c2, c3 = 0.5, 0.75
    b1, b2, b3 = 2.0 / 9.0, 1.0 / 3.0, 4.0 / 9.0
    e1, e2, e3, e4 = -5.0 / 72.0, 1.0 / 12.0, 1.0 / 9.0, -1.0 / 8.0

    for seg0, seg1 in _segments((t0, t_end), breakpoints):
        t = seg0
        f1 = rhs(t, y)
        n_rhs += 1
        h = min(max_step, seg1 - seg0)
        tiny = 1e-12 * max(1.0, abs(seg1))
        while seg1 - t > tiny:
            h = min(h, seg1 - t)
            if h < dt_min:
                raise IntegrationError(
                    f"step size underflow at t={t:.6g} (h={h:.3e} < {dt_min:.3e})",
                    partial=rec.partial())
            k2 = rhs(t + c2 * h, y + h * 0.5 * f1)
            k3 = rhs(t + c3 * h, y + h * 0.75 * k2)
            y_new = y + h * (b1 * f1 + b2 * k2 + b3 * k3)
            k4 = rhs(t + h, y_new)
            n_rhs += 3
            err = h * (e1 * f1 + e2 * k2 + e3 * k3 + e4 * k4)
            norm = _error_norm(err, y, y_new, rtol, atol)
            if norm <= 1.0:
                rec.advance(t, y, f1, t + h, y_new, k4)
                t += h
                y = y_new
                f1 = k4  # FSAL
                n_steps += 1
                if step_observer is not None:
                    step_observer(t, y)
                grow = 0.9 * norm**(-1.0 / 3.0) if norm > 0 else 5.0
                h = min(max_step, h * min(5.0, max(0.2, grow)))
            else:
                h *= max(0.2, 0.9 * norm**(-1.0 / 3.0))

    rec.finish(t_end, y)
    out = rec.done()
    out.n_steps = n_steps
    out.n_rhs = n_rhs
    return out


def integrate_rk4_fixed(rhs: Callable, y0: np.ndarray, t_span: tuple[float, float],
                        dt: float, breakpoints=None, t_record=None,
                        step_observer: Callable | None = None) -> Trajectory:
    """Classical four-stage Runge-Kutta with a fixed step.

    Deterministic: the same inputs always produce bit-identical output.
    The final step of each segment is shortened to land exactly on the
    segment end.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    t0, t_end = float(t_span[0]), float(t_span[1])
    y = np.asarray(y0, float).copy()
    if t_record is None:
        t_record = np.array([t0, t_end])
    rec = _Recorder(t_record, len(y))
    rec.start(t0, y)
    n_steps = 0
    n_rhs = 0

    for seg0, seg1 in _segments((t0, t_end), breakpoints):
        t = seg0
        while t < seg1 - 1e-12 * max(1.0, abs(seg1)):
            h = min(dt, seg1 - t)
            k1 = rhs(t, y)
            k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1)
            k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2)
            k4 = rhs(t + h, y + h * k3)
            y_new = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            n_rhs += 4
            rec.advance(t, y, k1, t + h, y_new, k4)
            t += h
            y = y_new
            n_steps += 1
            if step_observer is not None:
                step_observer(t, y)

    rec.finish(t_end, y)
    out = rec.done()
    out.n_steps = n_steps
    out.n_rhs = n_rhs
    return out
