"""Characteristics of a stored solution.

Integrates the flow map q_t = gamma u(t, q) together with its Jacobian
(q_x)_t = gamma u_x(t, q) q_x through the frames of a SimulationResult, and
evaluates the monotone quantities

    A = exp(beta q) (beta u - u_x)(t, q),    B = exp(-beta q) (beta u + u_x)(t, q)

plus the potential identity y(t, q) q_x^2 = y0 + 3 (gamma - 1) int (u u_x)(s, q) q_x^2 ds.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .field import evaluate_spectrum
from .params import DomainError
from .solver import SimulationResult


class SparseFramesError(RuntimeError):
    """Frames are too far apart for cubic time interpolation."""


@dataclass
class CharacteristicTrace:
    x_start: float
    times: np.ndarray
    q: np.ndarray
    qx: np.ndarray
    u_along: np.ndarray
    ux_along: np.ndarray
    y_along: np.ndarray
    A: np.ndarray | None = None
    B: np.ndarray | None = None
    identity_residual: np.ndarray | None = None

    @property
    def g(self) -> np.ndarray:
        return self.ux_along


def _lagrange_weights(ts: np.ndarray, t: float) -> np.ndarray:
    w = np.ones(len(ts))
    for i in range(len(ts)):
        for j in range(len(ts)):
            if i != j:
                w[i] *= (t - ts[j]) / (ts[i] - ts[j])
    return w


def _stencil(i: int, n: int) -> slice:
    """Four frames around the interval [t_i, t_{i+1}], shifted at the ends."""
    lo = min(max(i - 1, 0), max(n - 4, 0))
    return slice(lo, min(lo + 4, n))


class _Timeline:
    """Cubic-in-time, trigonometric-in-space interpolant of stored frames."""

    def __init__(self, result: SimulationResult, nframes: int):
        grid = result.frames[0].grid
        self.grid = grid
        self.t = np.asarray(result.times[:nframes], dtype=float)
        vals = np.array([f.values for f in result.frames[:nframes]])
        self.values = vals
        self.spec = np.fft.rfft(vals, axis=1)
        k = grid.k_deriv
        self.ik = 1j * k
        self.helm = 1.0 + k * k

    def spectrum_at(self, t: float, i: int) -> np.ndarray:
        # i indexes the interval [t_i, t_{i+1}] containing t
        s = _stencil(i, len(self.t))
        return _lagrange_weights(self.t[s], t) @ self.spec[s]

    def sample(self, t: float, i: int, q: np.ndarray, *, with_y: bool = False):
        """u, u_x (and y = u - u_xx) at time t, positions q; one phase matrix
        serves all three."""
        fh = self.spectrum_at(t, i)
        ops = [fh, self.ik * fh] + ([self.helm * fh] if with_y else [])
        return evaluate_spectrum(self.grid, np.array(ops), q)

    def interpolation_error(self) -> float:
        """Leave-one-out estimate: predict each interior frame from its four
        neighbours (two on each side) and report the worst miss relative to
        max |u|.  The doubled spacing makes this a conservative bound for the
        interpolation actually used."""
        n = len(self.t)
        scale = float(np.max(np.abs(self.values))) or 1.0
        worst = 0.0
        for j in range(2, n - 2):
            idx = [j - 2, j - 1, j + 1, j + 2]
            w = _lagrange_weights(self.t[idx], self.t[j])
            worst = max(worst, float(np.max(np.abs(w @ self.values[idx] - self.values[j]))))
        return worst / scale


def _usable_frames(result: SimulationResult, t_max, slope_floor) -> int:
    n = len(result.frames)
    for i, (t, m) in enumerate(result.min_slope_series):
        if (t_max is not None and t > t_max) or (slope_floor is not None and m <= slope_floor):
            return i
    return n


def integrate_flows(result: SimulationResult, gamma: float, seeds, *,
                    substeps: int = 1, t_max: float | None = None,
                    slope_floor: float | None = None,
                    interp_tol: float = 1e-6) -> list[CharacteristicTrace]:
    """Trace several characteristics at once; see :func:`integrate_flow`."""
    if len(result.frames) < 2:
        raise ValueError("need at least two frames")
    grid = result.frames[0].grid
    seeds = np.atleast_1d(np.asarray(seeds, dtype=float))
    lo, hi = -0.5 * grid.L, 0.5 * grid.L
    if np.any(seeds < lo) or np.any(seeds > hi):
        raise ValueError("characteristic seeds must lie in [-L/2, L/2]")
    nframes = _usable_frames(result, t_max, slope_floor)
    if nframes < 2:
        raise ValueError("fewer than two frames before the cutoff")
    tl = _Timeline(result, nframes)
    err = tl.interpolation_error()
    if err > interp_tol:
        raise SparseFramesError(
            f"time interpolation error estimate {err:.2e} exceeds {interp_tol:.1e}; "
            "store frames more densely (smaller frame_stride)")

    gamma = float(gamma)
    s = seeds.size
    q = seeds.copy()
    qx = np.ones(s)
    ts, Q, QX, U, UX, Y = [], [], [], [], [], []

    def record(t, i, q, qx):
        u, ux, y = tl.sample(t, i, q, with_y=True)
        ts.append(t)
        Q.append(q.copy())
        QX.append(qx.copy())
        U.append(np.atleast_1d(u))
        UX.append(np.atleast_1d(ux))
        Y.append(np.atleast_1d(y))

    def f(t, i, q, qx):
        u, ux = tl.sample(t, i, q)
        return gamma * u, gamma * ux * qx

    record(tl.t[0], 0, q, qx)
    for i in range(nframes - 1):
        t0, t1 = tl.t[i], tl.t[i + 1]
        h = (t1 - t0) / substeps
        for m in range(substeps):
            t = t0 + m * h
            a1, b1 = f(t, i, q, qx)
            a2, b2 = f(t + 0.5 * h, i, q + 0.5 * h * a1, qx + 0.5 * h * b1)
            a3, b3 = f(t + 0.5 * h, i, q + 0.5 * h * a2, qx + 0.5 * h * b2)
            a4, b4 = f(t + h, i, q + h * a3, qx + h * b3)
            q = q + (h / 6.0) * (a1 + 2 * a2 + 2 * a3 + a4)
            qx = qx + (h / 6.0) * (b1 + 2 * b2 + 2 * b3 + b4)
            record(t1 if m == substeps - 1 else t + h, i, q, qx)

    times = np.array(ts)
    stack = lambda rows: np.array(rows).T  # noqa: E731  -> (seed, time)
    Q, QX, U, UX, Y = map(stack, (Q, QX, U, UX, Y))
    return [CharacteristicTrace(x_start=float(seeds[j]), times=times, q=Q[j], qx=QX[j],
                                u_along=U[j], ux_along=UX[j], y_along=Y[j])
            for j in range(s)]


def integrate_flow(result: SimulationResult, gamma: float, x_start: float, **kw) -> CharacteristicTrace:
    """Flow map and Jacobian from ``x_start`` through the stored frames.

    RK4 with one step per frame interval (``substeps`` refines this); the
    field between frames is the cubic Lagrange interpolant of the four
    surrounding frames, evaluated in space by trigonometric interpolation.
    ``q`` is not reduced modulo L so the exponential weights in A and B stay
    continuous.  ``t_max`` and ``slope_floor`` end the trace early (at the
    last frame before either is crossed).  Raises SparseFramesError when the
    time interpolation is too coarse.
    """
    return integrate_flows(result, gamma, [x_start], **kw)[0]


def lyapunov_AB(trace: CharacteristicTrace, beta: float):
    """A = e^{beta q}(beta u - u_x), B = e^{-beta q}(beta u + u_x) along the trace."""
    bu = beta * trace.u_along
    trace.A = np.exp(beta * trace.q) * (bu - trace.ux_along)
    trace.B = np.exp(-beta * trace.q) * (bu + trace.ux_along)
    return trace.A, trace.B


def riccati_envelope(g_t0: float, t0: float, gamma: float, times) -> np.ndarray:
    """4 g(t0) / (4 + gamma (t - t0) g(t0)), valid up to its pole."""
    if not g_t0 < 0:
        raise DomainError(f"envelope needs g(t0) < 0, got {g_t0!r}")
    dt = np.asarray(times, dtype=float) - t0
    den = 4.0 + gamma * dt * g_t0
    if np.any(den <= 0):
        raise DomainError(f"times reach the envelope pole at t - t0 = {4.0 / (gamma * -g_t0):.6g}")
    return 4.0 * g_t0 / den


def flow_identity_residual(trace: CharacteristicTrace, gamma: float, y0_at_start: float) -> np.ndarray:
    """y(t,q) q_x^2 - y0(x) - 3(gamma - 1) int_0^t (u u_x)(s,q) q_x^2 ds.

    The time integral uses the trapezoid rule on the trace samples.
    """
    lhs = trace.y_along * trace.qx**2 - y0_at_start
    if gamma != 1:
        src = trace.u_along * trace.ux_along * trace.qx**2
        dt = np.diff(trace.times)
        integral = np.concatenate([[0.0], np.cumsum(0.5 * dt * (src[1:] + src[:-1]))])
        lhs = lhs - 3.0 * (gamma - 1.0) * integral
    trace.identity_residual = lhs
    return lhs


def monotonicity_violation(traces, rel_eps: float = 1e-6) -> float:
    """Largest violation of A nondecreasing / B nonincreasing, in units of
    the per-trace tolerance eps = rel_eps (1 + max |A|, |B|).  Values <= 1 pass."""
    worst = 0.0
    for tr in traces:
        if tr.A is None or tr.B is None:
            raise ValueError("call lyapunov_AB on every trace first")
        eps = rel_eps * (1.0 + max(np.max(np.abs(tr.A)), np.max(np.abs(tr.B))))
        dA = np.diff(tr.A)
        dB = np.diff(tr.B)
        bad = max(float(np.max(-dA, initial=0.0)), float(np.max(dB, initial=0.0)))
        worst = max(worst, bad / eps)
    return worst


def write_trace_csv(trace: CharacteristicTrace, path) -> None:
    cols = [trace.times, trace.q, trace.qx, trace.u_along, trace.ux_along]
    nan = np.full(trace.times.shape, math.nan)
    cols += [trace.A if trace.A is not None else nan,
             trace.B if trace.B is not None else nan,
             trace.identity_residual if trace.identity_residual is not None else nan]
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "q", "qx", "u", "ux", "A", "B", "residual"])
        for row in zip(*cols):
            w.writerow([f"{v:.17g}" for v in row])
