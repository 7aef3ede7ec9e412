"""Pseudospectral time stepping of the rod equation in its nonlocal form

    u_t + gamma u u_x = -d/dx p * ((3 - gamma)/2 u^2 + gamma/2 u_x^2)

with classical RK4, an advective CFL step size and a slope threshold that
stands in for the gradient blowup.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .field import Grid, GridFunction, InvariantReport, NonSmoothDataError

log = logging.getLogger(__name__)

COMPLETED = "completed"
BLOWUP = "blowup_detected"
FAILURE = "numerical_failure"


class NumericalFailure(RuntimeError):
    """Non-finite values appeared during time stepping."""


@dataclass(frozen=True)
class SimulationConfig:
    gamma: float
    grid: Grid
    dt_initial: float
    t_end: float
    cfl_factor: float = 0.5
    frame_stride: int = 1
    blowup_slope_threshold: float = 50.0
    dealias: bool = True
    speed_floor: float = 1e-12

    def __post_init__(self):
        if not self.dt_initial > 0:
            raise ValueError("dt_initial must be positive")
        if not self.t_end > 0:
            raise ValueError("t_end must be positive")
        if not 0 < self.cfl_factor <= 1:
            raise ValueError("cfl_factor must lie in (0, 1]")
        if int(self.frame_stride) != self.frame_stride or self.frame_stride < 1:
            raise ValueError("frame_stride must be a positive integer")
        if not self.blowup_slope_threshold > 0:
            raise ValueError("blowup_slope_threshold must be positive")


@dataclass
class SimulationResult:
    times: list[float]
    frames: list[GridFunction]
    invariant_series: list[InvariantReport]
    min_slope_series: list[tuple[float, float]]
    status: str
    estimated_T_star: float | None = None
    # (t, min u_x) after every step; denser than the frame series
    step_slope_series: list[tuple[float, float]] = field(default_factory=list)
    gamma: float = 0.0

    @property
    def grid(self) -> Grid:
        return self.frames[0].grid


class _Spectral:
    """Precomputed wavenumber arrays for one grid."""

    def __init__(self, grid: Grid, dealias: bool):
        self.grid = grid
        self.n = grid.N
        k = grid.k
        self.ik = 1j * grid.k_deriv
        self.nonlocal_symbol = 1j * grid.k_deriv / (1.0 + k * k)
        if dealias:
            idx = np.arange(k.size)
            self.mask = (idx < grid.N / 3.0).astype(float)
        else:
            self.mask = np.ones(k.size)

    def rhs_hat(self, uh: np.ndarray, gamma: float) -> np.ndarray:
        n = self.n
        u = np.fft.irfft(uh, n)
        ux = np.fft.irfft(self.ik * uh, n)
        adv = np.fft.rfft(u * ux)
        w = np.fft.rfft((0.5 * (3.0 - gamma)) * u * u + (0.5 * gamma) * ux * ux)
        return self.mask * (-gamma * adv - self.nonlocal_symbol * w)

    def rk4(self, uh: np.ndarray, gamma: float, dt: float) -> np.ndarray:
        k1 = self.rhs_hat(uh, gamma)
        k2 = self.rhs_hat(uh + 0.5 * dt * k1, gamma)
        k3 = self.rhs_hat(uh + 0.5 * dt * k2, gamma)
        k4 = self.rhs_hat(uh + dt * k3, gamma)
        return uh + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def rhs(u: GridFunction, gamma: float, *, dealias: bool = True) -> GridFunction:
    """Right-hand side -gamma u u_x - d/dx p*(...) evaluated pseudospectrally.

    With ``dealias`` the input is truncated to the lower two thirds of the
    spectrum and the products are filtered the same way.
    """
    sp = _Spectral(u.grid, dealias)
    uh = sp.mask * np.fft.rfft(u.values)
    return GridFunction(u.grid, np.fft.irfft(sp.rhs_hat(uh, gamma), u.grid.N))


def step(u: GridFunction, gamma: float, dt: float, *, dealias: bool = True) -> GridFunction:
    """One classical RK4 step."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    sp = _Spectral(u.grid, dealias)
    with np.errstate(over="ignore", invalid="ignore"):
        uh = sp.rk4(sp.mask * np.fft.rfft(u.values), gamma, dt)
        out = np.fft.irfft(uh, u.grid.N)
    if not np.all(np.isfinite(out)):
        raise NumericalFailure("non-finite values after RK4 step")
    return GridFunction(u.grid, out)


def _report(u: np.ndarray, ux: np.ndarray, gamma: float, h: float) -> InvariantReport:
    ux2 = ux * ux
    E = h * float(np.sum(u * u + ux2))
    F = h * float(np.sum(u**3 + gamma * u * ux2))
    return InvariantReport(E=E, F=F, h1_norm=math.sqrt(E), linf_norm=float(np.max(np.abs(u))))


def run(config: SimulationConfig, u0: GridFunction) -> SimulationResult:
    """Advance ``u0`` until ``t_end``, slope blowup, or a non-finite state.

    The step is ``min(dt_initial, cfl * h / max(gamma ||u||_inf, speed_floor))``
    (``dt_initial`` caps the step, which matters when gamma u is small), and
    the last step is shortened to land on ``t_end``.  Every
    ``frame_stride``-th state is kept, plus the initial and final ones.
    """
    with np.errstate(over="ignore", invalid="ignore"):
        return _run(config, u0)


def _run(config: SimulationConfig, u0: GridFunction) -> SimulationResult:
    if u0.grid != config.grid:
        raise ValueError("datum grid does not match the configuration")
    if not u0.smooth:
        raise NonSmoothDataError("the time stepper needs smooth data (got a kinked profile)")
    grid = config.grid
    gamma = float(config.gamma)
    h = grid.h
    n = grid.N
    sp = _Spectral(grid, config.dealias)
    uh = sp.mask * np.fft.rfft(u0.values)

    times, frames, invs, slopes, steps = [], [], [], [], []

    def observe(uh):
        u = np.fft.irfft(uh, n)
        ux = np.fft.irfft(sp.ik * uh, n)
        return u, ux

    def store(t, u, ux):
        times.append(t)
        frames.append(GridFunction(grid, u))
        invs.append(_report(u, ux, gamma, h))
        slopes.append((t, float(ux.min())))

    u, ux = observe(uh)
    store(0.0, u, ux)
    steps.append((0.0, float(ux.min())))
    t = 0.0
    count = 0
    status = COMPLETED
    threshold = config.blowup_slope_threshold
    # guard against the final step being a rounding sliver
    t_tol = 1e-12 * max(1.0, config.t_end)
    while config.t_end - t > t_tol:
        speed = max(gamma * float(np.max(np.abs(u))), config.speed_floor)
        dt = min(config.dt_initial, config.cfl_factor * h / speed, config.t_end - t)
        uh = sp.rk4(uh, gamma, dt)
        t += dt
        count += 1
        u, ux = observe(uh)
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(ux))):
            status = FAILURE
            log.warning("non-finite state at t=%g", t)
            break
        m = float(ux.min())
        steps.append((t, m))
        if m <= -threshold:
            status = BLOWUP
            store(t, u, ux)
            break
        if count % config.frame_stride == 0 or config.t_end - t <= t_tol:
            store(t, u, ux)

    result = SimulationResult(times=times, frames=frames, invariant_series=invs,
                              min_slope_series=slopes, status=status,
                              step_slope_series=steps, gamma=gamma)
    if status == BLOWUP:
        result.estimated_T_star = estimate_blowup_time(steps, threshold=threshold, gamma=gamma)
    return result


def estimate_blowup_time(min_slope_series, *, threshold: float = 50.0,
                         gamma: float | None = None, window: int = 8) -> float | None:
    """Extrapolate the blowup time from the tail of a (t, min u_x) series.

    Near breaking min u_x behaves like -2/(gamma (T* - t)), so its reciprocal
    is asymptotically affine in t.  A straight line is fitted to 1/min u_x
    over the trailing samples below -threshold/2 (at least ``window`` of
    them) and its root returned.  Returns None unless the series ends below
    -threshold/2 and the fitted slope points to a future blowup.
    """
    data = np.asarray(min_slope_series, dtype=float)
    if data.ndim != 2 or data.shape[0] < window:
        return None
    t, g = data[:, 0], data[:, 1]
    if not g[-1] <= -0.5 * threshold:
        return None
    below = g <= -0.5 * threshold
    start = len(g)
    while start > 0 and below[start - 1]:
        start -= 1
    start = min(start, len(g) - window)
    ts, gs = t[start:], g[start:]
    if np.any(gs >= 0):
        return None
    slope, intercept = np.polyfit(ts, 1.0 / gs, 1)
    if not slope > 0:
        return None
    return float(-intercept / slope)


def write_outputs(result: SimulationResult, out_dir) -> list[Path]:
    """Frame CSVs ``frame_<index>_t<time>.csv`` (x,u) and ``series.csv``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for i, (t, f) in enumerate(zip(result.times, result.frames)):
        path = out / f"frame_{i:05d}_t{t:.6f}.csv"
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["x", "u"])
            for xi, ui in zip(f.x, f.values):
                w.writerow([f"{xi:.17g}", f"{ui:.17g}"])
        written.append(path)
    path = out / "series.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "E", "F", "h1", "linf", "min_ux"])
        for t, inv, (_, m) in zip(result.times, result.invariant_series, result.min_slope_series):
            w.writerow([f"{v:.17g}" for v in (t, inv.E, inv.F, inv.h1_norm, inv.linf_norm, m)])
    written.append(path)
    return written
