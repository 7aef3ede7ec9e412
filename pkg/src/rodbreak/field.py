"""Periodic grid functions and the spectral operators acting on them.

Everything here works on a uniform grid of ``N`` nodes covering one period
``[-L/2, L/2)``.  Problems posed on the whole line are embedded in a large
period with decaying data; the periodic inverse of ``1 - d^2/dx^2`` then
agrees with convolution by ``exp(-|x|)/2`` up to ``O(exp(-L/2))``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class NonSmoothDataError(ValueError):
    """Raised when an operation needs smooth data but got a kinked profile."""


@dataclass(frozen=True)
class Grid:
    L: float
    N: int

    def __post_init__(self):
        if not (self.L > 0 and math.isfinite(self.L)):
            raise ValueError(f"period L must be positive, got {self.L!r}")
        n = int(self.N)
        if n != self.N or n < 16 or n & (n - 1):
            raise ValueError(f"N must be a power of two >= 16, got {self.N!r}")

    @property
    def h(self) -> float:
        return self.L / self.N

    @property
    def x(self) -> np.ndarray:
        return -0.5 * self.L + self.h * np.arange(self.N)

    @property
    def k(self) -> np.ndarray:
        """Angular wavenumbers matching ``np.fft.rfft`` ordering."""
        return 2.0 * np.pi * np.fft.rfftfreq(self.N, d=self.h)

    @property
    def k_deriv(self) -> np.ndarray:
        # Nyquist mode has no real derivative; drop it
        k = self.k.copy()
        k[-1] = 0.0
        return k

    def wrap(self, x):
        """Reduce positions to [-L/2, L/2)."""
        return np.mod(np.asarray(x, dtype=float) + 0.5 * self.L, self.L) - 0.5 * self.L

    def index_of(self, x: float) -> int:
        """Index of the node nearest to ``x`` (after reduction modulo L)."""
        j = int(np.rint((self.wrap(x) + 0.5 * self.L) / self.h))
        return j % self.N

    def mirror_indices(self) -> np.ndarray:
        """Index of the node at -x_j for every j (the grid is symmetric about 0)."""
        return (-np.arange(self.N)) % self.N


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Samples of a real function on ``grid``.

    Kinked profiles (peakons, exponential extremals) carry their analytic
    one-sided derivatives in ``slopes = (left, right)``.  Such data count as
    non-smooth: the potential ``u - u_xx`` and the time stepper refuse them,
    while criteria and invariants use the one-sided slopes instead of a grid
    derivative.
    """

    grid: Grid
    values: np.ndarray
    slopes: tuple[np.ndarray, np.ndarray] | None = field(default=None)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.N,):
            raise ValueError(f"expected {self.grid.N} samples, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("grid function values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        if self.slopes is not None:
            left, right = (np.array(s, dtype=float) for s in self.slopes)
            if left.shape != v.shape or right.shape != v.shape:
                raise ValueError("one-sided slopes must match the sample count")
            left.setflags(write=False)
            right.setflags(write=False)
            object.__setattr__(self, "slopes", (left, right))

    @property
    def smooth(self) -> bool:
        return self.slopes is None

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    def with_values(self, values) -> "GridFunction":
        return GridFunction(self.grid, values)

    def __len__(self):
        return self.grid.N


@dataclass(frozen=True)
class InvariantReport:
    E: float
    F: float
    h1_norm: float
    linf_norm: float


def _spectrum(f: GridFunction) -> np.ndarray:
    return np.fft.rfft(f.values)


def _from_spectrum(grid: Grid, fh: np.ndarray) -> GridFunction:
    return GridFunction(grid, np.fft.irfft(fh, grid.N))


def derivative(f: GridFunction) -> GridFunction:
    """Derivative of the trigonometric interpolant, sampled at the nodes."""
    return _from_spectrum(f.grid, 1j * f.grid.k_deriv * _spectrum(f))


def helmholtz_solve(f: GridFunction) -> GridFunction:
    """Solve g - g_xx = f on the period by dividing each mode by 1 + k^2."""
    k = f.grid.k
    return _from_spectrum(f.grid, _spectrum(f) / (1.0 + k * k))


def green_convolve(f: GridFunction) -> GridFunction:
    """p * f with p(x) = exp(-|x|)/2 periodized; the same operator as
    :func:`helmholtz_solve`."""
    return helmholtz_solve(f)


def potential(f: GridFunction, *, allow_nonsmooth: bool = False) -> GridFunction:
    """y = u - u_xx.

    For kinked data ``y`` contains Dirac masses that the grid cannot hold, so
    such input is rejected unless ``allow_nonsmooth`` is set.
    """
    if not f.smooth and not allow_nonsmooth:
        raise NonSmoothDataError("potential of a kinked profile is a measure; refusing")
    k = f.grid.k_deriv
    return _from_spectrum(f.grid, (1.0 + k * k) * _spectrum(f))


def slope_samples(f: GridFunction) -> np.ndarray:
    """Nodal slope: grid derivative for smooth data, mean one-sided slope otherwise."""
    if f.smooth:
        return derivative(f).values
    left, right = f.slopes
    return 0.5 * (left + right)


def slope_squared(f: GridFunction) -> np.ndarray:
    """u_x^2 at the nodes; at a kink the two one-sided squares are averaged."""
    if f.smooth:
        ux = derivative(f).values
        return ux * ux
    left, right = f.slopes
    return 0.5 * (left**2 + right**2)


def invariants_of(f: GridFunction, gamma: float) -> InvariantReport:
    """Energy E = int u^2 + u_x^2 and F = int u^3 + gamma u u_x^2 (trapezoid rule)."""
    u = f.values
    ux2 = slope_squared(f)
    h = f.grid.h
    E = h * float(np.sum(u * u + ux2))
    F = h * float(np.sum(u**3 + gamma * u * ux2))
    return InvariantReport(E=E, F=F, h1_norm=math.sqrt(E), linf_norm=float(np.max(np.abs(u))))


def integrate(f: GridFunction) -> float:
    """Trapezoid rule over one period."""
    return f.grid.h * float(np.sum(f.values))


def sample_at(f: GridFunction, x):
    """Evaluate the trigonometric interpolant of ``f`` at arbitrary positions.

    Accepts a scalar or an array; positions are reduced modulo L.
    """
    return evaluate_spectrum(f.grid, _spectrum(f), x)


def evaluate_spectrum(grid: Grid, fh: np.ndarray, x):
    """Interpolant with rfft coefficients ``fh`` at positions ``x``.

    ``fh`` may carry leading batch axes; the result then has shape
    ``fh.shape[:-1] + np.shape(x)``.
    """
    xs = np.asarray(x, dtype=float)
    scalar = xs.ndim == 0
    xs = np.atleast_1d(xs)
    n = grid.N
    w = np.full(fh.shape[-1], 2.0)
    w[0] = 1.0
    w[-1] = 1.0  # Nyquist counted once, as a cosine
    phase = np.exp(1j * np.outer(grid.k, xs + 0.5 * grid.L))
    out = np.real((fh * w) @ phase) / n
    if scalar:
        return out[..., 0] if out.ndim > 1 else float(out[0])
    return out


def shift(f: GridFunction, s: float) -> GridFunction:
    """Translate the interpolant of ``f`` by ``s`` (result(x) = f(x - s))."""
    fh = _spectrum(f) * np.exp(-1j * f.grid.k * s)
    fh[-1] = fh[-1].real  # keep the Nyquist coefficient real
    return _from_spectrum(f.grid, fh)


def from_fourier(grid: Grid, transform) -> GridFunction:
    """Band-limited projection of an L-periodized line function.

    ``transform(xi)`` returns the line Fourier transform
    ``int f(x) exp(-i xi x) dx``; the periodization has Fourier-series
    coefficients ``transform(k)/L``.  Kinked data built this way avoid the
    O(h^2) aliasing error that plain sampling carries.
    """
    k = grid.k
    coeff = np.asarray(transform(k), dtype=complex) / grid.L
    # nodes start at -L/2; the +/- Nyquist pair enters with half weight each
    coeff = coeff * np.exp(1j * k * (-0.5 * grid.L)) * grid.N
    coeff[-1] = coeff[-1].real
    return _from_spectrum(grid, coeff)


def write_csv(f: GridFunction, path, *, column: str = "value") -> None:
    """One row per node, header ``x,<column>``, 17 significant digits."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", column])
        for xi, vi in zip(f.grid.x, f.values):
            w.writerow([f"{xi:.17g}", f"{vi:.17g}"])


def read_csv(path, L: float) -> GridFunction:
    """Inverse of :func:`write_csv`; the period cannot be recovered from the
    nodes alone and must be supplied."""
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    vals = np.array([float(r[1]) for r in rows[1:]])
    return GridFunction(Grid(L, len(vals)), vals)
