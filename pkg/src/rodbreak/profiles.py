"""Initial data generators.

All profiles are L-periodized so that line problems and the torus share one
code path.  Kinked profiles (``peakon``, ``extremal_profile``) return grid
functions carrying their exact one-sided slopes.
"""

from __future__ import annotations

import ast
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad, solve_ivp

from .field import Grid, GridFunction, green_convolve
from .params import DomainError, extremal_root_of


class ResolutionError(ValueError):
    """The requested profile does not fit the periodic domain."""


def _periodized_exp(grid: Grid, rate: float, x0: float):
    """Values and right/left slopes of sum_n exp(-rate |x - x0 + nL|).

    Uses cosh(rate (|d| - L/2)) / sinh(rate L/2) in an overflow-free form.
    """
    d = grid.wrap(grid.x - x0)
    ad = np.abs(d)
    L = grid.L
    tail = math.exp(-rate * L)
    denom = 1.0 - tail
    near = np.exp(-rate * ad)
    far = np.exp(rate * (ad - L))
    values = (near + far) / denom
    mag = rate * (near - far) / denom  # |slope| away from the kink
    right = np.where(d >= 0, -mag, mag)
    left = np.where(d > 0, -mag, mag)
    return values, left, right


def peakon(c: float, x0: float, grid: Grid) -> GridFunction:
    """Periodization of c exp(-|x - x0|), with one-sided slopes -/+c at the peak."""
    values, left, right = _periodized_exp(grid, 1.0, x0)
    return GridFunction(grid, c * values, slopes=(c * left, c * right))


def gaussian(c: float, x0: float, w: float, grid: Grid) -> GridFunction:
    if not w > 0:
        raise DomainError(f"gaussian width must be positive, got {w!r}")
    d = grid.wrap(grid.x - x0)
    vals = sum(np.exp(-(((d + n * grid.L) / w) ** 2)) for n in (-1, 0, 1))
    return GridFunction(grid, c * vals)


def odd_sine(c: float, mode: int, grid: Grid) -> GridFunction:
    """c sin(2 pi mode x / L): odd about the origin."""
    return GridFunction(grid, c * np.sin(2.0 * np.pi * mode * grid.x / grid.L))


def extremal_profile(gamma: float, grid: Grid) -> GridFunction:
    """exp(-|a| |x|) with a the extremal root; equality case of the nonlocal bound at 0.

    For 3 < gamma <= 4 the root is negative and the decaying choice
    exp(a |x|) is used, which is the same expression.
    """
    gamma = float(gamma)
    if not (0.0 < gamma <= 4.0) or gamma == 3.0:
        raise DomainError(f"extremal_profile needs gamma in (0,3) U (3,4], got {gamma!r}")
    rate = abs(extremal_root_of(gamma))
    values, left, right = _periodized_exp(grid, rate, 0.0)
    return GridFunction(grid, values, slopes=(left, right))


def from_potential(y0: GridFunction) -> GridFunction:
    """u = p * y0."""
    return green_convolve(y0)


def _solitary_shape(gamma: float, xs: np.ndarray) -> np.ndarray:
    """phi(|x|) for the unit-amplitude solitary wave, phi(0) = 1.

    phi solves (phi')^2 (1 - gamma phi) = phi^2 (1 - phi).  Near the crest
    the substitution phi = 1 - s^2 removes the square-root singularity:
    ds/dx = (1 - s^2) / (2 sqrt(1 - gamma + gamma s^2)), s(0) = 0.
    Once phi < 1/2 the tail is integrated in log phi for full relative
    accuracy: d(log phi)/dx = -sqrt((1 - phi)/(1 - gamma phi)).
    """
    xs = np.abs(np.asarray(xs, dtype=float))
    xmax = float(xs.max()) if xs.size else 0.0
    opts = dict(method="DOP853", rtol=1e-13, atol=1e-15, dense_output=True)

    def crest(_, s):
        return [(1.0 - s[0] ** 2) / (2.0 * math.sqrt(1.0 - gamma + gamma * s[0] ** 2))]

    s_half = math.sqrt(0.5)

    def reach_half(_, s):
        return s[0] - s_half

    reach_half.terminal = True
    sol1 = solve_ivp(crest, (0.0, max(xmax, 50.0)), [0.0], events=reach_half, **opts)
    x_half = float(sol1.t_events[0][0])

    def tail(_, lp):
        phi = math.exp(lp[0])
        return [-math.sqrt((1.0 - phi) / (1.0 - gamma * phi))]

    out = np.empty_like(xs)
    inner = xs <= x_half
    s = sol1.sol(xs[inner])[0]
    out[inner] = (1.0 - s) * (1.0 + s)
    if np.any(~inner):
        sol2 = solve_ivp(tail, (x_half, max(xmax, x_half + 1e-9)), [math.log(0.5)], **opts)
        out[~inner] = np.exp(sol2.sol(xs[~inner])[0])
    return out


def solitary_wave(gamma: float, c: float, grid: Grid, shift: float = 0.0) -> GridFunction:
    """Smooth solitary wave c phi(x - shift) for 0 < gamma < 1; travels at speed c."""
    gamma = float(gamma)
    if not 0.0 < gamma < 1.0:
        raise DomainError(f"smooth solitary waves need 0 < gamma < 1, got {gamma!r}")
    if c == 0:
        raise DomainError("solitary wave amplitude must be nonzero")
    # full width at half maximum
    fwhm = 2.0 * _half_width(gamma)
    if fwhm > grid.L / 4:
        raise ResolutionError(f"profile width {fwhm:.3g} exceeds L/4 = {grid.L / 4:.3g}")
    d = grid.wrap(grid.x - shift)
    return GridFunction(grid, c * _solitary_shape(gamma, d))


def _half_width(gamma: float) -> float:
    # phi = 1/2 <=> s = 1/sqrt(2); x(s) = int_0^s 2 sqrt(1-gamma+gamma t^2)/(1-t^2) dt
    val, _ = quad(lambda t: 2.0 * math.sqrt(1.0 - gamma + gamma * t * t) / (1.0 - t * t),
                  0.0, math.sqrt(0.5), epsabs=1e-14, epsrel=1e-13)
    return val


def solitary_slope(gamma: float, c: float, values: np.ndarray, x: np.ndarray) -> np.ndarray:
    """phi' from the first-order relation, with the sign of -x (decreasing away from the crest)."""
    phi = np.asarray(values, dtype=float) / c
    mag = np.abs(phi) * np.sqrt(np.clip((1.0 - phi) / (1.0 - gamma * phi), 0.0, None))
    return -c * np.sign(x) * mag


# Expression profiles -------------------------------------------------------

_ALLOWED_FUNCS = {
    "sin": np.sin, "cos": np.cos, "tan": np.tan, "exp": np.exp, "log": np.log,
    "sqrt": np.sqrt, "abs": np.abs, "tanh": np.tanh, "cosh": np.cosh, "sinh": np.sinh,
    "arctan": np.arctan, "sign": np.sign,
}
_ALLOWED_NAMES = {"x": None, "pi": math.pi, "e": math.e, "L": None}
_ALLOWED_NODES = (
    ast.Expression, ast.BinOp, ast.UnaryOp, ast.Call, ast.Name, ast.Load, ast.Constant,
    ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow, ast.USub, ast.UAdd, ast.Mod,
)


def expression(expr: str, grid: Grid) -> GridFunction:
    """Evaluate an arithmetic expression in ``x`` (and ``L``, ``pi``) on the nodes.

    Only arithmetic operators and the numpy functions in ``_ALLOWED_FUNCS``
    are accepted.
    """
    tree = ast.parse(expr, mode="eval")
    for node in ast.walk(tree):
        if not isinstance(node, _ALLOWED_NODES):
            raise ValueError(f"disallowed syntax in profile expression: {type(node).__name__}")
        if isinstance(node, ast.Name) and node.id not in _ALLOWED_NAMES and node.id not in _ALLOWED_FUNCS:
            raise ValueError(f"unknown name {node.id!r} in profile expression")
        if isinstance(node, ast.Call) and not (isinstance(node.func, ast.Name) and node.func.id in _ALLOWED_FUNCS):
            raise ValueError("only whitelisted functions may be called")
        if isinstance(node, ast.Constant) and not isinstance(node.value, (int, float)):
            raise ValueError("only numeric constants are allowed")
    env = dict(_ALLOWED_FUNCS, x=grid.x, pi=math.pi, e=math.e, L=grid.L)
    vals = eval(compile(tree, "<profile>", "eval"), {"__builtins__": {}}, env)
    return GridFunction(grid, np.broadcast_to(np.asarray(vals, dtype=float), (grid.N,)))


# Declarative specs ---------------------------------------------------------

KINDS = ("peakon", "gaussian", "odd_sine", "extremal", "from_potential", "solitary_wave",
         "expression", "zero")


@dataclass(frozen=True)
class ProfileSpec:
    kind: str
    params: dict = field(default_factory=dict)

    def build(self, grid: Grid) -> GridFunction:
        return build_profile(self, grid)


def build_profile(spec: ProfileSpec, grid: Grid) -> GridFunction:
    p = dict(spec.params)
    kind = spec.kind
    if kind == "peakon":
        return peakon(p.get("c", 1.0), p.get("x0", 0.0), grid)
    if kind == "gaussian":
        return gaussian(p.get("c", 1.0), p.get("x0", 0.0), p.get("w", 1.0), grid)
    if kind == "odd_sine":
        return odd_sine(p.get("c", 1.0), int(p.get("mode", 1)), grid)
    if kind == "extremal":
        return extremal_profile(p["gamma"], grid)
    if kind == "solitary_wave":
        return solitary_wave(p["gamma"], p.get("c", 1.0), grid, p.get("x0", 0.0))
    if kind == "expression":
        return expression(p["expr"], grid)
    if kind == "zero":
        return GridFunction(grid, np.zeros(grid.N))
    if kind == "from_potential":
        # potential given as a signed sum of Gaussian bumps
        y = np.zeros(grid.N)
        for bump in p.get("bumps", []):
            y = y + gaussian(bump.get("c", 1.0), bump.get("x0", 0.0), bump.get("w", 1.0), grid).values
        return from_potential(GridFunction(grid, y))
    raise DomainError(f"unknown profile kind {kind!r}")
