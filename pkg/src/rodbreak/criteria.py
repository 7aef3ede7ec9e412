"""Blowup criteria evaluated on initial data.

Each criterion returns a :class:`CriterionVerdict`.  ``margin`` is the
quantity the criterion compares with zero, oriented so that a negative
margin means the criterion fires.  Infima over the line are minima over the
grid nodes; kinked data use their exact one-sided slopes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .field import (
    GridFunction,
    NonSmoothDataError,
    derivative,
    helmholtz_solve,
    invariants_of,
    potential,
    sample_at,
    slope_squared,
)
from .params import DomainError, beta_extended_of, beta_of, delta_of

SIGN_TOL = 1e-10  # relative to max|y0|
ODD_TOL = 1e-8  # relative to max|u0|
# slope margins this close to zero (relative to max|u0| + max|u0'|) are rounding
# noise, e.g. the exact tie u0' = -|u0| in exponential tails, and count as zero
ROUND_TOL = 1e-12


class PreconditionError(ValueError):
    """The datum does not satisfy what an operation assumes about it."""


@dataclass
class CriterionVerdict:
    name: str
    applicable: bool
    triggered: bool
    witness: float | tuple[float, float] | None
    margin: float | None
    details: dict = field(default_factory=dict, repr=False)

    def to_dict(self) -> dict:
        w = self.witness
        if isinstance(w, tuple):
            w = [float(w[0]), float(w[1])]
        elif w is not None:
            w = float(w)
        return {
            "name": self.name,
            "applicable": bool(self.applicable),
            "triggered": bool(self.triggered),
            "witness": w,
            "margin": None if self.margin is None else float(self.margin),
        }


@dataclass(frozen=True)
class BlowupBound:
    x0: float
    alpha0: float
    t0: float
    T_upper: float
    localization_halfwidth: float

    def to_dict(self) -> dict:
        return {k: float(v) for k, v in self.__dict__.items()}


def _slope_terms(u0: GridFunction, beta: float) -> np.ndarray:
    """u0' + beta |u0| at every node, the smaller one-sided value at kinks."""
    a = beta * np.abs(u0.values)
    if u0.smooth:
        return derivative(u0).values + a
    left, right = u0.slopes
    return np.minimum(left, right) + a


def _slope_scale(u0: GridFunction) -> float:
    s = derivative(u0).values if u0.smooth else np.concatenate(u0.slopes)
    return float(np.max(np.abs(u0.values)) + np.max(np.abs(s)))


def _min_slope(u0: GridFunction) -> tuple[float, int]:
    s = derivative(u0).values if u0.smooth else np.minimum(*u0.slopes)
    j = int(np.argmin(s))
    return float(s[j]), j


def _max_slope(u0: GridFunction) -> tuple[float, int]:
    s = derivative(u0).values if u0.smooth else np.maximum(*u0.slopes)
    j = int(np.argmax(s))
    return float(s[j]), j


def brandolese(u0: GridFunction, gamma: float) -> CriterionVerdict:
    """inf(u0' + beta_gamma |u0|) < 0, the local-in-space criterion for 1 <= gamma <= 4."""
    beta = beta_of(gamma)
    terms = _slope_terms(u0, beta)
    j = int(np.argmin(terms))
    margin = float(terms[j])
    if abs(margin) <= ROUND_TOL * _slope_scale(u0):
        margin = 0.0
    return CriterionVerdict("brandolese", True, margin < 0, float(u0.x[j]), margin,
                            details={"beta": beta})


def sobolev_slope(u0: GridFunction, gamma: float) -> CriterionVerdict:
    """min u0' < -(beta/sqrt 2) ||u0||_H1, with beta continued to 0 < gamma <= 4.

    At gamma = 1 (beta = 1) the threshold is -||u0||_H1/sqrt(2).
    """
    beta = beta_extended_of(gamma)
    h1 = invariants_of(u0, gamma).h1_norm
    smin, j = _min_slope(u0)
    margin = smin + beta / math.sqrt(2.0) * h1
    return CriterionVerdict("sobolev_slope", True, margin < 0, float(u0.x[j]), margin,
                            details={"beta": beta, "h1_norm": h1, "min_slope": smin})


def nonlocal_extended(u0: GridFunction, gamma: float) -> CriterionVerdict:
    """Slope thresholds sqrt((gamma-3)/gamma) ||u0||_H1 / sqrt 2 for gamma < 0 or gamma > 3.

    For gamma > 3 the criterion asks for a steep negative slope; for
    gamma < 0 for a steep positive one.
    """
    gamma = float(gamma)
    if 0.0 <= gamma <= 3.0:
        raise DomainError(f"nonlocal_extended needs gamma < 0 or gamma > 3, got {gamma!r}")
    const = math.sqrt((gamma - 3.0) / gamma) / math.sqrt(2.0)
    h1 = invariants_of(u0, gamma).h1_norm
    if gamma > 3.0:
        s, j = _min_slope(u0)
        margin = s + const * h1
    else:
        s, j = _max_slope(u0)
        margin = const * h1 - s
    return CriterionVerdict("nonlocal_extended", True, margin < 0, float(u0.x[j]), margin,
                            details={"constant": const, "h1_norm": h1})


def _smooth_potential(u0: GridFunction, name: str) -> np.ndarray:
    if not u0.smooth:
        raise NonSmoothDataError(f"{name}: potential of kinked data is a measure")
    return potential(u0).values


def _sign_pattern(y: np.ndarray) -> tuple[np.ndarray, float]:
    scale = float(np.max(np.abs(y))) if y.size else 0.0
    tol = SIGN_TOL * scale
    s = np.zeros(y.shape, dtype=int)
    s[y > tol] = 1
    s[y < -tol] = -1
    return s, tol


def constantin_sign(u0: GridFunction) -> CriterionVerdict:
    """y0 changes sign, nonnegative left of some x0 and nonpositive right of it."""
    y = _smooth_potential(u0, "constantin_sign")
    s, tol = _sign_pattern(y)
    x = u0.x
    pos = np.flatnonzero(s > 0)
    neg = np.flatnonzero(s < 0)
    # how far we are from having both signs
    v_signs = tol - min(float(y.max()), float(-y.min())) if y.size else tol
    # best split: violation of "y >= -tol on the left, y <= tol on the right"
    # split between nodes j and j+1
    left_bad = np.maximum.accumulate(-y) - tol
    right_bad = np.maximum.accumulate(y[::-1])[::-1] - tol
    v_split = float(np.maximum(left_bad[:-1], right_bad[1:]).min())
    triggered = bool(pos.size and neg.size and pos.max() < neg.min())
    witness = None
    if triggered:
        witness = float(0.5 * (x[pos.max()] + x[neg.min()]))
    margin = max(v_signs, v_split)
    return CriterionVerdict("constantin_sign", True, triggered, witness, margin)


def _weighted_tail_integrals(y: GridFunction, x1: float) -> tuple[float, float]:
    """int_{-L/2}^{x1} e^xi y dxi and int_{x1}^{L/2} e^-xi y dxi for the interpolant of y.

    With v = (1 + d/dx)^-1 y and w = (1 - d/dx)^-1 y the integrands are exact
    derivatives, (e^xi v)' and (-e^-xi w)', so both integrals are exact for
    the trigonometric interpolant.
    """
    grid = y.grid
    k = grid.k_deriv
    yh = np.fft.rfft(y.values)
    v = GridFunction(grid, np.fft.irfft(yh / (1.0 + 1j * k), grid.N))
    w = GridFunction(grid, np.fft.irfft(yh / (1.0 - 1j * k), grid.N))
    a = -0.5 * grid.L
    va, v1 = sample_at(v, np.array([a, x1]))
    wa, w1 = sample_at(w, np.array([a, x1]))
    left = math.exp(x1) * v1 - math.exp(a) * va
    right = math.exp(-x1) * w1 - math.exp(a) * wa  # w(L/2) = w(-L/2)
    return float(left), float(right)


def _crossings(yf: GridFunction, s: np.ndarray) -> list[float]:
    idx = np.flatnonzero(s)
    roots = []
    for i, j in zip(idx[:-1], idx[1:]):
        if s[i] != s[j]:
            xi, xj = yf.x[i], yf.x[j]
            roots.append(brentq(lambda t: sample_at(yf, t), xi, xj, xtol=1e-14, rtol=1e-14))
    return roots


def zhou_2004(u0: GridFunction) -> CriterionVerdict:
    """Some zero x1 of y0 with int_{-inf}^{x1} e^xi y0 > 0 and int_{x1}^{inf} e^-xi y0 < 0."""
    y = _smooth_potential(u0, "zhou_2004")
    yf = GridFunction(u0.grid, y)
    s, _ = _sign_pattern(y)
    ux = derivative(u0)
    best = None
    checks = []
    for x1 in _crossings(yf, s):
        left, right = _weighted_tail_integrals(yf, x1)
        u1 = sample_at(u0, x1)
        d1 = sample_at(ux, x1)
        # integration-by-parts identities for the same two integrals
        checks.append({"x1": x1, "left": left, "right": right,
                       "left_identity": (u1 - d1) * math.exp(x1),
                       "right_identity": (u1 + d1) * math.exp(-x1)})
        m = max(-left, right)
        if best is None or m < best[0]:
            best = (m, x1)
    if best is None:
        return CriterionVerdict("zhou_2004", True, False, None, None, details={"crossings": checks})
    margin, x1 = best
    return CriterionVerdict("zhou_2004", True, margin < 0, float(x1), float(margin),
                            details={"crossings": checks})


def mckean(u0: GridFunction) -> CriterionVerdict:
    """Nodes x1 < x2 with y0(x1) > 0 > y0(x2)."""
    y = _smooth_potential(u0, "mckean")
    _, tol = _sign_pattern(y)
    if y.size < 2:
        return CriterionVerdict("mckean", True, False, None, tol)
    # best y0(x1) over nodes left of each candidate x2
    running = np.maximum.accumulate(y)[:-1]
    is_new_max = np.r_[True, y[1:-1] > running[:-1]]
    prefix_arg = np.maximum.accumulate(np.where(is_new_max, np.arange(y.size - 1), 0))
    prefix_max = running
    strength = np.minimum(prefix_max, -y[1:])
    j = int(np.argmax(strength))
    m = float(strength[j])
    triggered = m > tol
    witness = (float(u0.x[prefix_arg[j]]), float(u0.x[j + 1])) if triggered else None
    return CriterionVerdict("mckean", True, triggered, witness, tol - m)


def odd_chh(u0: GridFunction) -> CriterionVerdict:
    """u0 odd and u0'(0) < 0."""
    grid = u0.grid
    u = u0.values
    scale = float(np.max(np.abs(u)))
    asym = float(np.max(np.abs(u + u[grid.mirror_indices()])))
    applicable = asym < ODD_TOL * scale
    j0 = grid.index_of(0.0)
    slope0 = float(derivative(u0).values[j0]) if u0.smooth else float(0.5 * (u0.slopes[0][j0] + u0.slopes[1][j0]))
    return CriterionVerdict("odd_chh", applicable, applicable and slope0 < 0, 0.0, slope0)


def run_battery(u0: GridFunction, gamma: float) -> list[CriterionVerdict]:
    """Every criterion whose gamma range covers ``gamma`` and whose
    preconditions the datum meets."""
    gamma = float(gamma)
    out = []
    if 1.0 <= gamma <= 4.0:
        out.append(brandolese(u0, gamma))
    if 0.0 < gamma <= 4.0:
        out.append(sobolev_slope(u0, gamma))
    if gamma < 0.0 or gamma > 3.0:
        out.append(nonlocal_extended(u0, gamma))
    if gamma == 1.0:
        if u0.smooth:
            out.extend([constantin_sign(u0), zhou_2004(u0), mckean(u0)])
        out.append(odd_chh(u0))
    return out


def blowup_bound_from_values(u_at: float, ux_at: float, h1_norm: float, gamma: float,
                             x0: float = 0.0) -> BlowupBound:
    """Upper bound on the blowup time from the Riccati argument along the characteristic from x0.

    alpha0 = (gamma/2)(u0'(x0)^2 - beta^2 u0(x0)^2).  While the slope is
    above -||u0||_H1 it decreases at least at rate alpha0; t0 is the first
    time the linear bound reaches -||u0||_H1 (zero if already there).  From
    t0 on g' <= -(gamma/4) g^2, which blows up before t0 + 4/(gamma |g(t0)|).
    """
    beta = beta_of(gamma)
    if not ux_at < -beta * abs(u_at):
        raise PreconditionError(
            f"criterion fails at x0={x0}: u0'={ux_at!r} >= -beta|u0| = {-beta * abs(u_at)!r}")
    alpha0 = 0.5 * gamma * (ux_at**2 - beta**2 * u_at**2)
    t0 = 0.0 if ux_at <= -h1_norm else (ux_at + h1_norm) / alpha0
    T = t0 + 4.0 / (gamma * max(h1_norm, abs(ux_at)))
    return BlowupBound(x0=float(x0), alpha0=alpha0, t0=t0, T_upper=T,
                       localization_halfwidth=gamma * h1_norm * T / math.sqrt(2.0))


def blowup_bound(u0: GridFunction, gamma: float, x0: float) -> BlowupBound:
    h1 = invariants_of(u0, gamma).h1_norm
    if u0.smooth:
        u_at = float(sample_at(u0, x0))
        ux_at = float(sample_at(derivative(u0), x0))
    else:
        j = u0.grid.index_of(x0)
        if abs(u0.grid.wrap(u0.x[j] - x0)) > 1e-12 * u0.grid.L:
            raise PreconditionError("kinked data: x0 must be a grid node")
        u_at = float(u0.values[j])
        ux_at = float(min(u0.slopes[0][j], u0.slopes[1][j]))
    return blowup_bound_from_values(u_at, ux_at, h1, gamma, x0)


def lemma_gap(u: GridFunction, gamma: float, beta: float, sign: int = 1) -> np.ndarray:
    """(p + sign*beta*p') * ((3-gamma)/2 u^2 + gamma/2 u_x^2) - delta u^2 at the nodes.

    Nonnegative for 0 <= gamma <= 4 and 0 <= beta <= 1.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    delta = delta_of(gamma)
    w = 0.5 * (3.0 - gamma) * u.values**2 + 0.5 * gamma * slope_squared(u)
    g = helmholtz_solve(GridFunction(u.grid, w))
    conv = g.values + sign * beta * derivative(g).values
    return conv - delta * u.values**2
