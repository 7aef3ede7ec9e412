"""Constants of the hyperelastic rod family that depend only on gamma.

``delta_of`` is the best constant in the nonlocal lower bound used along
characteristics, ``beta_of`` the slope coefficient of the local blowup
criterion, and ``extremal_root_of`` the decay rate of the profile that makes
the nonlocal bound an equality at the origin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


class DomainError(ValueError):
    """Raised when gamma (or another model parameter) is outside the range
    where a formula is defined."""


def _check(gamma: float, lo: float, hi: float, *, lo_open: bool = False, name: str) -> float:
    gamma = float(gamma)
    if not math.isfinite(gamma):
        raise DomainError(f"{name}: gamma must be finite, got {gamma!r}")
    below = gamma <= lo if lo_open else gamma < lo
    if below or gamma > hi:
        left = "(" if lo_open else "["
        raise DomainError(f"{name}: gamma={gamma!r} outside {left}{lo}, {hi}]")
    return gamma


def delta_of(gamma: float) -> float:
    """(sqrt(gamma)/4) * (sqrt(12 - 3 gamma) - sqrt(gamma)) for 0 <= gamma <= 4."""
    gamma = _check(gamma, 0.0, 4.0, name="delta_of")
    s = math.sqrt(gamma)
    return 0.25 * s * (math.sqrt(12.0 - 3.0 * gamma) - s)


def _beta_squared(gamma: float) -> float:
    # (3 - gamma)/gamma - 2 delta/gamma, written without the cancelling sqrt(gamma)
    return -0.5 + 3.0 / gamma - math.sqrt(12.0 - 3.0 * gamma) / (2.0 * math.sqrt(gamma))


def beta_of(gamma: float) -> float:
    """Criterion coefficient beta_gamma, defined for 1 <= gamma <= 4.

    Values lie in [0, 1]; beta(1) = 1, beta(3) = 0, beta(4) = 1/2.
    """
    gamma = _check(gamma, 1.0, 4.0, name="beta_of")
    # rounding can push the square a few ulps below zero at gamma=3
    return math.sqrt(max(_beta_squared(gamma), 0.0))


def beta_extended_of(gamma: float) -> float:
    """Same formula as :func:`beta_of` continued to 0 < gamma <= 4.

    Only the Sobolev-slope criterion uses values below gamma=1, where the
    coefficient exceeds one.
    """
    gamma = _check(gamma, 0.0, 4.0, lo_open=True, name="beta_extended_of")
    return math.sqrt(max(_beta_squared(gamma), 0.0))


def extremal_root_of(gamma: float) -> float:
    """Largest real root a of a**2 + a = (3 - gamma)/gamma, 0 < gamma <= 4.

    Negative for 3 < gamma <= 4; satisfies gamma * a = 2 * delta_of(gamma).
    """
    gamma = _check(gamma, 0.0, 4.0, lo_open=True, name="extremal_root_of")
    disc = 1.0 + 4.0 * (3.0 - gamma) / gamma
    return 0.5 * (-1.0 + math.sqrt(max(disc, 0.0)))


@dataclass(frozen=True)
class RodParameters:
    gamma: float
    delta: float | None
    beta: float | None
    extremal_root: float | None

    @classmethod
    def from_gamma(cls, gamma: float) -> "RodParameters":
        """Collect every constant defined at ``gamma``; undefined ones are None."""
        gamma = float(gamma)
        delta = delta_of(gamma) if 0.0 <= gamma <= 4.0 else None
        beta = beta_of(gamma) if 1.0 <= gamma <= 4.0 else None
        root = extremal_root_of(gamma) if 0.0 < gamma <= 4.0 else None
        return cls(gamma=gamma, delta=delta, beta=beta, extremal_root=root)
