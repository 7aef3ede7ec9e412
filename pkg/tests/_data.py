"""Shared random test data."""

import numpy as np

from rodbreak.field import GridFunction


def random_bumps(grid, rng, *, max_bumps=4, spread=5.0):
    """Sum of 1..max_bumps signed Gaussians centred in [-spread, spread]."""
    x = grid.x
    u = np.zeros_like(x)
    for _ in range(int(rng.integers(1, max_bumps + 1))):
        c = rng.uniform(-1.5, 1.5)
        x0 = rng.uniform(-spread, spread)
        w = rng.uniform(0.5, 2.0)
        u += c * np.exp(-((x - x0) / w) ** 2)
    return GridFunction(grid, u)


def random_potential_datum(grid, rng):
    """u = p * y with y a signed sum of bumps (covers the sign-pattern criteria)."""
    from rodbreak.field import green_convolve
    return green_convolve(random_bumps(grid, rng))
