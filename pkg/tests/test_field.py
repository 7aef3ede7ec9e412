import math

import numpy as np
import pytest

from rodbreak.field import (Grid, GridFunction, NonSmoothDataError, derivative, from_fourier,
                            green_convolve, helmholtz_solve, integrate, invariants_of, potential,
                            read_csv, sample_at, shift, write_csv)
from rodbreak.profiles import gaussian, peakon


def gf(grid, fn):
    return GridFunction(grid, fn(grid.x))


def band_limited(grid, seed=0, modes=12):
    rng = np.random.default_rng(seed)
    x = grid.x
    out = np.zeros_like(x)
    for m in range(1, modes + 1):
        k = 2 * np.pi * m / grid.L
        out += rng.normal() * np.cos(k * x) + rng.normal() * np.sin(k * x)
    return GridFunction(grid, out + rng.normal())


class TestGrid:
    def test_nodes(self):
        g = Grid(2 * np.pi, 16)
        assert g.h == pytest.approx(2 * np.pi / 16)
        assert g.x[0] == pytest.approx(-np.pi)
        assert g.x[-1] == pytest.approx(np.pi - g.h)

    @pytest.mark.parametrize("N", [8, 24, 100, 0])
    def test_bad_point_count(self, N):
        with pytest.raises(ValueError):
            Grid(1.0, N)

    def test_bad_period(self):
        with pytest.raises(ValueError):
            Grid(-1.0, 16)

    def test_mirror(self):
        g = Grid(10.0, 32)
        np.testing.assert_allclose(g.x[g.mirror_indices()], g.wrap(-g.x), atol=1e-13)

    def test_nonfinite_rejected(self):
        g = Grid(1.0, 16)
        v = np.zeros(16)
        v[3] = np.nan
        with pytest.raises(ValueError):
            GridFunction(g, v)

    def test_values_read_only(self):
        f = GridFunction(Grid(1.0, 16), np.zeros(16))
        with pytest.raises(ValueError):
            f.values[0] = 1.0


class TestDerivative:
    def test_constant(self):
        g = Grid(3.0, 32)
        assert np.max(np.abs(derivative(GridFunction(g, np.full(32, 4.2))).values)) < 1e-13

    @pytest.mark.parametrize("k", [1, 3, 7])
    def test_sine_mode(self, k):
        g = Grid(2 * np.pi, 64)
        d = derivative(gf(g, lambda x: np.sin(k * x)))
        np.testing.assert_allclose(d.values, k * np.cos(k * g.x), atol=1e-12)

    def test_gaussian(self):
        g = Grid(40.0, 512)
        d = derivative(gf(g, lambda x: np.exp(-x * x)))
        assert np.max(np.abs(d.values + 2 * g.x * np.exp(-g.x ** 2))) < 1e-10


class TestHelmholtz:
    def test_constant(self):
        g = Grid(5.0, 32)
        np.testing.assert_allclose(helmholtz_solve(GridFunction(g, np.full(32, 2.5))).values, 2.5, atol=1e-14)

    def test_cos_mode(self):
        g = Grid(2 * np.pi, 64)
        out = helmholtz_solve(gf(g, lambda x: np.cos(3 * x)))
        np.testing.assert_allclose(out.values, np.cos(3 * g.x) / 10.0, atol=1e-14)

    def test_inverse_pair(self):
        g = Grid(12.0, 128)
        u = band_limited(g)
        back = helmholtz_solve(GridFunction(g, u.values - derivative(derivative(u)).values))
        np.testing.assert_allclose(back.values, u.values, atol=1e-10)
        np.testing.assert_allclose(potential(green_convolve(u)).values, u.values, atol=1e-10)

    def test_alias_bitwise(self):
        g = Grid(9.0, 64)
        u = band_limited(g, seed=3)
        assert np.array_equal(green_convolve(u).values, helmholtz_solve(u).values)

    def test_kernel_oracle(self):
        # band-limited periodized e^{-|x|}; line transform 2/(1+xi^2)
        g = Grid(80.0, 4096)
        f = from_fourier(g, lambda k: 2.0 / (1.0 + k * k))
        out = green_convolve(f)
        ax = np.abs(g.x)
        assert np.max(np.abs(out.values - 0.5 * (1 + ax) * np.exp(-ax))) < 1e-6

    def test_positivity(self):
        g = Grid(40.0, 512)
        rng = np.random.default_rng(7)
        for _ in range(5):
            centers = rng.uniform(-10, 10, 4)
            y = sum(rng.uniform(0.1, 2) * np.exp(-((g.x - c) / rng.uniform(0.3, 2)) ** 2) for c in centers)
            assert np.min(green_convolve(GridFunction(g, y)).values) >= 0.0


class TestPotential:
    def test_cos_mode(self):
        g = Grid(2 * np.pi, 64)
        y = potential(gf(g, lambda x: np.cos(2 * x)))
        np.testing.assert_allclose(y.values, 5 * np.cos(2 * g.x), atol=1e-12)

    def test_gaussian(self):
        g = Grid(40.0, 512)
        y = potential(gf(g, lambda x: np.exp(-x * x)))
        assert np.max(np.abs(y.values - (3 - 4 * g.x ** 2) * np.exp(-g.x ** 2))) < 1e-8

    def test_kinked_refused(self):
        g = Grid(40.0, 256)
        with pytest.raises(NonSmoothDataError):
            potential(peakon(1.0, 0.0, g))


class TestInvariants:
    def test_zero(self):
        rep = invariants_of(GridFunction(Grid(4.0, 16), np.zeros(16)), 1.0)
        assert rep.E == 0 and rep.F == 0 and rep.h1_norm == 0 and rep.linf_norm == 0

    def test_peakon_energy(self):
        # trapezoid error of the kink is about 2h^2/3; 2^17 nodes keep it below 1e-6
        g = Grid(80.0, 2 ** 17)
        rep = invariants_of(peakon(1.0, 0.0, g), 1.0)
        assert abs(rep.E - 2.0) < 1e-6
        assert abs(rep.F - 4.0 / 3.0) < 1e-4
        assert rep.h1_norm ** 2 == pytest.approx(rep.E, rel=1e-15)

    def test_gaussian_energy(self):
        g = Grid(40.0, 512)
        rep = invariants_of(gaussian(1.0, 0.0, 1.0, g), 0.0)
        assert abs(rep.E - 2 * math.sqrt(math.pi / 2)) < 1e-6
        # F at gamma=0 is the cube integral sqrt(pi/3)
        assert abs(rep.F - math.sqrt(math.pi / 3)) < 1e-10

    def test_embedding(self):
        for c, w in [(1.0, 1.0), (2.0, 0.5), (-1.0, 3.0)]:
            g = Grid(60.0, 1024)
            rep = invariants_of(gaussian(c, 0.0, w, g), 1.0)
            assert rep.linf_norm <= rep.h1_norm / math.sqrt(2) + 1e-6
        rep = invariants_of(peakon(1.0, 0.0, Grid(80.0, 8192)), 1.0)
        assert abs(rep.linf_norm - rep.h1_norm / math.sqrt(2)) < 1e-3

    def test_trapezoid_exact_on_modes(self):
        g = Grid(3.0, 64)
        f = gf(g, lambda x: 1.5 + np.cos(2 * np.pi * 5 * x / 3.0))
        assert integrate(f) == pytest.approx(4.5, abs=1e-12)


class TestInterpolation:
    def test_nodes_reproduced(self):
        g = Grid(7.0, 64)
        u = band_limited(g, seed=1)
        np.testing.assert_allclose(sample_at(u, g.x[[0, 5, 33]]), u.values[[0, 5, 33]], atol=1e-13)

    def test_sine_offgrid(self):
        g = Grid(2 * np.pi, 32)
        assert sample_at(gf(g, np.sin), 0.3) == pytest.approx(math.sin(0.3), abs=1e-12)

    def test_periodic_reduction(self):
        g = Grid(2 * np.pi, 32)
        f = gf(g, np.cos)
        assert sample_at(f, 0.4 + 4 * np.pi) == pytest.approx(math.cos(0.4), abs=1e-12)

    def test_shift_consistency(self):
        g = Grid(20.0, 256)
        u = gaussian(1.0, 0.3, 1.5, g)
        s = 1.234
        xs = np.array([-3.1, 0.0, 0.77, 5.5])
        np.testing.assert_allclose(sample_at(shift(u, s), xs), sample_at(u, xs - s), atol=1e-10)


def test_csv_round_trip(tmp_path):
    g = Grid(5.0, 32)
    u = band_limited(g, seed=4)
    p = tmp_path / "u.csv"
    write_csv(u, p)
    assert p.read_text().splitlines()[0] == "x,value"
    back = read_csv(p, 5.0)
    assert np.array_equal(back.values, u.values)
