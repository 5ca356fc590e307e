import math
import warnings

import numpy as np
import pytest

from diracmap.errors import GridError, WraparoundWarning
from diracmap.fields import GridSpec, SpinorField, density, max_norm, total_probability
from diracmap.flat import (LEFT_MOVER, U_NEG, U_POS, GaussianPacket, evolve_gaussian_closed_form,
                           evolve_spectral, flat_record, gaussian_initial)

SIGMA = 5.0
X0 = -10.0


def gaussian_packet_oracle(x, t, x0=X0, sigma=SIGMA):
    """Right-moving Gaussian written out independently of the package."""
    n = math.sqrt(2 * math.pi * sigma**2)
    return np.exp(-((t - (x - x0)) ** 2) / sigma**2) / math.sqrt(n)


@pytest.fixture
def packet():
    return GaussianPacket(X0, SIGMA)


class TestBasis:
    def test_unit_and_eigen(self):
        sx = np.array([[0, 1], [1, 0]])
        for u in (U_POS, U_NEG):
            assert np.linalg.norm(u) == pytest.approx(1.0)
            np.testing.assert_allclose(sx @ u, u)
        np.testing.assert_allclose(sx @ LEFT_MOVER, -LEFT_MOVER)


class TestGrid:
    def test_points(self):
        g = GridSpec(-1.0, 1.0, 16)
        assert g.dx == 0.125
        assert g.x[0] == -1.0 and g.x[-1] == pytest.approx(0.875)

    @pytest.mark.parametrize("args", [(1.0, 1.0, 32), (2.0, 1.0, 32), (0.0, 1.0, 8)])
    def test_invalid(self, args):
        with pytest.raises(GridError):
            GridSpec(*args)

    def test_parse(self):
        assert GridSpec.parse("2:130:4096") == GridSpec(2.0, 130.0, 4096)
        with pytest.raises(GridError):
            GridSpec.parse("2:130")

    def test_spinor_length_checked(self):
        g = GridSpec(0.0, 1.0, 16)
        with pytest.raises(GridError):
            SpinorField(g, np.zeros(16), np.zeros(15))
        with pytest.raises(ValueError):
            SpinorField(g, np.full(16, np.nan), np.zeros(16))


class TestGaussianInitial:
    def test_peak(self, packet, wide_grid):
        f = gaussian_initial(packet, wide_grid)
        j = int(np.argmin(np.abs(wide_grid.x - X0)))
        assert wide_grid.x[j] == pytest.approx(X0, abs=1e-12)
        peak = (2 * math.pi * 25) ** -0.25
        assert f.up[j].real == pytest.approx(peak, rel=1e-15)
        assert f.down[j].real == pytest.approx(peak, rel=1e-15)

    def test_normalised(self, packet, wide_grid):
        assert total_probability(gaussian_initial(packet, wide_grid)) == pytest.approx(1.0, abs=1e-6)

    def test_norm_over_packet_window(self, packet):
        g = GridSpec(X0 - 10 * SIGMA, X0 + 10 * SIGMA, 4000)
        x = np.linspace(g.x_min, g.x_max, 8001)
        rho = 2 * gaussian_packet_oracle(x, 0.0) ** 2
        assert np.trapezoid(rho, x) == pytest.approx(1.0, abs=1e-6)

    def test_components_equal(self, packet, wide_grid):
        f = gaussian_initial(packet, wide_grid)
        assert np.array_equal(f.up, f.down)

    def test_grid_too_small(self, packet):
        with pytest.raises(GridError):
            gaussian_initial(packet, GridSpec(-25.0, 5.0, 256))

    def test_matches_oracle(self, packet, wide_grid):
        np.testing.assert_allclose(gaussian_initial(packet, wide_grid).up.real,
                                   gaussian_packet_oracle(wide_grid.x, 0.0), rtol=0, atol=1e-16)

    def test_bad_width(self):
        with pytest.raises(GridError):
            GaussianPacket(0.0, 0.0)


class TestClosedForm:
    def test_t0_is_initial(self, packet, wide_grid):
        a = evolve_gaussian_closed_form(packet, wide_grid, 0.0)
        b = gaussian_initial(packet, wide_grid)
        assert np.array_equal(a.up, b.up) and np.array_equal(a.down, b.down)

    def test_translation(self, packet, wide_grid):
        f = evolve_gaussian_closed_form(packet, wide_grid, 20.0)
        assert wide_grid.x[np.argmax(density(f))] == pytest.approx(10.0, abs=1e-12)
        assert total_probability(f) == pytest.approx(1.0, abs=1e-6)

    def test_matches_oracle(self, packet, wide_grid):
        for t in (3.0, 17.5):
            f = evolve_gaussian_closed_form(packet, wide_grid, t)
            np.testing.assert_allclose(f.up.real, gaussian_packet_oracle(wide_grid.x, t), rtol=0, atol=1e-16)

    def test_clipped_late(self, packet):
        with pytest.raises(GridError):
            evolve_gaussian_closed_form(packet, GridSpec(-50.0, 20.0, 512), 20.0)

    def test_negative_time(self, packet, wide_grid):
        with pytest.raises(ValueError):
            evolve_gaussian_closed_form(packet, wide_grid, -1.0)

    @staticmethod
    def _residual(t, dx, dt):
        # phi = (g, g) and sigma_x swaps the components, so i d_t phi + i sigma_x d_x phi = 0
        # reduces to d_t g + d_x g = 0 per component
        x = np.linspace(X0 + t - 15, X0 + t + 15, 601)
        d_t = (gaussian_packet_oracle(x, t + dt) - gaussian_packet_oracle(x, t - dt)) / (2 * dt)
        d_x = (gaussian_packet_oracle(x + dx, t) - gaussian_packet_oracle(x - dx, t)) / (2 * dx)
        return np.max(np.abs(d_t + d_x))

    @pytest.mark.parametrize("t", [0.0, 12.0])
    def test_free_equation_equal_steps(self, t):
        # with dt = dx the leading truncation terms of the two central differences cancel
        # exactly for a rigid translation, leaving roundoff only
        assert self._residual(t, 1e-3, 1e-3) <= 1e-9

    @pytest.mark.parametrize("t", [0.0, 12.0])
    def test_free_equation_second_order(self, t):
        r1 = self._residual(t, 1e-3, 5e-4)
        r2 = self._residual(t, 5e-4, 2.5e-4)
        assert r1 <= 1e-6
        assert r1 / r2 >= 3.9

    def test_package_closed_form_solves_free_equation(self, packet, wide_grid):
        h = 1e-3
        prev = evolve_gaussian_closed_form(packet, wide_grid, 10.0 - h)
        nxt = evolve_gaussian_closed_form(packet, wide_grid, 10.0 + h)
        d_t = (nxt.up - prev.up) / (2 * h)
        x = wide_grid.x
        d_x = (gaussian_packet_oracle(x + h, 10.0) - gaussian_packet_oracle(x - h, 10.0)) / (2 * h)
        assert np.max(np.abs(d_t + d_x)) <= 1e-9


class TestSpectral:
    @pytest.mark.parametrize("t", [5.0, 10.0, 20.0])
    def test_matches_closed_form(self, packet, wide_grid, t):
        init = gaussian_initial(packet, wide_grid)
        assert max_norm(evolve_spectral(init, t), evolve_gaussian_closed_form(packet, wide_grid, t)) <= 1e-8

    def test_plane_wave(self):
        g = GridSpec(0.0, 64.0, 256)
        k = 2 * math.pi * 5 / 64.0
        wave = np.exp(1j * k * g.x)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", WraparoundWarning)
            out = evolve_spectral(SpinorField(g, wave, wave), 3.3)
        ratio = out.up / wave
        assert np.max(np.abs(np.abs(out.up) - 1.0)) <= 1e-12
        assert np.max(np.abs(ratio - ratio[0])) <= 1e-12
        assert ratio[0] == pytest.approx(np.exp(-1j * k * 3.3), abs=1e-12)

    def test_left_mover(self, wide_grid):
        packet = GaussianPacket(20.0, SIGMA, spinor=(1.0, -1.0))
        init = gaussian_initial(packet, wide_grid)
        t = 15.0
        out = evolve_spectral(init, t)
        assert wide_grid.x[np.argmax(density(out))] == pytest.approx(20.0 - t, abs=1e-12)
        # characteristics: chi_minus(x, t) = chi_minus(x + t, 0)
        expected = packet.envelope(wide_grid.x + t)
        np.testing.assert_allclose(out.up, expected, atol=1e-10)
        np.testing.assert_allclose(out.down, -expected, atol=1e-10)

    def test_unitarity_and_chirality(self, wide_grid):
        packet = GaussianPacket(-30.0, 4.0, spinor=(1.0, 0.3))
        init = gaussian_initial(packet, wide_grid)
        p0 = total_probability(init)
        cp0, cm0 = (np.sum(np.abs(c) ** 2) for c in init.chirality)
        for t in np.linspace(0, 40, 9):
            out = evolve_spectral(init, t)
            assert abs(total_probability(out) - p0) <= 1e-10
            cp, cm = (np.sum(np.abs(c) ** 2) for c in out.chirality)
            assert abs(cp - cp0) * wide_grid.dx <= 1e-10
            assert abs(cm - cm0) * wide_grid.dx <= 1e-10

    def test_semigroup(self, packet, wide_grid):
        init = gaussian_initial(packet, wide_grid)
        two = evolve_spectral(evolve_spectral(init, 7.0), 11.5)
        one = evolve_spectral(init, 18.5)
        assert max_norm(two, one) <= 1e-10
        assert two.time == pytest.approx(18.5)

    def test_requires_power_of_two(self, packet):
        g = GridSpec(-100.0, 100.0, 1000)
        with pytest.raises(GridError):
            evolve_spectral(gaussian_initial(packet, g), 1.0)

    def test_wraparound_warning(self, packet):
        g = GridSpec(-50.0, 50.0, 512)
        init = gaussian_initial(packet, g)
        with pytest.warns(WraparoundWarning):
            evolve_spectral(init, 45.0)

    def test_record_methods_agree(self, packet, wide_grid):
        times = [0.0, 10.0, 20.0]
        a = flat_record(packet, wide_grid, times, "closed")
        b = flat_record(packet, wide_grid, times, "spectral")
        assert a.provenance == "closed-form" and b.provenance == "spectral"
        for fa, fb in zip(a.fields, b.fields):
            assert max_norm(fa, fb) <= 1e-8


class TestDensity:
    def test_peak_density(self, packet, wide_grid):
        rho = density(gaussian_initial(packet, wide_grid))
        n = math.sqrt(2 * math.pi * SIGMA**2)
        assert rho.max() == pytest.approx(2 / n, rel=1e-14)

    def test_zero(self, wide_grid):
        z = np.zeros(wide_grid.n)
        assert not density(SpinorField(wide_grid, z, z)).any()

    def test_global_phase(self, packet, wide_grid):
        f = gaussian_initial(packet, wide_grid)
        np.testing.assert_allclose(density(f * np.exp(0.77j)), density(f), rtol=1e-14, atol=1e-300)
