import numpy as np
import pytest
from scipy.special import erf

from combsense import (
    GridCoverageError,
    GridMismatchError,
    PhaseModelError,
    PixelArray,
    SpectralMode,
    derivative_mode,
    gaussian_mode,
    hermite_gaussian_mode,
    make_grid,
    overlap,
    pixel_modes,
    project_coefficients,
    strip_dead_pixels,
    wavelength_to_angular,
)
from conftest import PHOTON_RATE, seeded


class TestWavelengthToAngular:
    def test_reference_values(self):
        omega0, d_omega = wavelength_to_angular(795e-9, 8.8e-9)
        assert omega0 == pytest.approx(2.369e15, rel=5e-4)
        assert d_omega == pytest.approx(1.114e13, rel=5e-4)

    def test_zero_bandwidth_limit(self):
        _, d_omega = wavelength_to_angular(795e-9, 1e-30)
        assert d_omega == pytest.approx(0.0, abs=1e-6)

    def test_scaling(self):
        w1, d1 = wavelength_to_angular(795e-9, 8.8e-9)
        w2, d2 = wavelength_to_angular(1590e-9, 8.8e-9)
        assert w2 == pytest.approx(w1 / 2, rel=1e-12)
        assert d2 == pytest.approx(d1 / 4, rel=1e-12)

    @pytest.mark.parametrize(
        "lam,fwhm", [(-795e-9, 8.8e-9), (0.0, 8.8e-9), (795e-9, -1e-9), (np.nan, 8.8e-9), (795e-9, np.inf), (795e-9, 800e-9)]
    )
    def test_domain_errors(self, lam, fwhm):
        with pytest.raises(ValueError):
            wavelength_to_angular(lam, fwhm)


class TestGaussianMode:
    def test_peak_value(self, mean_field, source):
        _, d_omega = source
        peak = np.abs(mean_field.amplitude).max()
        assert peak == pytest.approx((2 * np.pi * d_omega**2) ** -0.25, rel=1e-6)

    def test_unit_norm(self, mean_field):
        assert abs(mean_field.norm() - 1.0) < 1e-9

    def test_second_moment(self, mean_field, source):
        omega0, d_omega = source
        w = mean_field.grid.points
        m2 = np.trapezoid((w - omega0) ** 2 * np.abs(mean_field.amplitude) ** 2, w)
        assert m2 == pytest.approx(d_omega**2, rel=1e-6)

    def test_narrow_grid_rejected(self, source):
        omega0, d_omega = source
        narrow = make_grid(omega0, d_omega, span_sigma=2.0)
        with pytest.raises(GridCoverageError):
            gaussian_mode(narrow, omega0, d_omega)


class TestDerivativeMode:
    def test_analytic_shape(self, mean_field, deriv, source):
        omega0, d_omega = source
        w = mean_field.grid.points
        ana = (w - omega0) / d_omega * mean_field.amplitude
        ana = ana / np.sqrt(np.trapezoid(np.abs(ana) ** 2, w))
        l2 = np.sqrt(np.trapezoid(np.abs(deriv.amplitude - ana) ** 2, w))
        assert l2 < 1e-6

    def test_orthogonal_to_parent(self, mean_field, deriv):
        assert abs(overlap(mean_field, deriv)) < 1e-9

    def test_unit_norm(self, deriv):
        assert abs(deriv.norm() - 1.0) < 1e-9

    def test_sign_flip(self, mean_field):
        plus = derivative_mode(mean_field, sign=1)
        minus = derivative_mode(mean_field, sign=-1)
        assert overlap(plus, minus) == pytest.approx(-1.0, abs=1e-12)

    def test_central_difference_path(self, grid, source):
        omega0, d_omega = source
        parent = hermite_gaussian_mode(grid, 2, omega0, d_omega)
        d = derivative_mode(parent)
        assert abs(d.norm() - 1.0) < 1e-9
        assert abs(overlap(parent, d)) < 1e-9

    def test_non_unit_parent_rejected(self, mean_field):
        half = SpectralMode(
            grid=mean_field.grid, amplitude=np.zeros_like(mean_field.amplitude)
        )
        with pytest.raises(ValueError):
            derivative_mode(half)


class TestHermiteGaussian:
    def test_k0_equals_gaussian(self, grid, mean_field, source):
        omega0, d_omega = source
        hg0 = hermite_gaussian_mode(grid, 0, omega0, d_omega)
        assert np.abs(hg0.amplitude - mean_field.amplitude).max() < 1e-9

    def test_hg1_equals_derivative(self, grid, deriv, source):
        omega0, d_omega = source
        hg1 = hermite_gaussian_mode(grid, 1, omega0, d_omega)
        w = grid.points
        l2 = np.sqrt(np.trapezoid(np.abs(hg1.amplitude - deriv.amplitude) ** 2, w))
        assert l2 < 1e-6

    def test_orthonormality_up_to_10(self, source):
        omega0, d_omega = source
        wide = make_grid(omega0, d_omega, span_sigma=12.0, n_intervals=8192)
        modes = [hermite_gaussian_mode(wide, k, omega0, d_omega) for k in range(11)]
        for j in range(11):
            for k in range(j, 11):
                assert abs(overlap(modes[j], modes[k]) - (j == k)) < 1e-6

    def test_order_cap(self, grid, source):
        omega0, d_omega = source
        with pytest.raises(ValueError):
            hermite_gaussian_mode(grid, 11, omega0, d_omega)

    def test_coverage_error_for_high_order_on_default_grid(self, grid, source):
        omega0, d_omega = source
        with pytest.raises(GridCoverageError):
            hermite_gaussian_mode(grid, 10, omega0, d_omega)


class TestOverlap:
    def test_self_overlap(self, mean_field):
        assert overlap(mean_field, mean_field) == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("shift", [0.25, 0.5, 1.0])
    def test_offset_gaussians(self, grid, mean_field, source, shift):
        omega0, d_omega = source
        other = gaussian_mode(grid, omega0 + shift * d_omega, d_omega)
        expected = np.exp(-((shift * d_omega) ** 2) / (8 * d_omega**2))
        assert overlap(mean_field, other).real == pytest.approx(expected, abs=1e-6)

    def test_grid_mismatch(self, mean_field, source):
        omega0, d_omega = source
        other_grid = make_grid(omega0, d_omega, n_intervals=2048)
        other = gaussian_mode(other_grid, omega0, d_omega)
        with pytest.raises(GridMismatchError):
            overlap(mean_field, other)


class TestPixelModes:
    def test_single_pixel_whole_span(self, mean_field, source):
        omega0, d_omega = source
        wide = PixelArray.around(omega0, d_omega, n_pixels=1, span_sigma=6.0)
        modes, alpha = pixel_modes(mean_field, wide, PHOTON_RATE)
        assert alpha[0] == pytest.approx(np.sqrt(PHOTON_RATE), rel=1e-8)
        assert abs(overlap(modes[0], mean_field)) == pytest.approx(1.0, abs=1e-8)

    def test_symmetric_alpha(self, sliced):
        _, alpha = sliced
        assert np.abs(alpha - alpha[::-1]).max() < 1e-6 * alpha.max()

    def test_captured_fraction(self, sliced):
        _, alpha = sliced
        assert np.sum(alpha**2) / PHOTON_RATE == pytest.approx(
            erf(3 / np.sqrt(2)), abs=1e-4
        )

    def test_orthonormal_slices(self, sliced):
        modes, _ = sliced
        for i, a in enumerate(modes):
            for j, b in enumerate(modes):
                assert abs(overlap(a, b) - (i == j)) < 1e-12

    def test_empty_bin_gives_null_mode(self, mean_field, source):
        omega0, d_omega = source
        left = PixelArray.equal_width(omega0 - 3 * d_omega, omega0, 1)
        half, _ = pixel_modes(mean_field, left, PHOTON_RATE)
        right = PixelArray.equal_width(omega0 + 1 * d_omega, omega0 + 2 * d_omega, 1)
        modes, alpha = pixel_modes(half[0], right, PHOTON_RATE)
        assert alpha[0] == 0.0
        assert modes[0].is_null

    def test_pixels_outside_grid(self, mean_field, source):
        omega0, d_omega = source
        outside = PixelArray.equal_width(omega0, omega0 + 7 * d_omega, 4)
        with pytest.raises(GridCoverageError):
            pixel_modes(mean_field, outside, PHOTON_RATE)


class TestProjection:
    def test_mean_field_eta_is_captured_energy(self, proj_mf, sliced):
        _, alpha = sliced
        assert proj_mf.eta**2 == pytest.approx(np.sum(alpha**2) / PHOTON_RATE, abs=1e-12)

    def test_disjoint_target_gives_zero_eta(self, mean_field, source):
        omega0, d_omega = source
        left_bins = PixelArray.equal_width(omega0 - 3 * d_omega, omega0 - 1 * d_omega, 4)
        left_modes, _ = pixel_modes(mean_field, left_bins, PHOTON_RATE)
        right = PixelArray.equal_width(omega0 + 1 * d_omega, omega0 + 3 * d_omega, 1)
        target = pixel_modes(mean_field, right, PHOTON_RATE)[0][0]
        proj = project_coefficients(target, left_modes)
        assert proj.eta == pytest.approx(0.0, abs=1e-12)

    def test_derivative_eta_regression(self, proj_d):
        # frozen from the quadrature oracle at the default grid and bins
        assert 0.0 < proj_d.eta <= 1.0
        assert proj_d.eta == pytest.approx(0.962302, abs=2e-6)

    def test_phase_model_violation(self, mean_field, sliced):
        modes, _ = sliced
        w = mean_field.grid.points
        phase = np.exp(1j * (w - w[0]) / (w[-1] - w[0]) * np.pi)
        chirped = SpectralMode(grid=mean_field.grid, amplitude=mean_field.amplitude * phase)
        with pytest.raises(PhaseModelError):
            project_coefficients(chirped, modes)

    def test_strip_dead_pixels(self, proj_d, sliced):
        _, alpha = sliced
        dead_alpha = alpha.copy()
        dead_alpha[0] = 0.0
        stripped = strip_dead_pixels(proj_d, dead_alpha)
        assert stripped.m[0] == 0.0
        assert stripped.eta == pytest.approx(
            np.sqrt(np.sum(proj_d.m[1:] ** 2)), abs=1e-12
        )


class TestSpectralInvariants:
    def test_all_built_modes_unit_norm(self, grid, mean_field, deriv, sliced, source):
        omega0, d_omega = source
        modes = [mean_field, deriv]
        modes += [hermite_gaussian_mode(grid, k, omega0, d_omega) for k in range(5)]
        modes += [m for m in sliced[0]]
        for m in modes:
            assert abs(m.norm() - 1.0) < 1e-9

    def test_parseval_bound_random_targets(self, grid, sliced, source):
        omega0, d_omega = source
        rng = seeded(11)
        modes, _ = sliced
        for _ in range(20):
            center = omega0 + rng.uniform(-1.5, 1.5) * d_omega
            width = d_omega * rng.uniform(0.3, 1.2)
            target = gaussian_mode(grid, center, width)
            proj = project_coefficients(target, modes)
            assert np.sum(proj.m**2) <= 1.0 + 1e-9

    def test_eta_monotone_under_refinement(self, grid, mean_field, source):
        omega0, d_omega = source
        rng = seeded(23)
        for _ in range(10):
            center = omega0 + rng.uniform(-1.5, 1.5) * d_omega
            width = d_omega * rng.uniform(0.4, 1.2)
            target = gaussian_mode(grid, center, width)
            edges = np.linspace(omega0 - 3 * d_omega, omega0 + 3 * d_omega, 7)
            coarse = PixelArray(edges=edges)
            split_at = rng.integers(0, 6)
            mid = 0.5 * (edges[split_at] + edges[split_at + 1])
            fine = PixelArray(edges=np.sort(np.append(edges, mid)))
            eta_c = project_coefficients(target, pixel_modes(mean_field, coarse, 1.0)[0]).eta
            eta_f = project_coefficients(target, pixel_modes(mean_field, fine, 1.0)[0]).eta
            assert eta_f >= eta_c - 1e-9

    def test_overlap_stable_under_grid_doubling(self, source):
        omega0, d_omega = source
        for n_int in (4096, 8192):
            g = make_grid(omega0, d_omega, n_intervals=n_int)
            u = gaussian_mode(g, omega0, d_omega)
            ud = derivative_mode(u)
            bins = PixelArray.around(omega0, d_omega, 8, 3.0)
            modes, _ = pixel_modes(u, bins, 1.0)
            m = project_coefficients(ud, modes).m
            shifted = gaussian_mode(g, omega0 + 0.5 * d_omega, d_omega)
            ov = overlap(u, shifted).real
            if n_int == 4096:
                m_coarse, ov_coarse = m, ov
        assert np.abs(m - m_coarse).max() < 1e-6
        assert abs(ov - ov_coarse) < 1e-6
