import numpy as np
import pytest

from combsense import (
    PixelArray,
    derivative_mode,
    gaussian_mode,
    make_grid,
    pixel_modes,
    project_coefficients,
    wavelength_to_angular,
)

PHOTON_RATE = 4e16


@pytest.fixture(scope="session")
def source():
    omega0, delta_omega = wavelength_to_angular(795e-9, 8.8e-9)
    return omega0, delta_omega


@pytest.fixture(scope="session")
def grid(source):
    omega0, delta_omega = source
    return make_grid(omega0, delta_omega)


@pytest.fixture(scope="session")
def mean_field(grid, source):
    omega0, delta_omega = source
    return gaussian_mode(grid, omega0, delta_omega)


@pytest.fixture(scope="session")
def deriv(mean_field):
    return derivative_mode(mean_field)


@pytest.fixture(scope="session")
def pixels8(source):
    omega0, delta_omega = source
    return PixelArray.around(omega0, delta_omega, n_pixels=8, span_sigma=3.0)


@pytest.fixture(scope="session")
def sliced(mean_field, pixels8):
    modes, alpha = pixel_modes(mean_field, pixels8, PHOTON_RATE)
    return modes, alpha


@pytest.fixture(scope="session")
def proj_mf(mean_field, sliced):
    return project_coefficients(mean_field, sliced[0], "mean_field")


@pytest.fixture(scope="session")
def proj_d(deriv, sliced):
    return project_coefficients(deriv, sliced[0], "derivative")


def seeded(seed):
    return np.random.default_rng(seed)
