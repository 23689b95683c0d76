"""Exception types shared across the package."""


class GridCoverageError(ValueError):
    """A frequency grid is too narrow to hold the requested mode."""


class GridMismatchError(ValueError):
    """Two spectral objects live on different frequency grids."""


class PhaseModelError(ValueError):
    """Projection coefficients acquired an imaginary part beyond tolerance."""


class UnphysicalStateError(ValueError):
    """A covariance matrix violates the Heisenberg bound."""


class DeadPixelError(ValueError):
    """A projection requires a pixel whose mean-field amplitude is zero."""


class ConfigError(ValueError):
    """A scenario or DSP configuration violates a precondition."""
