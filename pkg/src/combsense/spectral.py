"""Spectral modes of a pulsed light field and their pixel-basis projections.

Everything here works on a shared uniform grid of angular frequency (rad/s).
Wavelengths appear only in :func:`wavelength_to_angular`; all mode shapes,
overlaps and projection coefficients are computed in omega.

Pixel bins are treated as closed intervals whose shared boundary lands on a
grid sample; integrals over a bin use the trapezoid rule restricted to that
interval, so adjacent bins weigh the shared sample half each.  This keeps bin
energies exactly additive, keeps slice modes exactly orthogonal, and makes
overlaps converge at second order when the grid is refined.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import erf, eval_hermite, gammaln

from .errors import GridCoverageError, GridMismatchError, PhaseModelError

SPEED_OF_LIGHT = 299792458.0  # m/s

# default grid: ±6 spectral widths, 4096 intervals (odd sample count puts the
# carrier and symmetric bin edges exactly on samples)
DEFAULT_SPAN_SIGMA = 6.0
DEFAULT_INTERVALS = 4096

_NORM_TOL = 1e-9


def wavelength_to_angular(lambda0: float, fwhm_lambda: float) -> tuple[float, float]:
    """Convert a center wavelength and intensity FWHM to (omega0, delta_omega).

    The FWHM is read as the full width at half maximum of the intensity
    spectrum ``|u|**2``, whose standard deviation is the returned
    ``delta_omega``:  ``delta_omega = fwhm_omega / (2*sqrt(2*ln 2))`` with
    ``fwhm_omega = omega0 * fwhm_lambda / lambda0`` (first-order dispersion
    of the wavelength-to-frequency map).

    Parameters
    ----------
    lambda0 : float
        Center wavelength in meters.
    fwhm_lambda : float
        Intensity FWHM in meters; must be small compared to ``lambda0``.

    Returns
    -------
    (float, float)
        Center angular frequency and spectral width, both in rad/s.
    """
    if not (np.isfinite(lambda0) and np.isfinite(fwhm_lambda)):
        raise ValueError("lambda0 and fwhm_lambda must be finite")
    if lambda0 <= 0:
        raise ValueError(f"lambda0 must be positive, got {lambda0}")
    if fwhm_lambda < 0:
        raise ValueError(f"fwhm_lambda must be non-negative, got {fwhm_lambda}")
    if fwhm_lambda >= lambda0:
        raise ValueError("fwhm_lambda must be much smaller than lambda0")
    omega0 = 2.0 * np.pi * SPEED_OF_LIGHT / lambda0
    fwhm_omega = omega0 * fwhm_lambda / lambda0
    delta_omega = fwhm_omega / (2.0 * np.sqrt(2.0 * np.log(2.0)))
    return omega0, delta_omega


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniformly spaced angular-frequency samples around a carrier.

    Attributes
    ----------
    omega0 : float
        Carrier angular frequency (rad/s); not required to be a sample.
    points : np.ndarray
        Strictly increasing samples (rad/s), uniform to 1 part in 1e12.
    step : float
        Grid spacing (rad/s).
    """

    omega0: float
    points: np.ndarray
    step: float = field(init=False)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1 or pts.size < 3:
            raise ValueError("grid needs at least 3 samples")
        d = np.diff(pts)
        if np.any(d <= 0):
            raise ValueError("grid points must be strictly increasing")
        step = (pts[-1] - pts[0]) / (pts.size - 1)
        # 1e-12 relative uniformity, floored by what float64 can represent
        # at the magnitude of the samples themselves
        tol = max(1e-12 * step, 4.0 * np.finfo(float).eps * np.abs(pts).max())
        if np.max(np.abs(d - step)) > tol:
            raise ValueError("grid spacing must be uniform to 1 part in 1e12")
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "step", float(step))

    @property
    def n(self) -> int:
        return self.points.size

    def index_of(self, omega: float) -> int:
        """Index of the sample nearest to ``omega`` (must lie on the grid)."""
        pts = self.points
        if omega < pts[0] - 0.5 * self.step or omega > pts[-1] + 0.5 * self.step:
            raise GridCoverageError(f"{omega} lies outside the grid span")
        return int(round((omega - pts[0]) / self.step))

    def compatible(self, other: "FrequencyGrid") -> bool:
        return (
            self.points.size == other.points.size
            and abs(self.points[0] - other.points[0]) <= 1e-9 * self.step
            and abs(self.step - other.step) <= 1e-12 * self.step
        )


def make_grid(
    omega0: float,
    delta_omega: float,
    span_sigma: float = DEFAULT_SPAN_SIGMA,
    n_intervals: int = DEFAULT_INTERVALS,
) -> FrequencyGrid:
    """Build the default grid: ``omega0 ± span_sigma*delta_omega``, uniform."""
    if delta_omega <= 0:
        raise ValueError("delta_omega must be positive")
    if span_sigma <= 0 or n_intervals < 8:
        raise ValueError("span_sigma must be positive and n_intervals >= 8")
    pts = np.linspace(
        omega0 - span_sigma * delta_omega,
        omega0 + span_sigma * delta_omega,
        n_intervals + 1,
    )
    return FrequencyGrid(omega0=omega0, points=pts)


def _segment_trapz(values: np.ndarray, x: np.ndarray, lo: int, hi: int):
    """Trapezoid rule over the closed sample range [lo, hi]."""
    if hi <= lo:
        return 0.0
    return np.trapezoid(values[lo : hi + 1], x[lo : hi + 1])


@dataclass(frozen=True)
class SpectralMode:
    """A normalized spectral amplitude sampled on a :class:`FrequencyGrid`.

    ``amplitude`` carries units of 1/sqrt(rad/s) so that the quadrature norm
    ``integral |u|^2 d omega`` is dimensionless and equals 1 (or 0 for the
    null mode standing in for an empty pixel bin).  ``support`` is the closed
    sample-index range outside which the amplitude vanishes; slice modes of
    adjacent bins share exactly one boundary sample.
    """

    grid: FrequencyGrid
    amplitude: np.ndarray
    support: tuple[int, int] = None  # type: ignore[assignment]
    center: float | None = None
    scale: float | None = None
    profile: str = "custom"

    def __post_init__(self):
        amp = np.asarray(self.amplitude, dtype=complex)
        if amp.shape != self.grid.points.shape:
            raise ValueError("amplitude and grid must have the same length")
        sup = self.support if self.support is not None else (0, self.grid.n - 1)
        sup = (int(sup[0]), int(sup[1]))
        if not (0 <= sup[0] <= sup[1] <= self.grid.n - 1):
            raise ValueError(f"invalid support {sup}")
        amp.flags.writeable = False
        object.__setattr__(self, "amplitude", amp)
        object.__setattr__(self, "support", sup)
        nrm = self.norm()
        if nrm != 0.0 and abs(nrm - 1.0) > _NORM_TOL:
            raise ValueError(f"mode norm {nrm} deviates from 1 beyond {_NORM_TOL}")

    def norm(self) -> float:
        lo, hi = self.support
        val = _segment_trapz(np.abs(self.amplitude) ** 2, self.grid.points, lo, hi)
        return float(np.sqrt(val))

    @property
    def is_null(self) -> bool:
        return not np.any(self.amplitude)


def overlap(a: SpectralMode, b: SpectralMode) -> complex:
    """Trapezoidal overlap integral ``int conj(a) * b d omega``.

    Both modes must live on the same grid.  Integration runs over the
    intersection of the two supports, so slice modes of disjoint bins have
    exactly zero overlap.
    """
    if not a.grid.compatible(b.grid):
        raise GridMismatchError("modes live on different frequency grids")
    lo = max(a.support[0], b.support[0])
    hi = min(a.support[1], b.support[1])
    if hi <= lo:
        return 0.0 + 0.0j
    integrand = np.conj(a.amplitude) * b.amplitude
    return complex(_segment_trapz(integrand, a.grid.points, lo, hi))


def gaussian_mode(grid: FrequencyGrid, omega0: float, delta_omega: float) -> SpectralMode:
    """Unit-norm Gaussian spectral amplitude.

    The continuous shape is ``(2 pi delta_omega^2)^(-1/4)
    exp(-(omega-omega0)^2 / (4 delta_omega^2))``; the sampled mode is
    renormalized on the grid so its quadrature norm is exactly 1.

    Raises
    ------
    GridCoverageError
        If the grid captures less than 99.9% of the analytic norm.
    """
    if delta_omega <= 0:
        raise ValueError("delta_omega must be positive")
    pts = grid.points
    # intensity |u|^2 is Gaussian with standard deviation delta_omega
    z = lambda w: (w - omega0) / (np.sqrt(2.0) * delta_omega)  # noqa: E731
    captured = 0.5 * (erf(z(pts[-1])) - erf(z(pts[0])))
    if captured < 0.999:
        raise GridCoverageError(
            f"grid captures {captured:.6f} of the mode energy (< 0.999)"
        )
    amp = (2.0 * np.pi * delta_omega**2) ** -0.25 * np.exp(
        -((pts - omega0) ** 2) / (4.0 * delta_omega**2)
    )
    amp = amp / np.sqrt(np.trapezoid(amp**2, pts))
    return SpectralMode(
        grid=grid, amplitude=amp, center=omega0, scale=delta_omega, profile="gaussian"
    )


def hermite_gaussian_mode(
    grid: FrequencyGrid, k: int, omega0: float, delta_omega: float
) -> SpectralMode:
    """k-th Hermite-Gauss spectral mode, scale-matched to :func:`gaussian_mode`.

    HG_0 equals the Gaussian mode and HG_1 equals its normalized derivative
    mode, so the family is the natural basis for the squeezed supermodes.
    Orders up to 10 are supported.
    """
    if not (0 <= k <= 10):
        raise ValueError(f"order k must be in 0..10, got {k}")
    if delta_omega <= 0:
        raise ValueError("delta_omega must be positive")
    if k == 0:
        return gaussian_mode(grid, omega0, delta_omega)
    pts = grid.points
    x = (pts - omega0) / (np.sqrt(2.0) * delta_omega)
    # physicists' Hermite functions; log-normalization avoids overflow at high k
    lognorm = -0.5 * (k * np.log(2.0) + gammaln(k + 1) + 0.5 * np.log(np.pi))
    amp = np.exp(lognorm) * eval_hermite(k, x) * np.exp(-0.5 * x**2)
    # the continuous function is unit-norm, so the sampled norm measures how
    # much of the mode the grid actually holds
    captured = np.trapezoid(amp**2, x)
    if captured < 0.999:
        raise GridCoverageError(
            f"grid captures {captured:.6f} of HG_{k} energy (< 0.999); widen the grid"
        )
    amp /= np.sqrt(np.trapezoid(amp**2, pts))
    return SpectralMode(
        grid=grid, amplitude=amp, center=omega0, scale=delta_omega, profile=f"hermite{k}"
    )


def derivative_mode(mode: SpectralMode, sign: int = 1) -> SpectralMode:
    """Normalized spectral-derivative mode of a unit-norm parent.

    For a Gaussian parent the result is evaluated analytically as
    ``sign * (omega-omega0)/delta_omega * u(omega)``; any other parent is
    differentiated by central differences.  Either way the result is
    renormalized and Gram-Schmidt orthogonalized against the parent.

    ``sign=+1`` (default) orients the mode so that a positive shift of the
    parent's center frequency displaces it with a positive coefficient;
    ``sign=-1`` keeps the orientation of the raw +d/d omega derivative.  The
    two differ only by a global sign; magnitudes are unaffected.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    if abs(mode.norm() - 1.0) > _NORM_TOL:
        raise ValueError("parent mode must be unit-norm")
    pts = mode.grid.points
    u = mode.amplitude
    if mode.profile == "gaussian":
        raw = (pts - mode.center) / mode.scale * u
    else:
        raw = -np.gradient(u, pts)  # -d/d omega = shift orientation
    raw = sign * raw
    # orthogonalize against the parent (exact no-op for the Gaussian case)
    lo, hi = mode.support
    c = _segment_trapz(np.conj(u) * raw, pts, lo, hi)
    raw = raw - c * u
    nrm = np.sqrt(abs(_segment_trapz(np.abs(raw) ** 2, pts, lo, hi)))
    if nrm == 0:
        raise ValueError("derivative mode vanished; parent is degenerate")
    amp = raw / nrm
    return SpectralMode(
        grid=mode.grid,
        amplitude=amp,
        support=mode.support,
        center=mode.center,
        scale=mode.scale,
        profile="derivative",
    )


@dataclass(frozen=True)
class PixelArray:
    """Contiguous spectral bins read out by a photodiode array.

    ``edges`` are the ``n_pixels + 1`` ascending bin boundaries in rad/s.
    Bins are contiguous and non-overlapping by construction; the default
    builder produces equal widths.
    """

    edges: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.edges, dtype=float)
        if e.ndim != 1 or e.size < 2:
            raise ValueError("need at least two bin edges")
        if np.any(np.diff(e) <= 0):
            raise ValueError("bin edges must be strictly ascending")
        e.flags.writeable = False
        object.__setattr__(self, "edges", e)

    @property
    def n_pixels(self) -> int:
        return self.edges.size - 1

    @classmethod
    def equal_width(cls, lo: float, hi: float, n_pixels: int = 8) -> "PixelArray":
        if n_pixels < 1:
            raise ValueError("n_pixels must be >= 1")
        if not hi > lo:
            raise ValueError("hi must exceed lo")
        return cls(edges=np.linspace(lo, hi, n_pixels + 1))

    @classmethod
    def around(
        cls,
        omega0: float,
        delta_omega: float,
        n_pixels: int = 8,
        span_sigma: float = 3.0,
    ) -> "PixelArray":
        """Equal-width bins over ``omega0 ± span_sigma * delta_omega``."""
        return cls.equal_width(
            omega0 - span_sigma * delta_omega,
            omega0 + span_sigma * delta_omega,
            n_pixels,
        )


def pixel_modes(
    mean_field: SpectralMode, pixels: PixelArray, n_photons: float
) -> tuple[list[SpectralMode], np.ndarray]:
    """Slice the mean field into normalized pixel modes and amplitudes.

    Mode ``i`` is the mean field restricted to bin ``i`` and renormalized;
    ``alpha[i] = sqrt(n_photons * E_i)`` where ``E_i`` is the fraction of
    mean-field energy captured by the bin.  Bin edges snap to the nearest
    grid sample (adjacent bins then share that boundary sample, weighted
    half each by the segment trapezoid rule).  A bin that captures no energy
    yields a null mode with ``alpha = 0``.
    """
    if n_photons < 0:
        raise ValueError("n_photons must be non-negative")
    grid = mean_field.grid
    pts = grid.points
    if pixels.edges[0] < pts[0] - 0.5 * grid.step or pixels.edges[-1] > pts[-1] + 0.5 * grid.step:
        raise GridCoverageError("pixel array extends beyond the grid span")
    idx = [grid.index_of(e) for e in pixels.edges]
    if any(b <= a for a, b in zip(idx[:-1], idx[1:])):
        raise ValueError("bins are narrower than the grid resolution")
    u = mean_field.amplitude
    intensity = np.abs(u) ** 2
    modes: list[SpectralMode] = []
    alpha = np.empty(pixels.n_pixels)
    for i in range(pixels.n_pixels):
        lo, hi = idx[i], idx[i + 1]
        energy = float(_segment_trapz(intensity, pts, lo, hi))
        if energy == 0.0:
            modes.append(
                SpectralMode(grid=grid, amplitude=np.zeros_like(u), support=(lo, hi))
            )
            alpha[i] = 0.0
            continue
        amp = np.zeros_like(u)
        amp[lo : hi + 1] = u[lo : hi + 1] / np.sqrt(energy)
        modes.append(SpectralMode(grid=grid, amplitude=amp, support=(lo, hi)))
        alpha[i] = np.sqrt(n_photons * energy)
    return modes, alpha


@dataclass(frozen=True)
class Projection:
    """Real projection coefficients of a target mode onto pixel modes.

    ``eta = sqrt(sum(m**2))`` is the mode-matching efficiency of recovering
    the target from the pixel basis; it never exceeds 1.
    """

    m: np.ndarray
    eta: float = field(init=False)
    target_name: str = "target"

    def __post_init__(self):
        m = np.asarray(self.m, dtype=float)
        m.flags.writeable = False
        eta = float(np.sqrt(np.sum(m**2)))
        if eta > 1.0 + 1e-9:
            raise ValueError(f"eta = {eta} exceeds the Parseval bound")
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "eta", eta)


def project_coefficients(
    target: SpectralMode,
    modes: list[SpectralMode],
    target_name: str = "target",
    imag_tol: float = 1e-6,
) -> Projection:
    """Overlap coefficients ``m_i`` of a unit-norm target with pixel modes.

    Coefficients are required to be real (flat spectral phase); an imaginary
    part above ``imag_tol`` raises :class:`PhaseModelError`.
    """
    if abs(target.norm() - 1.0) > _NORM_TOL:
        raise ValueError("target must be unit-norm")
    m = np.empty(len(modes))
    for i, mode in enumerate(modes):
        c = overlap(mode, target)
        if abs(c.imag) > imag_tol:
            raise PhaseModelError(
                f"m[{i}] = {c} has imaginary part beyond {imag_tol}; "
                "flat-phase model violated"
            )
        m[i] = c.real
    return Projection(m=m, target_name=target_name)


def strip_dead_pixels(projection: Projection, alpha: np.ndarray) -> Projection:
    """Zero the coefficients of dead pixels (alpha == 0) and renormalize eta."""
    alpha = np.asarray(alpha, dtype=float)
    if alpha.shape != projection.m.shape:
        raise ValueError("alpha and projection must have the same length")
    m = np.where(alpha > 0, projection.m, 0.0)
    return Projection(m=m, target_name=projection.target_name)
