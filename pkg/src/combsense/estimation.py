"""Post-processing of detector records: mode reconstruction, sensitivities,
SNR curves, and covariance tomography.

Sensitivity conventions: the demodulated noise is calibrated so a unit
projection of vacuum has variance 1 per output sample, which makes the
inverse SNR slope directly the per-sqrt(Hz) sensitivity.  Per-event numbers
multiply by sqrt(measurement bandwidth), following the convention that a
low-pass cutoff B defines a measurement time 1/B.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .detection import HomodyneRecord, PhotocurrentRecord
from .errors import DeadPixelError
from .spectral import Projection


def sql_energy(photon_rate: float) -> float:
    """Shot-noise limit for mean-energy estimation: sqrt(N) photons/sqrt(Hz)."""
    if photon_rate <= 0:
        raise ValueError("photon_rate must be positive")
    return float(np.sqrt(photon_rate))


def sql_frequency(photon_rate: float, delta_omega: float) -> float:
    """Shot-noise limit for center-frequency estimation: delta_omega/sqrt(N)."""
    if photon_rate <= 0 or delta_omega <= 0:
        raise ValueError("photon_rate and delta_omega must be positive")
    return float(delta_omega / np.sqrt(photon_rate))


def crb_noise_scaled(sql: float, var_mode: float, eta: float) -> float:
    """Sensitivity bound with non-vacuum mode noise and finite efficiency.

    ``sql * sqrt(var_mode) / eta`` -- squeezing (var < 1) tightens the bound,
    efficiency (amplitude eta <= 1) loosens it.
    """
    if var_mode <= 0:
        raise ValueError("var_mode must be positive")
    if not 0.0 < eta <= 1.0 + 1e-12:
        raise ValueError("eta must lie in (0, 1]")
    return float(sql * np.sqrt(var_mode) / eta)


def per_event(sens_per_rthz: float, bandwidth: float) -> float:
    """Per-measurement-event sensitivity for a given bandwidth (Hz)."""
    if bandwidth <= 0:
        raise ValueError("bandwidth must be positive")
    return float(sens_per_rthz * np.sqrt(bandwidth))


def reconstruct_mode_series(record: PhotocurrentRecord, proj: Projection) -> np.ndarray:
    """Demodulated quadrature series of a projected mode.

    Implements ``dx_m = (1/eta) sum_i m_i dI_i / alpha_i`` per output sample.
    Pixels with zero mean-field amplitude may not carry projection weight.
    """
    if not record.demodulated:
        raise ValueError("record must be demodulated first")
    if proj.m.shape != (record.n_pixels,):
        raise ValueError("projection length must match the pixel count")
    if proj.eta == 0:
        raise ValueError("projection has zero efficiency")
    dead = (record.alpha == 0) & (proj.m != 0)
    if np.any(dead):
        raise DeadPixelError(
            f"pixels {np.nonzero(dead)[0].tolist()} have alpha = 0 but non-zero "
            "projection weight; strip dead pixels first"
        )
    weights = np.where(record.alpha > 0, proj.m / np.where(record.alpha > 0, record.alpha, 1.0), 0.0)
    return (weights @ record.samples) / proj.eta


@dataclass(frozen=True)
class SnrCurve:
    """Per-depth amplitude SNRs and the fitted through-origin slope."""

    depths: np.ndarray
    snrs: np.ndarray
    slope: float = field(init=False)
    sensitivity: float = field(init=False)

    def __post_init__(self):
        d = np.asarray(self.depths, dtype=float)
        s = np.asarray(self.snrs, dtype=float)
        if d.shape != s.shape or d.ndim != 1:
            raise ValueError("depths and snrs must be matching 1-D arrays")
        d.flags.writeable = False
        s.flags.writeable = False
        slope = float(np.dot(s, d) / np.dot(d, d))
        object.__setattr__(self, "depths", d)
        object.__setattr__(self, "snrs", s)
        object.__setattr__(self, "slope", slope)
        object.__setattr__(self, "sensitivity", 1.0 / slope if slope > 0 else np.inf)


def snr_curve(
    records: list[PhotocurrentRecord], depths, proj: Projection
) -> SnrCurve:
    """Amplitude SNR versus modulation depth and its through-origin slope.

    SNR(d) = |mean| / std of the reconstructed mode series; the least-squares
    slope through the origin gives the sensitivity as the depth where
    SNR = 1 (inverse slope).
    """
    depths = np.asarray(depths, dtype=float)
    if len(records) != depths.size or depths.size < 3:
        raise ValueError("need >= 3 depths with one record each")
    snrs = np.empty(depths.size)
    for i, rec in enumerate(records):
        series = reconstruct_mode_series(rec, proj)
        sd = series.std(ddof=1)
        if sd == 0:
            raise ValueError("degenerate record: zero variance")
        snrs[i] = abs(series.mean()) / sd
    return SnrCurve(depths=depths, snrs=snrs)


@dataclass(frozen=True)
class EstimationResult:
    """Headline numbers for one estimated parameter."""

    parameter: str
    snr_slope: float
    sensitivity_per_rthz: float
    sensitivity_per_event: float
    enhancement_vs_sql: float

    def __post_init__(self):
        if self.parameter not in ("central_frequency", "mean_energy"):
            raise ValueError("parameter must be central_frequency or mean_energy")
        for name in ("snr_slope", "sensitivity_per_rthz", "sensitivity_per_event", "enhancement_vs_sql"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    def to_dict(self) -> dict:
        return {
            "parameter": self.parameter,
            "snr_slope": self.snr_slope,
            "sensitivity_per_rtHz": self.sensitivity_per_rthz,
            "sensitivity_per_event": self.sensitivity_per_event,
            "enhancement_vs_sql": self.enhancement_vs_sql,
        }


def build_estimation_result(
    parameter: str, curve: SnrCurve, bandwidth: float, sql: float
) -> EstimationResult:
    """Assemble an :class:`EstimationResult` from a fitted SNR curve."""
    sens = curve.sensitivity
    return EstimationResult(
        parameter=parameter,
        snr_slope=curve.slope,
        sensitivity_per_rthz=sens,
        sensitivity_per_event=per_event(sens, bandwidth),
        enhancement_vs_sql=sql / sens,
    )


@dataclass(frozen=True)
class ReconstructedCovariance:
    """Covariance estimate from homodyne records with per-entry errors."""

    cov: np.ndarray
    n_samples: int
    stderr: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.cov, dtype=float)
        e = np.asarray(self.stderr, dtype=float)
        if c.shape != e.shape or c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise ValueError("cov and stderr must be matching square matrices")
        c.flags.writeable = False
        e.flags.writeable = False
        object.__setattr__(self, "cov", c)
        object.__setattr__(self, "stderr", e)


def reconstruct_covariance(
    x_record: HomodyneRecord, p_record: HomodyneRecord
) -> ReconstructedCovariance:
    """Estimate the full covariance matrix from two homodyne phase records.

    Quadrature samples are recovered as ``o_i = I^-_i / (2 |alpha_i|)``; the
    x and p blocks are the sample covariances of the two records.  The x-p
    cross block is identically zero: the two quadratures are measured in
    separate runs, and the squeezer carries no amplitude-phase correlation.
    Per-entry standard errors use the Gaussian fourth-moment formula
    ``sqrt((C_ii C_jj + C_ij^2) / n)``.
    """
    if x_record.n_pixels != p_record.n_pixels:
        raise ValueError("records have different pixel counts")
    if not np.allclose(x_record.lo_alpha, p_record.lo_alpha):
        raise ValueError("records were taken with different LO amplitudes")
    if not np.isclose(x_record.phase, 0.0) or not np.isclose(p_record.phase, np.pi / 2):
        raise ValueError("need one record at phase 0 and one at pi/2")
    n = min(x_record.n_samples, p_record.n_samples)
    if n < 100:
        raise ValueError("need at least 100 samples per phase")
    if np.any(x_record.lo_alpha == 0):
        raise DeadPixelError("LO amplitude is zero on some pixel")
    npix = x_record.n_pixels
    dim = 2 * npix
    cov = np.zeros((dim, dim))
    stderr = np.zeros((dim, dim))
    for rec, block in ((x_record, slice(0, npix)), (p_record, slice(npix, dim))):
        o = rec.samples[:, :n] / (2.0 * np.abs(rec.lo_alpha)[:, None])
        c = np.cov(o, ddof=1)
        c = 0.5 * (c + c.T)
        cov[block, block] = c
        d = np.diag(c)
        stderr[block, block] = np.sqrt((np.outer(d, d) + c**2) / n)
    return ReconstructedCovariance(cov=cov, n_samples=n, stderr=stderr)


def estimation_result_to_json(result: EstimationResult, path) -> None:
    with open(path, "w") as fh:
        json.dump(result.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def reconstructed_covariance_to_json(recon: ReconstructedCovariance, path) -> None:
    """Export a reconstruction as JSON with the matrices as nested arrays."""
    payload = {
        "n_samples": recon.n_samples,
        "cov": recon.cov.tolist(),
        "stderr": recon.stderr.tolist(),
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def snr_curve_to_csv(curves: dict[str, SnrCurve], path) -> None:
    """Write depth columns plus one SNR column per named curve."""
    names = list(curves)
    depths = curves[names[0]].depths
    for c in curves.values():
        if not np.array_equal(c.depths, depths):
            raise ValueError("curves must share the same depth axis")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["depth"] + [f"snr_{n}" for n in names])
        for i in range(depths.size):
            writer.writerow(
                [repr(float(depths[i]))] + [repr(float(curves[n].snrs[i])) for n in names]
            )
