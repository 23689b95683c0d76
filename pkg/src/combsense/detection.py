"""Detector-record synthesis and the demodulation signal chain.

Direct detection: each pixel's photocurrent fluctuation is
``dI_i(t) = alpha_i * (s_i(t) + dx_i(t))`` with the modulation signal
``s_i`` projected onto the pixel modes and ``dx_i`` the quadrature noise of
the state.  The raw stream runs at ``dsp.raw_rate``; the lock-in chain
multiplies by ``2 sin(2 pi f_m t)``, low-passes with cascaded one-pole
sections and decimates to ``dsp.output_rate``.

Per-sample noise is drawn i.i.d. from the state's x block, scaled so the
variance of a demodulated unit projection equals the quadrature variance
(vacuum -> 1).  The scale comes from the realized filter's noise gain, not
from a nominal bandwidth, so the calibration is exact by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy import signal

from .errors import ConfigError
from .gaussian import GaussianState
from .spectral import Projection

# output samples discarded after each filter start-up (25+ time constants of
# the default chain)
SETTLE_SAMPLES = 16

_CHUNK = 1 << 17


@dataclass(frozen=True)
class ModulationConfig:
    """Sinusoidal modulation of center frequency and mean energy.

    ``depth_omega`` (rad/s) and ``depth_N`` (photons/s) are the peak
    displacement depths of the two parameters; both ride on the same
    ``sin(2 pi f_m t)`` carrier.
    """

    f_m: float = 1.5e6
    depth_omega: float = 0.0
    depth_N: float = 0.0
    waveform: str = "sin"

    def __post_init__(self):
        if self.f_m <= 0:
            raise ValueError("f_m must be positive")
        if self.depth_omega < 0 or self.depth_N < 0:
            raise ValueError("modulation depths must be non-negative")
        if self.waveform != "sin":
            raise ValueError("only sinusoidal modulation is supported")


@dataclass(frozen=True)
class DspChain:
    """Rates and filter parameters of the acquisition chain."""

    raw_rate: float = 12e6
    lowpass_cutoff: float = 5e4
    lowpass_order: int = 4
    output_rate: float = 2e4
    n_output: int = 1000

    def __post_init__(self):
        if self.raw_rate <= 0 or self.output_rate <= 0 or self.lowpass_cutoff <= 0:
            raise ConfigError("rates and cutoff must be positive")
        if self.lowpass_order < 1:
            raise ConfigError("lowpass_order must be >= 1")
        if self.n_output < 1:
            raise ConfigError("n_output must be >= 1")
        if self.output_rate > 2.0 * self.lowpass_cutoff:
            raise ConfigError("output_rate must not exceed twice the low-pass cutoff")
        dec = self.raw_rate / self.output_rate
        if abs(dec - round(dec)) > 1e-9:
            raise ConfigError("raw_rate must be an integer multiple of output_rate")

    @property
    def decimation(self) -> int:
        return int(round(self.raw_rate / self.output_rate))


def lowpass_sos(dsp: DspChain) -> np.ndarray:
    """Cascaded one-pole low-pass sections (bilinear transform, unit DC gain)."""
    b, a = signal.bilinear([1.0], [1.0 / (2.0 * np.pi * dsp.lowpass_cutoff), 1.0], fs=dsp.raw_rate)
    section = np.concatenate([b, [0.0], a, [0.0]])
    return np.tile(section, (dsp.lowpass_order, 1))


def _impulse_response(dsp: DspChain) -> np.ndarray:
    sos = lowpass_sos(dsp)
    n = 4096
    while True:
        imp = np.zeros(n)
        imp[0] = 1.0
        h = signal.sosfilt(sos, imp)
        if np.abs(h[-256:]).max() < 1e-15 * np.abs(h).max():
            return h
        n *= 2


def check_aliasing(dsp: DspChain, f_m: float) -> None:
    if dsp.raw_rate <= 4.0 * f_m:
        raise ConfigError(
            f"raw_rate {dsp.raw_rate} must exceed 4*f_m = {4 * f_m} to avoid aliasing"
        )


def demodulated_noise_gain(dsp: DspChain, f_m: float) -> float:
    """Variance gain of the demod chain for unit-variance white input.

    Computed per emitted output sample from the realized impulse response:
    ``g = 4 * sum_k h[k]^2 sin^2(2 pi f_m (jD - k)/fs)`` averaged over the
    decimation phases actually sampled.  For white raw noise of per-sample
    variance ``v`` the settled output variance is exactly ``g * v``.
    """
    check_aliasing(dsp, f_m)
    h2 = _impulse_response(dsp) ** 2
    k = h2.size
    dec = dsp.decimation
    j0 = max(SETTLE_SAMPLES, int(np.ceil(k / dec)))
    n_probe = 64
    m = np.arange((j0 + n_probe) * dec + 1)
    s2 = np.sin(2.0 * np.pi * f_m * m / dsp.raw_rate) ** 2
    gains = np.empty(n_probe)
    for i in range(n_probe):
        top = (j0 + i) * dec
        gains[i] = 4.0 * np.dot(h2, s2[top::-1][:k])
    return float(gains.mean())


@dataclass(frozen=True)
class PhotocurrentRecord:
    """Per-pixel sampled photocurrent fluctuations ``dI_i`` plus metadata.

    ``samples`` has shape (n_pixels, n_samples); raw records carry the full
    modulated stream at ``rate = dsp.raw_rate``, demodulated ones the
    baseband at ``dsp.output_rate``.  ``segment_length`` and
    ``window_starts`` are set when the record was taken through an
    acquisition schedule (one contiguous segment per measurement window).
    """

    samples: np.ndarray
    rate: float
    alpha: np.ndarray
    dsp: DspChain
    seed: int
    mod: ModulationConfig | None = None
    demodulated: bool = False
    segment_length: int | None = None
    window_starts: np.ndarray | None = None

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        a = np.asarray(self.alpha, dtype=float)
        if s.ndim != 2:
            raise ValueError("samples must be 2-D (n_pixels, n_samples)")
        if a.shape != (s.shape[0],):
            raise ValueError("alpha must have one entry per pixel")
        if not np.all(np.isfinite(s)):
            raise ValueError("samples must be finite")
        if self.segment_length is not None and s.shape[1] % self.segment_length:
            raise ValueError("samples length must be a multiple of segment_length")
        s.flags.writeable = False
        a.flags.writeable = False
        object.__setattr__(self, "samples", s)
        object.__setattr__(self, "alpha", a)

    @property
    def n_pixels(self) -> int:
        return self.samples.shape[0]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    def times(self) -> np.ndarray:
        """Sample times in seconds (window-relative offsets when scheduled)."""
        if self.window_starts is None:
            return np.arange(self.n_samples) / self.rate
        seg = self.segment_length or self.n_samples
        offs = np.arange(seg) / self.rate
        return np.concatenate([t0 + offs for t0 in self.window_starts])

    def segments(self) -> list[np.ndarray]:
        if self.segment_length is None:
            return [self.samples]
        n_seg = self.n_samples // self.segment_length
        return [
            self.samples[:, i * self.segment_length : (i + 1) * self.segment_length]
            for i in range(n_seg)
        ]


@dataclass(frozen=True)
class HomodyneRecord:
    """Multi-pixel homodyne difference currents ``I^-_i = 2 |alpha_i| o_i``."""

    samples: np.ndarray
    lo_alpha: np.ndarray
    phase: float
    seed: int

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        a = np.asarray(self.lo_alpha, dtype=float)
        if s.ndim != 2 or a.shape != (s.shape[0],):
            raise ValueError("samples must be (n_pixels, n) with matching lo_alpha")
        if not np.all(np.isfinite(s)):
            raise ValueError("samples must be finite")
        if not (np.isclose(self.phase, 0.0) or np.isclose(self.phase, np.pi / 2)):
            raise ValueError("phase must be 0 (x) or pi/2 (p)")
        s.flags.writeable = False
        a.flags.writeable = False
        object.__setattr__(self, "samples", s)
        object.__setattr__(self, "lo_alpha", a)

    @property
    def n_pixels(self) -> int:
        return self.samples.shape[0]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]


@dataclass(frozen=True)
class AcquisitionSchedule:
    """Alternating lock/measure windows driven by a mechanical shutter.

    Each shutter period ``1/shutter_rate`` opens one measurement window of
    ``window`` seconds; the remainder is the calibration (locking) interval.
    """

    shutter_rate: float
    window: float

    def __post_init__(self):
        if self.shutter_rate <= 0 or self.window <= 0:
            raise ConfigError("shutter_rate and window must be positive")
        if self.window * self.shutter_rate >= 1.0:
            raise ConfigError(
                f"duty cycle {self.window * self.shutter_rate} must be < 1"
            )

    @property
    def duty_cycle(self) -> float:
        return self.window * self.shutter_rate

    def window_starts(self, duration: float) -> np.ndarray:
        """Start times of the measurement windows within ``duration`` seconds."""
        n = int(np.floor(duration * self.shutter_rate + 1e-9))
        return np.arange(n) / self.shutter_rate

    def samples_per_window(self, rate: float) -> int:
        return int(np.floor(self.window * rate + 1e-9))


def acquisition_windows(shutter_rate: float, window: float) -> AcquisitionSchedule:
    """Build a measurement schedule; rejects duty cycles >= 1."""
    return AcquisitionSchedule(shutter_rate=shutter_rate, window=window)


def _rng(seed: int) -> np.random.Generator:
    # counter-based stream: independent records never share draws
    return np.random.Generator(np.random.Philox(key=np.uint64(seed)))


def _draw_noise(rng, chol, n_samples: int, out: np.ndarray, col0: int) -> None:
    """Fill out[:, col0:col0+n_samples] with correlated draws, chunked."""
    n_modes = chol.shape[0]
    done = 0
    while done < n_samples:
        blk = min(_CHUNK, n_samples - done)
        z = rng.standard_normal((blk, n_modes))
        out[:, col0 + done : col0 + done + blk] = (z @ chol.T).T
        done += blk


def synthesize_direct(
    state: GaussianState,
    alpha: np.ndarray,
    mod: ModulationConfig,
    proj_energy: Projection,
    proj_frequency: Projection,
    delta_omega: float,
    dsp: DspChain,
    seed: int,
    signal_efficiency: float = 1.0,
    schedule: AcquisitionSchedule | None = None,
) -> PhotocurrentRecord:
    """Raw modulated photocurrent record of the bright synthetic beam.

    The energy modulation displaces x along the mean-field projection with
    peak amplitude ``depth_N / sqrt(N)`` and the frequency modulation along
    the derivative projection with ``sqrt(N) * depth_omega / delta_omega``,
    where ``N = sum(alpha**2)`` is the detected photon rate.
    ``signal_efficiency`` scales the signal amplitudes only (mean-transfer
    calibration); the noise is whatever the state says it is.  With a
    schedule, samples are emitted only inside measurement windows, each
    window preceded by a settling lead-in so the demodulated output covers
    the window exactly.
    """
    n = state.n_modes
    alpha = np.asarray(alpha, dtype=float)
    if alpha.shape != (n,):
        raise ValueError("alpha must have one entry per state mode")
    if proj_energy.m.shape != (n,) or proj_frequency.m.shape != (n,):
        raise ValueError("projection lengths must match the pixel count")
    if delta_omega <= 0:
        raise ValueError("delta_omega must be positive")
    if not 0.0 < signal_efficiency <= 1.0 + 1e-12:
        raise ValueError("signal_efficiency must lie in (0, 1]")
    if not state.is_physical():
        raise ValueError("state violates the Heisenberg bound")
    check_aliasing(dsp, mod.f_m)

    n_photons = float(np.sum(alpha**2))
    amp_energy = mod.depth_N / np.sqrt(n_photons) if n_photons > 0 else 0.0
    amp_freq = np.sqrt(n_photons) * mod.depth_omega / delta_omega
    disp = signal_efficiency * (proj_energy.m * amp_energy + proj_frequency.m * amp_freq)

    gain = demodulated_noise_gain(dsp, mod.f_m)
    chol = np.linalg.cholesky(state.x_block / gain)
    rng = _rng(seed)
    dec = dsp.decimation

    if schedule is None:
        seg_raw = (dsp.n_output + SETTLE_SAMPLES) * dec
        starts = np.array([0.0])
        seg_len = None
    else:
        spw = schedule.samples_per_window(dsp.output_rate)
        if spw < 1:
            raise ConfigError("measurement window shorter than one output sample")
        n_windows = int(np.ceil(dsp.n_output / spw))
        seg_raw = (spw + SETTLE_SAMPLES) * dec
        period = 1.0 / schedule.shutter_rate
        # segment = settling lead-in + measurement window; snap the start to a
        # whole carrier period so every segment sees the same demod phases
        raw_starts = np.arange(n_windows) * period - SETTLE_SAMPLES / dsp.output_rate
        starts = np.round(raw_starts * mod.f_m) / mod.f_m
        seg_len = seg_raw

    n_seg = starts.size
    samples = np.empty((n, n_seg * seg_raw))
    t_all = np.empty(n_seg * seg_raw)
    offs = np.arange(seg_raw) / dsp.raw_rate
    for w, t0 in enumerate(starts):
        sl = slice(w * seg_raw, (w + 1) * seg_raw)
        _draw_noise(rng, chol, seg_raw, samples, w * seg_raw)
        t = t0 + offs
        t_all[sl] = t
        carrier = np.sin(2.0 * np.pi * mod.f_m * t)
        samples[:, sl] += disp[:, None] * carrier[None, :]
    samples *= alpha[:, None]

    return PhotocurrentRecord(
        samples=samples,
        rate=dsp.raw_rate,
        alpha=alpha,
        dsp=dsp,
        seed=seed,
        mod=mod,
        demodulated=False,
        segment_length=seg_len,
        window_starts=starts if schedule is not None else None,
    )


def demodulate(
    record: PhotocurrentRecord, f_m: float, dsp: DspChain | None = None
) -> PhotocurrentRecord:
    """Lock-in demodulation: multiply by 2 sin, low-pass, decimate, settle.

    Deterministic in its inputs.  Each scheduled segment is filtered
    independently so no state bleeds across shutter gaps; the first
    ``SETTLE_SAMPLES`` output samples of every segment are dropped.
    """
    if record.demodulated:
        raise ValueError("record is already demodulated")
    dsp = dsp or record.dsp
    if abs(record.rate - dsp.raw_rate) > 1e-6 * dsp.raw_rate:
        raise ConfigError("record rate does not match dsp.raw_rate")
    check_aliasing(dsp, f_m)
    sos = lowpass_sos(dsp)
    dec = dsp.decimation
    if record.window_starts is None:
        starts = np.array([0.0])
    else:
        starts = record.window_starts
    outs = []
    out_starts = []
    for t0, seg in zip(starts, record.segments()):
        t = t0 + np.arange(seg.shape[1]) / record.rate
        y = 2.0 * np.sin(2.0 * np.pi * f_m * t)[None, :] * seg
        y = signal.sosfilt(sos, y, axis=1)
        y = y[:, ::dec][:, SETTLE_SAMPLES:]
        outs.append(y)
        out_starts.append(t0 + SETTLE_SAMPLES / dsp.output_rate)
    seg_out = outs[0].shape[1]
    baseband = np.concatenate(outs, axis=1)
    if record.window_starts is not None and baseband.shape[1] > dsp.n_output:
        baseband = baseband[:, : dsp.n_output]
    return PhotocurrentRecord(
        samples=baseband,
        rate=dsp.output_rate,
        alpha=record.alpha,
        dsp=dsp,
        seed=record.seed,
        mod=record.mod,
        demodulated=True,
        segment_length=seg_out if record.window_starts is not None else None,
        window_starts=np.asarray(out_starts) if record.window_starts is not None else None,
    )


def synthesize_homodyne(
    state: GaussianState,
    lo_alpha: np.ndarray,
    phase: float,
    n_samples: int,
    seed: int,
) -> HomodyneRecord:
    """Multi-pixel balanced-homodyne difference currents.

    Per sample a quadrature vector is drawn from the state's Gaussian law
    (x block at phase 0, p block at pi/2) and emitted as
    ``I^-_i = 2 |alpha_i| o_i``; samples are independent in time.
    """
    n = state.n_modes
    lo_alpha = np.asarray(lo_alpha, dtype=float)
    if lo_alpha.shape != (n,):
        raise ValueError("lo_alpha must have one entry per state mode")
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if not state.is_physical():
        raise ValueError("state violates the Heisenberg bound")
    if np.isclose(phase, 0.0):
        block = state.x_block
        mean = state.mean[:n]
    elif np.isclose(phase, np.pi / 2):
        block = state.p_block
        mean = state.mean[n:]
    else:
        raise ValueError("phase must be 0 (x) or pi/2 (p)")
    chol = np.linalg.cholesky(block)
    rng = _rng(seed)
    q = np.empty((n, n_samples))
    _draw_noise(rng, chol, n_samples, q, 0)
    q += mean[:, None]
    samples = 2.0 * np.abs(lo_alpha)[:, None] * q
    return HomodyneRecord(samples=samples, lo_alpha=lo_alpha, phase=phase, seed=seed)


def record_to_csv(record: PhotocurrentRecord, path) -> None:
    """Write time_s, pixel_1..pixel_n columns plus a key-value metadata sidecar."""
    import csv as _csv

    t = record.times()
    with open(path, "w", newline="") as fh:
        writer = _csv.writer(fh)
        writer.writerow(["time_s"] + [f"pixel_{i+1}" for i in range(record.n_pixels)])
        for j in range(record.n_samples):
            writer.writerow([repr(float(t[j]))] + [repr(float(v)) for v in record.samples[:, j]])
    meta = {
        "seed": record.seed,
        "rate_hz": record.rate,
        "raw_rate_hz": record.dsp.raw_rate,
        "output_rate_hz": record.dsp.output_rate,
        "lowpass_cutoff_hz": record.dsp.lowpass_cutoff,
        "lowpass_order": record.dsp.lowpass_order,
        "demodulated": record.demodulated,
        "n_pixels": record.n_pixels,
        "n_samples": record.n_samples,
        "alpha": " ".join(repr(float(a)) for a in record.alpha),
    }
    if record.mod is not None:
        meta["f_m_hz"] = record.mod.f_m
        meta["depth_omega_rad_s"] = record.mod.depth_omega
        meta["depth_n_photons_s"] = record.mod.depth_N
    with open(str(path) + ".meta.txt", "w") as fh:
        for key, val in meta.items():
            fh.write(f"{key} = {val}\n")


def record_from_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Read back (times, samples) from a record CSV."""
    import csv as _csv

    with open(path, newline="") as fh:
        reader = _csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader if row]
    if not header or header[0] != "time_s":
        raise ValueError(f"{path} is not a photocurrent record CSV")
    data = np.asarray(rows)
    return data[:, 0], data[:, 1:].T
