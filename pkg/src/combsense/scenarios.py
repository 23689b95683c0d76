"""Named reproduction scenarios driven by a TOML configuration.

Each scenario builds the optical scene (grid, modes, pixel bins,
projections) from the config, runs the simulation pipeline, and writes CSV
and JSON artifacts into ``out_dir/<scenario>/`` together with a manifest
recording the resolved config hash and library versions.  Outputs are
deterministic for a fixed config and seed.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
import platform
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import __version__
from .detection import DspChain, ModulationConfig, demodulate, synthesize_direct, synthesize_homodyne
from .errors import ConfigError
from .estimation import (
    SnrCurve,
    crb_noise_scaled,
    per_event,
    reconstruct_covariance,
    snr_curve,
    snr_curve_to_csv,
    sql_energy,
    sql_frequency,
)
from .gaussian import (
    GaussianState,
    SupermodeSpec,
    build_squeezed_comb,
    covariance_to_csv,
    mix_synthetic_beam,
    rotate_global_quadrature,
    supermode_extract,
    vacuum_state,
)
from .spectral import (
    PixelArray,
    Projection,
    derivative_mode,
    gaussian_mode,
    hermite_gaussian_mode,
    make_grid,
    pixel_modes,
    project_coefficients,
    wavelength_to_angular,
)

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover - depends on interpreter
    import tomli as tomllib

SCENARIOS = ("fig3", "fig4", "fig5", "sensitivity-table", "custom")

_DEFAULT_CONFIG = os.path.join(os.path.dirname(__file__), "data", "default.toml")


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class Diagnostic:
    """One config validation finding, addressed by a dotted field path."""

    path: str
    message: str

    def __str__(self):
        return f"{self.path}: {self.message}"


_SCHEMA = {
    "source": {"lambda0_m", "fwhm_lambda_m", "photon_rate_per_s"},
    "grid": {"span_sigma", "n_intervals"},
    "pixels": {"count", "span_sigma"},
    "squeezer": {
        "reflectivity",
        "global_phase_rad",
        "squeezing_db",
        "quadratures",
        "antisqueezing_db",
        "efficiency_intensity",
        "calibrated_var_derivative",
        "calibrated_var_mean_field",
    },
    "modulation": {"f_m_hz", "depths_sql_units", "energy_coupling"},
    "dsp": {"raw_rate_hz", "lowpass_cutoff_hz", "lowpass_order", "output_rate_hz", "n_output"},
    "homodyne": {"n_samples"},
    "run": {"trials", "seed"},
}


def load_raw_config(path=None) -> dict:
    """Parse the TOML config file (the shipped defaults when path is None)."""
    path = path or _DEFAULT_CONFIG
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def validate_config(raw: dict) -> list[Diagnostic]:
    """Check a parsed config against every module precondition.

    Returns an empty list iff the config is valid; each finding names the
    offending field with a dotted path.
    """
    diags: list[Diagnostic] = []

    def need(table: str, key: str, kind, positive=False):
        val = raw.get(table, {}).get(key)
        if val is None:
            diags.append(Diagnostic(f"{table}.{key}", "missing required key"))
            return None
        if kind is float and isinstance(val, int):
            val = float(val)
        if not isinstance(val, kind):
            diags.append(Diagnostic(f"{table}.{key}", f"expected {kind.__name__}"))
            return None
        if positive and not val > 0:
            diags.append(Diagnostic(f"{table}.{key}", "must be positive"))
            return None
        return val

    for table, keys in _SCHEMA.items():
        if table not in raw:
            diags.append(Diagnostic(table, "missing table"))
        else:
            for key in raw[table]:
                if key not in keys:
                    diags.append(Diagnostic(f"{table}.{key}", "unknown key"))
    for table in raw:
        if table not in _SCHEMA:
            diags.append(Diagnostic(table, "unknown table"))

    lam = need("source", "lambda0_m", float, positive=True)
    fwhm = need("source", "fwhm_lambda_m", float, positive=True)
    if lam is not None and fwhm is not None and fwhm >= lam:
        diags.append(Diagnostic("source.fwhm_lambda_m", "must be much smaller than lambda0_m"))
    need("source", "photon_rate_per_s", float, positive=True)

    need("grid", "span_sigma", float, positive=True)
    n_int = need("grid", "n_intervals", int, positive=True)
    if n_int is not None and n_int < 64:
        diags.append(Diagnostic("grid.n_intervals", "must be >= 64"))

    count = need("pixels", "count", int, positive=True)
    pix_span = need("pixels", "span_sigma", float, positive=True)
    grid_span = raw.get("grid", {}).get("span_sigma")
    if pix_span is not None and grid_span and pix_span >= grid_span:
        diags.append(Diagnostic("pixels.span_sigma", "must be smaller than grid.span_sigma"))
    if count is not None and n_int is not None and count > n_int // 4:
        diags.append(Diagnostic("pixels.count", "too many bins for the grid resolution"))

    sq = raw.get("squeezer", {})
    refl = sq.get("reflectivity")
    if refl is None or not (isinstance(refl, (int, float)) and 0 <= refl <= 1):
        diags.append(Diagnostic("squeezer.reflectivity", "must lie in [0, 1]"))
    if not isinstance(sq.get("global_phase_rad"), (int, float)):
        diags.append(Diagnostic("squeezer.global_phase_rad", "must be a number"))
    dbs = sq.get("squeezing_db")
    if not isinstance(dbs, list) or not dbs:
        diags.append(Diagnostic("squeezer.squeezing_db", "must be a non-empty list"))
        dbs = []
    for i, db in enumerate(dbs):
        if not isinstance(db, (int, float)) or db > 0:
            diags.append(Diagnostic(f"squeezer.squeezing_db[{i}]", "must be <= 0 dB"))
    quads = sq.get("quadratures")
    if quads is not None:
        if not isinstance(quads, list) or len(quads) != len(dbs):
            diags.append(Diagnostic("squeezer.quadratures", "must match squeezing_db length"))
        else:
            for i, q in enumerate(quads):
                if q not in ("amplitude", "phase"):
                    diags.append(
                        Diagnostic(f"squeezer.quadratures[{i}]", "must be 'amplitude' or 'phase'")
                    )
    anti = sq.get("antisqueezing_db")
    if anti is not None:
        if not isinstance(anti, list) or len(anti) != len(dbs):
            diags.append(Diagnostic("squeezer.antisqueezing_db", "must match squeezing_db length"))
        else:
            for i, (a, s) in enumerate(zip(anti, dbs)):
                if not isinstance(a, (int, float)) or (isinstance(s, (int, float)) and a < -s):
                    diags.append(
                        Diagnostic(
                            f"squeezer.antisqueezing_db[{i}]",
                            "must be >= -squeezing_db (mixed-state physicality)",
                        )
                    )
    eff = sq.get("efficiency_intensity")
    if eff is None or not (isinstance(eff, (int, float)) and 0 < eff <= 1):
        diags.append(Diagnostic("squeezer.efficiency_intensity", "must lie in (0, 1]"))
    for key in ("calibrated_var_derivative", "calibrated_var_mean_field"):
        v = sq.get(key)
        if v is None or not (isinstance(v, (int, float)) and 0 < v <= 1):
            diags.append(Diagnostic(f"squeezer.{key}", "must lie in (0, 1]"))

    f_m = need("modulation", "f_m_hz", float, positive=True)
    depths = raw.get("modulation", {}).get("depths_sql_units")
    if not isinstance(depths, list) or len(depths) < 3:
        diags.append(Diagnostic("modulation.depths_sql_units", "need at least 3 depths"))
    else:
        for i, d in enumerate(depths):
            if not isinstance(d, (int, float)) or d <= 0:
                diags.append(Diagnostic(f"modulation.depths_sql_units[{i}]", "must be positive"))
    coupling = raw.get("modulation", {}).get("energy_coupling")
    if not isinstance(coupling, (int, float)) or coupling < 0:
        diags.append(Diagnostic("modulation.energy_coupling", "must be >= 0"))

    raw_rate = need("dsp", "raw_rate_hz", float, positive=True)
    cutoff = need("dsp", "lowpass_cutoff_hz", float, positive=True)
    order = need("dsp", "lowpass_order", int, positive=True)
    out_rate = need("dsp", "output_rate_hz", float, positive=True)
    n_out = need("dsp", "n_output", int, positive=True)
    if raw_rate is not None and f_m is not None and raw_rate <= 4 * f_m:
        diags.append(Diagnostic("dsp.raw_rate_hz", f"must exceed 4*f_m = {4 * f_m:g}"))
    if out_rate is not None and cutoff is not None and out_rate > 2 * cutoff:
        diags.append(Diagnostic("dsp.output_rate_hz", "must not exceed 2*lowpass_cutoff_hz"))
    if raw_rate is not None and out_rate is not None:
        dec = raw_rate / out_rate
        if abs(dec - round(dec)) > 1e-9:
            diags.append(Diagnostic("dsp.raw_rate_hz", "must be an integer multiple of output_rate_hz"))
    if order is not None and order > 12:
        diags.append(Diagnostic("dsp.lowpass_order", "must be <= 12"))
    if n_out is not None and n_out < 16:
        diags.append(Diagnostic("dsp.n_output", "must be >= 16"))

    n_samp = need("homodyne", "n_samples", int, positive=True)
    if n_samp is not None and n_samp < 100:
        diags.append(Diagnostic("homodyne.n_samples", "must be >= 100"))

    need("run", "trials", int, positive=True)
    seed = raw.get("run", {}).get("seed")
    if not isinstance(seed, int) or seed < 0 or seed >= 2**64:
        diags.append(Diagnostic("run.seed", "must be an unsigned 64-bit integer"))

    return diags


def validate_config_file(path=None) -> list[Diagnostic]:
    try:
        raw = load_raw_config(path)
    except (OSError, tomllib.TOMLDecodeError) as exc:
        return [Diagnostic(path=str(path or _DEFAULT_CONFIG), message=f"parse error: {exc}")]
    return validate_config(raw)


def load_config(path=None) -> dict:
    """Parse and validate a config file, raising ConfigError on findings."""
    raw = load_raw_config(path)
    diags = validate_config(raw)
    if diags:
        raise ConfigError("; ".join(str(d) for d in diags))
    return raw


# ---------------------------------------------------------------------------
# scene construction


@dataclass(frozen=True)
class Scene:
    """Everything derived from the config that the scenarios share."""

    omega0: float
    delta_omega: float
    photon_rate: float
    grid: object
    mean_field: object
    pixels: PixelArray
    modes: list
    alpha: np.ndarray
    proj_mean_field: Projection
    proj_derivative: Projection
    sql_freq: float
    sql_energy: float
    efficiency_intensity: float

    @property
    def signal_efficiency(self) -> float:
        """Extra signal transfer beyond the pixel geometry.

        Chosen so the frequency channel's total amplitude efficiency equals
        sqrt(efficiency_intensity): the configured global intensity
        efficiency already includes the pixel-basis mode mismatch, which the
        projection contributes on its own as ``proj_derivative.eta``.
        """
        return np.sqrt(self.efficiency_intensity) / self.proj_derivative.eta


def build_scene(cfg: dict) -> Scene:
    src = cfg["source"]
    omega0, delta_omega = wavelength_to_angular(src["lambda0_m"], src["fwhm_lambda_m"])
    grid = make_grid(
        omega0,
        delta_omega,
        span_sigma=cfg["grid"]["span_sigma"],
        n_intervals=cfg["grid"]["n_intervals"],
    )
    mean_field = gaussian_mode(grid, omega0, delta_omega)
    deriv = derivative_mode(mean_field)
    pixels = PixelArray.around(
        omega0, delta_omega, n_pixels=cfg["pixels"]["count"], span_sigma=cfg["pixels"]["span_sigma"]
    )
    modes, alpha = pixel_modes(mean_field, pixels, src["photon_rate_per_s"])
    proj_mf = project_coefficients(mean_field, modes, "mean_field")
    proj_d = project_coefficients(deriv, modes, "derivative")
    return Scene(
        omega0=omega0,
        delta_omega=delta_omega,
        photon_rate=src["photon_rate_per_s"],
        grid=grid,
        mean_field=mean_field,
        pixels=pixels,
        modes=modes,
        alpha=alpha,
        proj_mean_field=proj_mf,
        proj_derivative=proj_d,
        sql_freq=sql_frequency(src["photon_rate_per_s"], delta_omega),
        sql_energy=sql_energy(src["photon_rate_per_s"]),
        efficiency_intensity=cfg["squeezer"]["efficiency_intensity"],
    )


def dsp_from_config(cfg: dict) -> DspChain:
    d = cfg["dsp"]
    return DspChain(
        raw_rate=d["raw_rate_hz"],
        lowpass_cutoff=d["lowpass_cutoff_hz"],
        lowpass_order=d["lowpass_order"],
        output_rate=d["output_rate_hz"],
        n_output=d["n_output"],
    )


def supermode_spec_from_config(cfg: dict) -> SupermodeSpec:
    sq = cfg["squeezer"]
    quads = sq.get("quadratures")
    anti = sq.get("antisqueezing_db")
    if quads is None:
        return SupermodeSpec.ladder(sq["squeezing_db"], antisqueezing_db=anti)
    from .gaussian import SupermodeEntry

    entries = tuple(
        SupermodeEntry(
            order=k,
            squeezing_db=db,
            quadrature=quads[k],
            antisqueezing_db=anti[k] if anti is not None else None,
        )
        for k, db in enumerate(sq["squeezing_db"])
    )
    return SupermodeSpec(entries=entries)


def calibrated_state(
    scene: Scene, var_derivative: float, var_mean_field: float
) -> GaussianState:
    """Pure state with the calibrated effective variances at the detector.

    The derivative direction is amplitude-squeezed to ``var_derivative`` and
    the mean-field direction phase-squeezed to ``var_mean_field`` (hence
    amplitude-antisqueezed), matching the configuration in which the
    frequency measurement is enhanced and the energy measurement degraded;
    a pi/2 global rotation swaps the roles.  The two directions are
    orthonormalized so the state is exactly pure.
    """
    if not (0 < var_derivative <= 1 and 0 < var_mean_field <= 1):
        raise ValueError("calibrated variances must lie in (0, 1]")
    n = len(scene.alpha)
    e_mf = scene.proj_mean_field.m / scene.proj_mean_field.eta
    d = scene.proj_derivative.m / scene.proj_derivative.eta
    d = d - (d @ e_mf) * e_mf
    e_d = d / np.linalg.norm(d)
    cx = np.eye(n)
    cp = np.eye(n)
    cx += np.outer(e_d, e_d) * (var_derivative - 1.0)
    cp += np.outer(e_d, e_d) * (1.0 / var_derivative - 1.0)
    cx += np.outer(e_mf, e_mf) * (1.0 / var_mean_field - 1.0)
    cp += np.outer(e_mf, e_mf) * (var_mean_field - 1.0)
    cov = np.block([[cx, np.zeros((n, n))], [np.zeros((n, n)), cp]])
    return GaussianState(n_modes=n, mean=np.zeros(2 * n), cov=cov)


# ---------------------------------------------------------------------------
# execution helpers


def thread_count(n_tasks: int) -> int:
    env = os.environ.get("COMBSENSE_THREADS")
    if env is not None:
        try:
            cap = max(1, int(env))
        except ValueError:
            raise ConfigError(f"COMBSENSE_THREADS must be an integer, got {env!r}")
    else:
        cap = os.cpu_count() or 1
    return max(1, min(cap, n_tasks))


def parallel_map(fn, items: list):
    """Map preserving order; worker pool capped by COMBSENSE_THREADS."""
    workers = thread_count(len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def derive_seed(base: int, *path: int) -> int:
    """Deterministic per-task seed from the base seed and an index path."""
    ss = np.random.SeedSequence([int(base) & (2**63 - 1), *[int(p) for p in path]])
    return int(ss.generate_state(1, np.uint64)[0])


def run_snr_trial(
    scene: Scene,
    state: GaussianState,
    dsp: DspChain,
    f_m: float,
    depths_omega: np.ndarray,
    energy_coupling: float,
    seed_base: int,
    trial: int,
    case: int,
) -> tuple[SnrCurve, SnrCurve]:
    """One trial: records at every depth, SNR curves for both projections."""
    records = []
    for j, d_omega in enumerate(depths_omega):
        depth_n = energy_coupling * scene.photon_rate * d_omega / scene.delta_omega
        mod = ModulationConfig(f_m=f_m, depth_omega=d_omega, depth_N=depth_n)
        raw = synthesize_direct(
            state,
            scene.alpha,
            mod,
            scene.proj_mean_field,
            scene.proj_derivative,
            scene.delta_omega,
            dsp,
            seed=derive_seed(seed_base, case, trial, j),
            signal_efficiency=scene.signal_efficiency,
        )
        records.append(demodulate(raw, f_m))
    curve_f = snr_curve(records, depths_omega, scene.proj_derivative)
    depths_n = energy_coupling * scene.photon_rate * depths_omega / scene.delta_omega
    curve_e = snr_curve(records, depths_n, scene.proj_mean_field)
    return curve_f, curve_e


def _mean_curve(curves: list[SnrCurve]) -> SnrCurve:
    depths = curves[0].depths
    snrs = np.mean([c.snrs for c in curves], axis=0)
    return SnrCurve(depths=depths, snrs=snrs)


# ---------------------------------------------------------------------------
# output plumbing


def _write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _config_hash(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def _write_manifest(out_dir: str, scenario: str, cfg: dict, seed: int) -> None:
    import scipy

    manifest = {
        "scenario": scenario,
        "seed": seed,
        "config_sha256": _config_hash(cfg),
        "versions": {
            "combsense": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
    }
    _write_json(os.path.join(out_dir, "manifest.json"), manifest)


def _check(checks: list[tuple[str, bool]]) -> list[str]:
    """Names of the embedded acceptance thresholds that were missed."""
    return [name for name, ok in checks if not ok]


# ---------------------------------------------------------------------------
# scenarios


def _scenario_fig3(scene: Scene, cfg: dict, out_dir: str, seed: int) -> dict:
    dsp = dsp_from_config(cfg)
    f_m = cfg["modulation"]["f_m_hz"]
    depths = np.asarray(cfg["modulation"]["depths_sql_units"], dtype=float) * scene.sql_freq
    coupling = cfg["modulation"]["energy_coupling"]
    trials = cfg["run"]["trials"]
    sq = cfg["squeezer"]
    states = {
        "vacuum": vacuum_state(len(scene.alpha)),
        "squeezed": calibrated_state(
            scene, sq["calibrated_var_derivative"], sq["calibrated_var_mean_field"]
        ),
    }
    curves: dict[str, SnrCurve] = {}
    for case, (name, state) in enumerate(states.items()):
        per_trial = parallel_map(
            lambda t: run_snr_trial(scene, state, dsp, f_m, depths, coupling, seed, t, case)[0],
            list(range(trials)),
        )
        curves[name] = _mean_curve(per_trial)

    snr_curve_to_csv(curves, os.path.join(out_dir, "snr_curves.csv"))
    ratio = curves["squeezed"].slope / curves["vacuum"].slope
    result = {
        "parameter": "central_frequency",
        "slope_vacuum": curves["vacuum"].slope,
        "slope_squeezed": curves["squeezed"].slope,
        "slope_ratio_frequency": ratio,
        "sensitivity_vacuum_rad_s_per_rtHz": curves["vacuum"].sensitivity,
        "sensitivity_squeezed_rad_s_per_rtHz": curves["squeezed"].sensitivity,
        "trials": trials,
        "checks_failed": [],
    }
    result["checks_failed"] = _check(
        [("slope_ratio_frequency in [1.10, 1.20]", 1.10 <= ratio <= 1.20)]
    )
    _write_json(os.path.join(out_dir, "slopes.json"), result)
    return result


def _scenario_fig5(scene: Scene, cfg: dict, out_dir: str, seed: int) -> dict:
    dsp = dsp_from_config(cfg)
    f_m = cfg["modulation"]["f_m_hz"]
    depths = np.asarray(cfg["modulation"]["depths_sql_units"], dtype=float) * scene.sql_freq
    coupling = cfg["modulation"]["energy_coupling"]
    trials = cfg["run"]["trials"]
    sq = cfg["squeezer"]
    base = calibrated_state(
        scene, sq["calibrated_var_derivative"], sq["calibrated_var_mean_field"]
    )
    states = {
        "vacuum": vacuum_state(len(scene.alpha)),
        "phase0": base,
        "phase90": rotate_global_quadrature(base, np.pi / 2),
    }
    slopes: dict[str, dict[str, float]] = {}
    csv_curves: dict[str, SnrCurve] = {}
    for case, (name, state) in enumerate(states.items()):
        per_trial = parallel_map(
            lambda t: run_snr_trial(scene, state, dsp, f_m, depths, coupling, seed, t, case),
            list(range(trials)),
        )
        curve_f = _mean_curve([p[0] for p in per_trial])
        curve_e = _mean_curve([p[1] for p in per_trial])
        slopes[name] = {"derivative": curve_f.slope, "mean_field": curve_e.slope}
        if name != "vacuum":
            # the four headline curves: two projections x two squeezer phases
            csv_curves[f"derivative_{name}"] = curve_f
            csv_curves[f"mean_field_{name}"] = SnrCurve(depths=curve_f.depths, snrs=curve_e.snrs)

    snr_curve_to_csv(csv_curves, os.path.join(out_dir, "snr_curves.csv"))
    ratios = {
        "frequency_phase0": slopes["phase0"]["derivative"] / slopes["vacuum"]["derivative"],
        "frequency_phase90": slopes["phase90"]["derivative"] / slopes["vacuum"]["derivative"],
        "energy_phase0": slopes["phase0"]["mean_field"] / slopes["vacuum"]["mean_field"],
        "energy_phase90": slopes["phase90"]["mean_field"] / slopes["vacuum"]["mean_field"],
    }
    result = {
        "slopes": slopes,
        "slope_ratios": ratios,
        "ratio_products": {
            "frequency": ratios["frequency_phase0"] * ratios["frequency_phase90"],
            "energy": ratios["energy_phase0"] * ratios["energy_phase90"],
        },
        "trials": trials,
        "checks_failed": [],
    }
    result["checks_failed"] = _check(
        [
            ("frequency enhanced at phase0 (1.15 +- 0.03)", abs(ratios["frequency_phase0"] - 1.15) <= 0.03),
            ("energy enhanced at phase90 (1.19 +- 0.03)", abs(ratios["energy_phase90"] - 1.19) <= 0.03),
            ("frequency degraded at phase90", ratios["frequency_phase90"] < 1.0),
            ("energy degraded at phase0", ratios["energy_phase0"] < 1.0),
        ]
    )
    _write_json(os.path.join(out_dir, "slope_ratios.json"), result)
    return result


def _scenario_fig4(scene: Scene, cfg: dict, out_dir: str, seed: int) -> dict:
    spec = supermode_spec_from_config(cfg)
    state = build_squeezed_comb(spec, scene.modes, scene.mean_field)
    n_samples = cfg["homodyne"]["n_samples"]
    rec_x = synthesize_homodyne(state, scene.alpha, 0.0, n_samples, derive_seed(seed, 4, 0))
    rec_p = synthesize_homodyne(state, scene.alpha, np.pi / 2, n_samples, derive_seed(seed, 4, 1))
    recon = reconstruct_covariance(rec_x, rec_p)

    covariance_to_csv(state.cov, os.path.join(out_dir, "covariance_truth.csv"))
    covariance_to_csv(recon.cov, os.path.join(out_dir, "covariance_reconstructed.csv"))

    def mode_table(cov) -> list[dict]:
        table = []
        sms = supermode_extract(cov)
        for entry in spec.entries:
            hg = hermite_gaussian_mode(
                scene.mean_field.grid, entry.order, scene.omega0, scene.delta_omega
            )
            b = project_coefficients(hg, scene.modes).m
            b = b / np.linalg.norm(b)
            best = max(sms, key=lambda m: abs(float(m.vector @ b)))
            table.append(
                {
                    "order": entry.order,
                    "quadrature": entry.quadrature,
                    "input_db": entry.squeezing_db,
                    "extracted_db": best.db_x if entry.quadrature == "amplitude" else best.db_p,
                    "overlap_sq": float(best.vector @ b) ** 2,
                }
            )
        return table

    truth_modes = mode_table(state.cov)
    recon_modes = mode_table(recon.cov)
    result = {
        "n_samples": recon.n_samples,
        "supermodes_noiseless": truth_modes,
        "supermodes_reconstructed": recon_modes,
        "checks_failed": [],
    }
    lead = recon_modes[0]
    result["checks_failed"] = _check(
        [
            (
                "leading reconstructed mode within -2.9 +- 0.2 dB",
                abs(lead["extracted_db"] - lead["input_db"]) <= 0.2,
            ),
            ("leading mode overlap > 0.99", lead["overlap_sq"] > 0.99),
        ]
    )
    _write_json(os.path.join(out_dir, "supermodes.json"), result)
    return result


def _scenario_sensitivity_table(scene: Scene, cfg: dict, out_dir: str, seed: int) -> dict:
    sq = cfg["squeezer"]
    eta = np.sqrt(scene.efficiency_intensity)
    bandwidth = cfg["dsp"]["lowpass_cutoff_hz"]
    var_d = sq["calibrated_var_derivative"]
    var_mf = sq["calibrated_var_mean_field"]

    f_sql = scene.sql_freq
    f_meas = crb_noise_scaled(f_sql, 1.0, eta)
    f_quan = crb_noise_scaled(f_sql, var_d, eta)
    e_sql = scene.sql_energy
    e_meas = crb_noise_scaled(e_sql, 1.0, eta)
    e_quan = crb_noise_scaled(e_sql, var_mf, eta)
    # detected-photon referenced bookkeeping: the SQL of the photons that
    # actually reach the detector, sqrt(eta^2 * N)
    e_sql_detected = np.sqrt(scene.efficiency_intensity) * e_sql
    e_quan_detected = e_sql_detected * np.sqrt(var_mf)

    table = {
        "frequency_rad_s_per_rtHz": {
            "sql": f_sql,
            "measured": f_meas,
            "quantum_enhanced": f_quan,
        },
        "frequency_rad_s_per_event": {
            "sql": per_event(f_sql, bandwidth),
            "measured": per_event(f_meas, bandwidth),
            "quantum_enhanced": per_event(f_quan, bandwidth),
        },
        "energy_photons_per_rtHz_incident": {
            "sql": e_sql,
            "measured": e_meas,
            "quantum_enhanced": e_quan,
        },
        "energy_photons_per_rtHz_detected": {
            "sql": e_sql_detected,
            "quantum_enhanced": e_quan_detected,
            "ratio_sql_over_quantum": e_sql_detected / e_quan_detected,
        },
        "enhancement": {
            "frequency": 1.0 / np.sqrt(var_d),
            "energy": 1.0 / np.sqrt(var_mf),
        },
        "measurement": {
            "bandwidth_hz": bandwidth,
            "event_time_s": 1.0 / bandwidth,
            "efficiency_intensity": scene.efficiency_intensity,
        },
        "flags": {
            "reference_per_event_photon_counts": {
                "reference_values": [3.8e8, 3.1e8],
                "status": "not_derivable",
                "detail": (
                    "the reference per-event photon counts are inconsistent with "
                    "per-rtHz values times sqrt(bandwidth) by roughly two orders of "
                    "magnitude; the derivable values are "
                    f"{per_event(e_sql_detected, bandwidth):.3e} and "
                    f"{per_event(e_quan_detected, bandwidth):.3e}; the ratio "
                    f"{e_sql_detected / e_quan_detected:.3f} is reproduced instead"
                ),
            },
            "practical_energy_sql_bookkeeping": {
                "reference_value": 1.7e8,
                "status": "ambiguous_convention",
                "detail": (
                    "a 'practical' sensitivity below the ideal SQL follows only the "
                    "detected-photon convention sqrt(eta^2*N) = "
                    f"{e_sql_detected:.3e}; referenced to incident photons the "
                    f"efficiency-degraded bound is {e_meas:.3e}; both are reported"
                ),
            },
        },
        "checks_failed": [],
    }
    table["checks_failed"] = _check(
        [
            ("sql_frequency = 5.57e4 within 0.5%", abs(f_sql / 5.57e4 - 1) <= 0.005),
            ("measured_frequency = 6.65e4 within 1%", abs(f_meas / 6.65e4 - 1) <= 0.01),
            ("quantum_frequency = 5.78e4 within 1%", abs(f_quan / 5.78e4 - 1) <= 0.01),
            ("per_event_measured = 1.49e7 within 1%", abs(per_event(f_meas, bandwidth) / 1.49e7 - 1) <= 0.01),
            ("per_event_quantum = 1.29e7 within 1%", abs(per_event(f_quan, bandwidth) / 1.29e7 - 1) <= 0.01),
            ("sql_energy = 2e8 exactly", e_sql == 2e8),
            (
                "detected-convention ratio consistent with 19% enhancement",
                abs(e_sql_detected / e_quan_detected - 1.0 / np.sqrt(var_mf)) < 1e-9,
            ),
        ]
    )
    _write_json(os.path.join(out_dir, "sensitivity_table.json"), table)
    with open(os.path.join(out_dir, "sensitivity_table.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["quantity", "sql", "measured", "quantum_enhanced"])
        writer.writerow(
            ["frequency_rad_s_per_rtHz", repr(f_sql), repr(f_meas), repr(f_quan)]
        )
        writer.writerow(
            [
                "frequency_rad_s_per_event",
                repr(per_event(f_sql, bandwidth)),
                repr(per_event(f_meas, bandwidth)),
                repr(per_event(f_quan, bandwidth)),
            ]
        )
        writer.writerow(
            ["energy_photons_per_rtHz_incident", repr(e_sql), repr(e_meas), repr(e_quan)]
        )
        writer.writerow(
            [
                "energy_photons_per_rtHz_detected",
                repr(float(e_sql_detected)),
                "",
                repr(float(e_quan_detected)),
            ]
        )
    return table


def _scenario_custom(scene: Scene, cfg: dict, out_dir: str, seed: int) -> dict:
    """End-to-end run of the physical squeezer model from the config.

    Builds the squeezed comb from the dB ladder, applies the configured
    global phase, mixes it with the bright beam on the beamsplitter, and
    runs the same SNR pipeline as fig3/fig5 against the vacuum baseline.
    """
    dsp = dsp_from_config(cfg)
    f_m = cfg["modulation"]["f_m_hz"]
    depths = np.asarray(cfg["modulation"]["depths_sql_units"], dtype=float) * scene.sql_freq
    coupling = cfg["modulation"]["energy_coupling"]
    trials = cfg["run"]["trials"]
    sq = cfg["squeezer"]

    spec = supermode_spec_from_config(cfg)
    comb = build_squeezed_comb(spec, scene.modes, scene.mean_field)
    comb = rotate_global_quadrature(comb, sq["global_phase_rad"])
    beam = mix_synthetic_beam(
        comb, scene.alpha, sq["reflectivity"], detected_flux=scene.photon_rate
    )
    states = {"vacuum": vacuum_state(len(scene.alpha)), "synthetic_beam": beam}
    slopes = {}
    curves = {}
    for case, (name, state) in enumerate(states.items()):
        per_trial = parallel_map(
            lambda t: run_snr_trial(scene, state, dsp, f_m, depths, coupling, seed, t, case),
            list(range(trials)),
        )
        curve_f = _mean_curve([p[0] for p in per_trial])
        curve_e = _mean_curve([p[1] for p in per_trial])
        slopes[name] = {"derivative": curve_f.slope, "mean_field": curve_e.slope}
        curves[f"derivative_{name}"] = curve_f
        curves[f"mean_field_{name}"] = SnrCurve(depths=curve_f.depths, snrs=curve_e.snrs)

    snr_curve_to_csv(curves, os.path.join(out_dir, "snr_curves.csv"))
    sms = supermode_extract(beam.cov)
    result = {
        "slopes": slopes,
        "slope_ratios": {
            "frequency": slopes["synthetic_beam"]["derivative"] / slopes["vacuum"]["derivative"],
            "energy": slopes["synthetic_beam"]["mean_field"] / slopes["vacuum"]["mean_field"],
        },
        "beam_supermode_db_x": [m.db_x for m in sms],
        "beam_supermode_db_p": [m.db_p for m in sms],
        "trials": trials,
        "checks_failed": [],
    }
    _write_json(os.path.join(out_dir, "slopes.json"), result)
    return result


_RUNNERS = {
    "fig3": _scenario_fig3,
    "fig4": _scenario_fig4,
    "fig5": _scenario_fig5,
    "sensitivity-table": _scenario_sensitivity_table,
    "custom": _scenario_custom,
}


def run_scenario(
    name: str,
    config_path=None,
    out_dir: str = "out",
    seed: int | None = None,
    check: bool = False,
) -> int:
    """Execute a named scenario; returns a process exit status.

    Writes artifacts under ``out_dir/<name>/``.  With ``check=True`` the
    exit status reflects the embedded acceptance thresholds (1 on any miss).
    """
    if name not in _RUNNERS:
        raise ConfigError(f"unknown scenario {name!r}; choose from {', '.join(SCENARIOS)}")
    cfg = load_config(config_path)
    if seed is not None:
        cfg = {**cfg, "run": {**cfg["run"], "seed": int(seed)}}
    seed_val = cfg["run"]["seed"]
    scene = build_scene(cfg)
    target = os.path.join(out_dir, name)
    os.makedirs(target, exist_ok=True)
    result = _RUNNERS[name](scene, cfg, target, seed_val)
    _write_manifest(target, name, cfg, seed_val)
    failures = result.get("checks_failed", [])
    if check and failures:
        print(f"combsense {name}: failed checks: " + "; ".join(failures), file=sys.stderr)
        return 1
    return 0
