"""Acceptance suite: every headline criterion at its stated tolerance.

Run with ``pytest tests/test_acceptance.py -v -s`` to see one PASS/FAIL line
per criterion.  Monte Carlo criteria use fixed seeds and their honest
statistical tolerances (3 standard errors over the stated trial counts).
"""

import json
from contextlib import contextmanager

import numpy as np
import pytest

from combsense import (
    DspChain,
    ModulationConfig,
    PixelArray,
    Projection,
    SupermodeSpec,
    apply_loss,
    build_scene,
    calibrated_state,
    crb_noise_scaled,
    demodulate,
    derivative_mode,
    gaussian_mode,
    hermite_gaussian_mode,
    load_config,
    make_grid,
    mix_synthetic_beam,
    per_event,
    pixel_modes,
    project_coefficients,
    reconstruct_covariance,
    rotate_global_quadrature,
    run_scenario,
    snr_curve,
    sql_energy,
    sql_frequency,
    supermode_extract,
    symplectic_form,
    synthesize_direct,
    synthesize_homodyne,
    vacuum_state,
    williamson,
)
from combsense.scenarios import derive_seed, parallel_map
from conftest import PHOTON_RATE, seeded
from test_gaussian import random_physical_state

LADDER_DB = [-2.9, -2.2, -1.7, -1.4]


@contextmanager
def report(label):
    try:
        yield
    except Exception:
        print(f"[acceptance] {label}: FAIL")
        raise
    print(f"[acceptance] {label}: PASS")


@pytest.fixture(scope="module")
def cfg():
    return load_config()


@pytest.fixture(scope="module")
def scene8(cfg):
    return build_scene(cfg)


def _fine_scene(cfg, count, span):
    import copy

    fine = copy.deepcopy(cfg)
    fine["pixels"]["count"] = count
    fine["pixels"]["span_sigma"] = span
    return build_scene(fine)


@pytest.fixture(scope="module")
def scene48(cfg):
    return _fine_scene(cfg, 48, 5.0)


@pytest.fixture(scope="module")
def scene64(cfg):
    return _fine_scene(cfg, 64, 5.0)


@pytest.fixture(scope="module")
def dsp_fast():
    """Valid chain at a lighter raw rate (> 4 f_m) for the Monte Carlo runs."""
    return DspChain(raw_rate=8e6)


def mc_sensitivity(scene, state, dsp, depths, eff, seed_base, trial):
    records = []
    for j, d in enumerate(depths):
        mod = ModulationConfig(depth_omega=d)
        raw = synthesize_direct(
            state, scene.alpha, mod, scene.proj_mean_field, scene.proj_derivative,
            scene.delta_omega, dsp, seed=derive_seed(seed_base, trial, j),
            signal_efficiency=eff,
        )
        records.append(demodulate(raw, mod.f_m))
    return snr_curve(records, depths, scene.proj_derivative)


def test_criterion_1_sql_frequency(scene8):
    with report("criterion 1 (SQL frequency 5.57e4 within 0.5%)"):
        assert scene8.sql_freq == pytest.approx(5.57e4, rel=0.005)


def test_criterion_2_efficiency_degraded(scene8):
    with report("criterion 2 (66.5e3 within 1%, per-event 1.49e7 within 1%)"):
        meas = crb_noise_scaled(scene8.sql_freq, 1.0, np.sqrt(0.70))
        assert meas == pytest.approx(6.65e4, rel=0.01)
        assert per_event(meas, 5e4) == pytest.approx(1.49e7, rel=0.01)


def test_criterion_3_quantum_enhanced(scene8):
    with report("criterion 3 (57.8e3 within 1%, per-event 1.29e7 within 1%)"):
        quan = crb_noise_scaled(scene8.sql_freq, 0.756, np.sqrt(0.70))
        assert quan == pytest.approx(5.78e4, rel=0.01)
        assert per_event(quan, 5e4) == pytest.approx(1.29e7, rel=0.01)


def test_criterion_4_sql_energy():
    with report("criterion 4 (SQL energy exactly 2e8)"):
        assert sql_energy(4e16) == 2e8


def test_criterion_5_monte_carlo_closure(scene8, scene48, dsp_fast):
    with report("criterion 5 (MC sensitivity matches analytics within 3 sigma, 20 trials)"):
        trials = 20
        eta_total = np.sqrt(0.70)
        cases = [
            # (scene, state, signal_efficiency, analytic target)
            ("sql", scene48, vacuum_state(len(scene48.alpha)), 1.0, scene48.sql_freq),
            (
                "measured",
                scene8,
                vacuum_state(len(scene8.alpha)),
                eta_total / scene8.proj_derivative.eta,
                crb_noise_scaled(scene8.sql_freq, 1.0, eta_total),
            ),
            (
                "quantum",
                scene8,
                calibrated_state(scene8, 0.756, 0.706),
                eta_total / scene8.proj_derivative.eta,
                crb_noise_scaled(scene8.sql_freq, 0.756, eta_total),
            ),
        ]
        for case_idx, (name, scene, state, eff, target) in enumerate(cases):
            depths = np.array([0.5, 1.0, 2.0]) * target
            base = derive_seed(505, case_idx)
            sens = parallel_map(
                lambda t: mc_sensitivity(scene, state, dsp_fast, depths, eff, base, t).sensitivity,
                list(range(trials)),
            )
            sens = np.asarray(sens)
            sem = sens.std(ddof=1) / np.sqrt(trials)
            gap = abs(sens.mean() - target)
            print(
                f"  case {name}: extracted {sens.mean():.4e} vs target {target:.4e} "
                f"(gap {gap / target * 100:.2f}%, 3*SEM {3 * sem / target * 100:.2f}%)"
            )
            assert gap <= 3 * sem


def test_criterion_6_enhancement_ratios(scene8, dsp_fast):
    with report("criterion 6 (ratios 1.15/1.19 +- 0.03 and role swap under pi/2)"):
        trials = 8
        depths = np.array([1.0, 2.0, 3.0]) * scene8.sql_freq
        coupling = 1.0
        base_state = calibrated_state(scene8, 0.756, 0.706)
        states = {
            "vacuum": vacuum_state(8),
            "phase0": base_state,
            "phase90": rotate_global_quadrature(base_state, np.pi / 2),
        }
        slopes = {}
        for case_idx, (name, state) in enumerate(states.items()):
            def one_trial(t):
                records = []
                for j, d in enumerate(depths):
                    depth_n = coupling * scene8.photon_rate * d / scene8.delta_omega
                    mod = ModulationConfig(depth_omega=d, depth_N=depth_n)
                    raw = synthesize_direct(
                        state, scene8.alpha, mod, scene8.proj_mean_field,
                        scene8.proj_derivative, scene8.delta_omega, dsp_fast,
                        seed=derive_seed(606, case_idx, t, j),
                        signal_efficiency=scene8.signal_efficiency,
                    )
                    records.append(demodulate(raw, mod.f_m))
                cf = snr_curve(records, depths, scene8.proj_derivative)
                depths_n = coupling * scene8.photon_rate * depths / scene8.delta_omega
                ce = snr_curve(records, depths_n, scene8.proj_mean_field)
                return cf.slope, ce.slope

            pairs = parallel_map(one_trial, list(range(trials)))
            slopes[name] = {
                "freq": np.mean([p[0] for p in pairs]),
                "energy": np.mean([p[1] for p in pairs]),
            }
        r_f0 = slopes["phase0"]["freq"] / slopes["vacuum"]["freq"]
        r_f9 = slopes["phase90"]["freq"] / slopes["vacuum"]["freq"]
        r_e0 = slopes["phase0"]["energy"] / slopes["vacuum"]["energy"]
        r_e9 = slopes["phase90"]["energy"] / slopes["vacuum"]["energy"]
        print(
            f"  freq ratios: phase0 {r_f0:.3f} phase90 {r_f9:.3f} | "
            f"energy ratios: phase0 {r_e0:.3f} phase90 {r_e9:.3f}"
        )
        assert abs(r_f0 - 1.15) <= 0.03
        assert abs(r_e9 - 1.19) <= 0.03
        assert r_f9 < 1.0
        assert r_e0 < 1.0
        assert abs(r_f0 * r_f9 - 1.0) <= 0.06
        assert abs(r_e0 * r_e9 - 1.0) <= 0.06


def test_criterion_7_covariance_round_trip(scene64):
    with report("criterion 7 (ladder round trip: 0.05 dB noiseless, 0.2 dB at 1e5 samples)"):
        from combsense import build_squeezed_comb

        spec = SupermodeSpec.ladder(LADDER_DB)
        state = build_squeezed_comb(spec, scene64.modes, scene64.mean_field)
        rec_x = synthesize_homodyne(state, scene64.alpha, 0.0, 100000, seed=707)
        rec_p = synthesize_homodyne(state, scene64.alpha, np.pi / 2, 100000, seed=708)
        recon = reconstruct_covariance(rec_x, rec_p)

        hg_vectors = []
        for k in range(4):
            hg = hermite_gaussian_mode(
                scene64.mean_field.grid, k, scene64.omega0, scene64.delta_omega
            )
            b = project_coefficients(hg, scene64.modes).m
            hg_vectors.append(b / np.linalg.norm(b))

        for cov, tol, tag in ((state.cov, 0.05, "noiseless"), (recon.cov, 0.2, "reconstructed")):
            sms = supermode_extract(cov)
            for k, db in enumerate(LADDER_DB):
                best = max(sms, key=lambda m: abs(float(m.vector @ hg_vectors[k])))
                got = best.db_x if k % 2 == 0 else best.db_p
                overlap_sq = float(best.vector @ hg_vectors[k]) ** 2
                print(f"  {tag} HG_{k}: {got:+.3f} dB vs {db:+.1f} dB, overlap^2 {overlap_sq:.4f}")
                assert got == pytest.approx(db, abs=tol)
                assert overlap_sq > 0.99


def test_criterion_8_property_suites(scene8, cfg):
    with report("criterion 8 (property suites)"):
        # mode orthonormality / unit norms at 1e-9
        grid = scene8.mean_field.grid
        modes = [scene8.mean_field, derivative_mode(scene8.mean_field)]
        modes += [
            hermite_gaussian_mode(grid, k, scene8.omega0, scene8.delta_omega)
            for k in range(5)
        ]
        modes += list(scene8.modes)
        assert all(abs(m.norm() - 1.0) < 1e-9 for m in modes)

        # Parseval bound on random unit targets
        rng = seeded(808)
        for _ in range(10):
            target = gaussian_mode(
                grid,
                scene8.omega0 + rng.uniform(-1.5, 1.5) * scene8.delta_omega,
                scene8.delta_omega * rng.uniform(0.4, 1.2),
            )
            proj = project_coefficients(target, scene8.modes)
            assert np.sum(proj.m**2) <= 1.0 + 1e-9

        # symplectic identity of williamson output
        for i in range(20):
            st, _ = random_physical_state(seeded(900 + i), 4)
            dec = williamson(st.cov)
            j = symplectic_form(4)
            assert np.abs(dec.S @ j @ dec.S.T - j).max() < 1e-8

        # physicality preserved through the channels, 100 random states
        rng = seeded(818)
        for _ in range(100):
            st, _ = random_physical_state(rng, 4)
            for out in (
                apply_loss(st, rng.uniform(0, 1)),
                mix_synthetic_beam(st, rng.normal(size=4), rng.uniform(0, 1)),
                rotate_global_quadrature(st, rng.uniform(0, 2 * np.pi)),
            ):
                assert out.symplectic_eigenvalues().min() >= 1.0 - 1e-8

        # covariance-estimator error exponent -0.5 +- 0.1
        from combsense import build_squeezed_comb

        ladder = build_squeezed_comb(
            SupermodeSpec.ladder(LADDER_DB), scene8.modes, scene8.mean_field
        )
        sizes = np.array([1000, 3162, 10000, 31623, 100000])
        errs = []
        for i, n in enumerate(sizes):
            x = synthesize_homodyne(ladder, scene8.alpha, 0.0, int(n), seed=830 + i)
            p = synthesize_homodyne(ladder, scene8.alpha, np.pi / 2, int(n), seed=840 + i)
            errs.append(np.linalg.norm(reconstruct_covariance(x, p).cov - ladder.cov))
        slope = np.polyfit(np.log(sizes), np.log(errs), 1)[0]
        print(f"  estimator error exponent: {slope:.3f}")
        assert abs(slope + 0.5) <= 0.1

        # bit-identical reruns per seed
        dsp = DspChain(n_output=64)
        mod = ModulationConfig(depth_omega=scene8.sql_freq)
        args = (
            vacuum_state(8), scene8.alpha, mod, scene8.proj_mean_field,
            scene8.proj_derivative, scene8.delta_omega, dsp,
        )
        a = synthesize_direct(*args, seed=850)
        b = synthesize_direct(*args, seed=850)
        assert np.array_equal(a.samples, b.samples)
        hx_a = synthesize_homodyne(ladder, scene8.alpha, 0.0, 1000, seed=851)
        hx_b = synthesize_homodyne(ladder, scene8.alpha, 0.0, 1000, seed=851)
        assert np.array_equal(hx_a.samples, hx_b.samples)


def test_criterion_9_documented_irreproducibility(tmp_path):
    with report("criterion 9 (irreproducible reference values flagged, ratio reproduced)"):
        assert run_scenario("sensitivity-table", out_dir=str(tmp_path), check=True) == 0
        table = json.loads(
            (tmp_path / "sensitivity-table" / "sensitivity_table.json").read_text()
        )
        flags = table["flags"]
        per_event_flag = flags["reference_per_event_photon_counts"]
        assert per_event_flag["status"] == "not_derivable"
        assert per_event_flag["reference_values"] == [3.8e8, 3.1e8]
        sql_flag = flags["practical_energy_sql_bookkeeping"]
        assert sql_flag["status"] == "ambiguous_convention"
        assert sql_flag["reference_value"] == 1.7e8
        ratio = table["energy_photons_per_rtHz_detected"]["ratio_sql_over_quantum"]
        assert ratio == pytest.approx(1.19, abs=0.005)
        # the reference 1.7e8 / 1.4e8 = 1.214 is consistent with this ratio
        assert abs(1.7e8 / 1.4e8 - ratio) / ratio < 0.03
        both = table["energy_photons_per_rtHz_incident"]
        assert both["sql"] == 2e8 and both["measured"] > both["sql"]
