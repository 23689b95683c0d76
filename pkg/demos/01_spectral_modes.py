#!/usr/bin/env python3
# Spectral modes of a comb envelope and their pixel-basis projections:
# build the Gaussian mean field for a 795 nm / 8.8 nm FWHM pulse, derive the
# mode that carries central-frequency shifts, slice the spectrum into the
# 8-pixel detection basis, and see how well each target mode is captured.

import numpy as np

from combsense import (
    PixelArray,
    derivative_mode,
    gaussian_mode,
    hermite_gaussian_mode,
    make_grid,
    overlap,
    pixel_modes,
    project_coefficients,
    wavelength_to_angular,
)

omega0, delta_omega = wavelength_to_angular(795e-9, 8.8e-9)
print(f"carrier:        {omega0:.4e} rad/s")
print(f"spectral width: {delta_omega:.4e} rad/s")

grid = make_grid(omega0, delta_omega)
u = gaussian_mode(grid, omega0, delta_omega)
u_d = derivative_mode(u)

# the derivative mode is unit-norm and orthogonal to its parent
print(f"\n<u|u>   = {overlap(u, u).real:.12f}")
print(f"<u|u_d> = {abs(overlap(u, u_d)):.2e}")

# the Hermite-Gauss family generalizes the pair: HG_0 = u, HG_1 = u_d
for k in range(4):
    hg = hermite_gaussian_mode(grid, k, omega0, delta_omega)
    print(f"<HG_{k}|u_d> = {overlap(hg, u_d).real:+.6f}")

# slice the mean field on the 8-pixel array covering +-3 spectral widths
pixels = PixelArray.around(omega0, delta_omega, n_pixels=8, span_sigma=3.0)
modes, alpha = pixel_modes(u, pixels, n_photons=4e16)
print("\npixel amplitudes alpha_i (sqrt photons/s):")
print("  " + "  ".join(f"{a:.3e}" for a in alpha))
print(f"captured flux fraction: {np.sum(alpha**2) / 4e16:.6f}")

# projection coefficients and mode-matching efficiency for both targets
for target, name in ((u, "mean field"), (u_d, "derivative")):
    proj = project_coefficients(target, modes, name)
    print(f"\n{name} projection:")
    print("  m_i = " + "  ".join(f"{m:+.4f}" for m in proj.m))
    print(f"  eta = {proj.eta:.6f}  (eta^2 = {proj.eta**2:.6f})")

# optional figure
try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    w = (grid.points - omega0) / delta_omega
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(w, u.amplitude.real * np.sqrt(delta_omega), label="mean field")
    ax.plot(w, u_d.amplitude.real * np.sqrt(delta_omega), label="derivative mode")
    for e in pixels.edges:
        ax.axvline((e - omega0) / delta_omega, color="gray", lw=0.5, alpha=0.5)
    ax.set_xlabel("(omega - omega0) / delta_omega")
    ax.set_ylabel("amplitude (normalized)")
    ax.legend()
    fig.tight_layout()
    fig.savefig("demo01_modes.png", dpi=120)
    print("\nsaved demo01_modes.png")
except ImportError:
    pass
