"""combsense: multi-pixel spectrally-resolved frequency-comb metrology.

A numpy/scipy simulation and analysis library for shot-noise-limited and
squeezing-enhanced simultaneous estimation of the central frequency and mean
energy of an optical frequency comb, including multi-pixel homodyne
covariance tomography and supermode extraction.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    DeadPixelError,
    GridCoverageError,
    GridMismatchError,
    PhaseModelError,
    UnphysicalStateError,
)
from .spectral import (
    FrequencyGrid,
    PixelArray,
    Projection,
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
from .gaussian import (
    GaussianState,
    Supermode,
    SupermodeEntry,
    SupermodeSpec,
    SymplecticDecomposition,
    apply_loss,
    bloch_messiah,
    build_squeezed_comb,
    covariance_from_csv,
    covariance_to_csv,
    mix_synthetic_beam,
    rotate_global_quadrature,
    supermode_extract,
    symplectic_form,
    vacuum_state,
    williamson,
)
from .detection import (
    AcquisitionSchedule,
    DspChain,
    HomodyneRecord,
    ModulationConfig,
    PhotocurrentRecord,
    acquisition_windows,
    demodulate,
    demodulated_noise_gain,
    record_from_csv,
    record_to_csv,
    synthesize_direct,
    synthesize_homodyne,
)
from .estimation import (
    EstimationResult,
    ReconstructedCovariance,
    SnrCurve,
    build_estimation_result,
    crb_noise_scaled,
    estimation_result_to_json,
    per_event,
    reconstruct_covariance,
    reconstruct_mode_series,
    reconstructed_covariance_to_json,
    snr_curve,
    snr_curve_to_csv,
    sql_energy,
    sql_frequency,
)
from .scenarios import (
    Scene,
    build_scene,
    calibrated_state,
    load_config,
    run_scenario,
    validate_config,
    validate_config_file,
)

__all__ = [name for name in dir() if not name.startswith("_")]
