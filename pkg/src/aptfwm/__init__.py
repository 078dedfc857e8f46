"""Anti-parity-time four-wave mixing: spectra, propagation, noise and fits."""

from .apt_core import (
    EffectiveModel,
    Regime,
    Spectrum,
    TransferCoefficients,
    bogoliubov_coefficients,
    gains,
    ideal_squeezing,
    spectrum,
    transfer_matrix,
)
from .config import RunConfig, load_config
from .detection import DetectorPair, apply_detectors, detected_squeezing
from .errors import AptError, ConfigError, DataError, NumericError, UncalibratedError
from .fitting import FitResult, GainDataset, fit_delta_k, synthetic_dataset
from .lossy import (
    MomentState,
    VarianceReport,
    beamsplitter_slice_oracle,
    build_lossy_generator,
    propagate_mean,
    propagate_moments,
    variance_diff_photon,
)
from .physical import (
    PhysicalParams,
    calibrate_coupling,
    density_from_temperature,
    effective_from_physical,
    temperature_from_density,
)
from .sweeps import SweepRecord, evaluate_model, locate_ep, optimal_squeezing, sweep
from .tables import OutputTable, read_dataset, write_dataset

__version__ = "0.1.0"
