"""Lab-level parameters and their mapping onto the effective rates.

The coupling follows kappa = g N / (2 c Delta_2), scaled by the pump as
(Omega / Omega_ref)^p.  The residual probe loss is a phenomenological stub
alpha = alpha_ref (N / N_ref) (Omega_ref / Omega)^q.  Neither g nor alpha_ref
is known from first principles here; they are calibration inputs.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import scipy.optimize
from scipy.constants import Boltzmann, c as SPEED_OF_LIGHT, torr

from .apt_core import EffectiveModel
from .errors import ConfigError, UncalibratedError

HF_SPLITTING_GHZ = 3.0357
RB85_ABUNDANCE = 0.7217
# log10(P / torr) = ATM_TO_TORR_LOG + a - b / T  (liquid rubidium)
ATM_TO_TORR_LOG = 2.881
VAPOR_A = 4.857
VAPOR_B = 4215.0


@dataclass(frozen=True)
class PhysicalParams:
    """Experimental knobs.

    Units: detunings in GHz, two-photon detuning in MHz, ``omega_ghz`` is
    Omega/2pi in GHz, densities in cm^-3, angles in degrees, lengths in m,
    ``delta_k`` in rad/m, ``alpha_ref`` in rad/m, ``g`` in SI
    (kappa comes out in rad/m).  ``delta_2ph_mhz`` and ``theta_deg`` are
    carried for the record only.
    """

    delta_k: float = 210.0
    length: float = 0.019
    delta1_ghz: float = 0.7
    delta_2ph_mhz: float = 0.0
    omega_ghz: float = 0.42
    n_density: float | None = None
    temperature_c: float | None = None
    theta_deg: float = 0.39
    g: float | None = None
    alpha_ref: float = 0.0
    n_ref: float = 1e13
    omega_ref_ghz: float = 0.42
    kappa_pump_exponent: float = 2.0
    loss_pump_exponent: float = 2.0
    vapor_a: float = VAPOR_A
    vapor_b: float = VAPOR_B

    def __post_init__(self):
        if self.n_density is not None and self.temperature_c is not None:
            raise ConfigError("give either n_density or temperature_c, not both")
        if self.n_density is not None and self.n_density < 0:
            raise ConfigError("n_density must be non-negative")
        if not self.omega_ghz > 0:
            raise ConfigError("omega_ghz must be positive")
        if not self.length > 0:
            raise ConfigError("length must be positive")
        if self.alpha_ref < 0:
            raise ConfigError("alpha_ref must be non-negative")

    @property
    def delta2_ghz(self) -> float:
        return self.delta1_ghz + HF_SPLITTING_GHZ

    @property
    def density(self) -> float:
        if self.n_density is not None:
            return self.n_density
        if self.temperature_c is not None:
            return density_from_temperature(self.temperature_c, self.vapor_a, self.vapor_b)
        raise ConfigError("atomic density is not set (n_density or temperature_c)")

    def replace(self, **changes) -> "PhysicalParams":
        if "n_density" in changes and "temperature_c" not in changes:
            changes["temperature_c"] = None
        return dataclasses.replace(self, **changes)


def _coupling_prefactor(p: PhysicalParams) -> float:
    """kappa / (g N) including the pump scaling, N in cm^-3."""
    delta2 = 2 * math.pi * p.delta2_ghz * 1e9
    if delta2 == 0:
        raise ConfigError("Delta_2 = 0 makes the coupling singular")
    pump = (p.omega_ghz / p.omega_ref_ghz) ** p.kappa_pump_exponent
    return 1e6 / (2 * SPEED_OF_LIGHT * delta2) * pump


def kappa_from_physical(p: PhysicalParams) -> float:
    if p.g is None:
        raise UncalibratedError("coupling constant g is not set and no calibration was given")
    n = p.density
    if n < 0:
        raise ConfigError("density must be non-negative")
    return p.g * n * _coupling_prefactor(p)


def alpha_from_physical(p: PhysicalParams) -> float:
    pump = (p.omega_ref_ghz / p.omega_ghz) ** p.loss_pump_exponent
    return p.alpha_ref * (p.density / p.n_ref) * pump


def calibrate_coupling(p: PhysicalParams, n_ep: float) -> float:
    """g that places the exceptional point at density ``n_ep``."""
    if not n_ep > 0:
        raise ConfigError("EP density must be positive")
    return abs(p.delta_k) / 2.0 / (n_ep * _coupling_prefactor(p))


def effective_from_physical(p: PhysicalParams) -> EffectiveModel:
    return EffectiveModel(
        delta_k=p.delta_k,
        kappa=kappa_from_physical(p),
        length=p.length,
        alpha=alpha_from_physical(p),
    )


def density_from_temperature(t_c: float, a: float = VAPOR_A, b: float = VAPOR_B,
                             abundance: float = RB85_ABUNDANCE) -> float:
    """85Rb number density in cm^-3 above a liquid Rb reservoir at ``t_c`` (deg C)."""
    if not 0 < t_c < 200:
        raise ConfigError(f"temperature {t_c} C outside (0, 200) C")
    t_k = t_c + 273.15
    pressure = 10 ** (ATM_TO_TORR_LOG + a - b / t_k) * torr
    return abundance * pressure / (Boltzmann * t_k) * 1e-6


def temperature_from_density(n: float, a: float = VAPOR_A, b: float = VAPOR_B,
                             abundance: float = RB85_ABUNDANCE) -> float:
    lo, hi = 1e-6, 200 - 1e-6
    f = lambda t: math.log(density_from_temperature(t, a, b, abundance)) - math.log(n)
    if not n > 0 or f(lo) > 0 or f(hi) < 0:
        raise ConfigError(f"density {n:g} cm^-3 outside the tabulated temperature range")
    return scipy.optimize.brentq(f, lo, hi, xtol=1e-12, rtol=1e-14)
