"""Lossless anti-PT four-wave-mixing algebra.

The probe annihilation operator and the Stokes creation operator are
collected into ``v = (a_p, a_s^dagger)`` which obeys

    i dv/dz = H v,    H = [[-dk/2, -kappa], [kappa, dk/2]].

Everything here is closed form.  ``H @ H = (dk^2/4 - kappa^2) * I`` so the
propagator is

    exp(-i H L) = cos(lam L) I - i H L sinc(lam L),   lam^2 = dk^2/4 - kappa^2,

whose first column is the pair (A, C).  This form is algebraically the same
as writing ``A = cos(lam L) + i sin(lam L)/sqrt(1 - beta^2)`` but also holds
for negative or vanishing phase mismatch.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

#: |1 - beta^2| below which the second-order series replaces the closed form.
EP_WINDOW = 1e-6
#: default |beta - 1| tolerance for classifying a point as the exceptional point.
EP_TOLERANCE = 1e-9


class Regime(str, enum.Enum):
    SYMMETRY_BROKEN = "SymmetryBroken"
    EXCEPTIONAL_POINT = "ExceptionalPoint"
    SYMMETRIC_PHASE = "SymmetricPhase"


@dataclass(frozen=True)
class EffectiveModel:
    """Spatial rates that fully determine propagation through the cell.

    Attributes
    ----------
    delta_k : float
        Phase mismatch ``2k - (k_p + k_s) cos(theta)`` in rad/m (signed).
    kappa : complex
        Parametric coupling in rad/m; real at two-photon resonance.
    alpha : complex
        Probe amplitude loss rate in rad/m, ``Re(alpha) >= 0``.
    length : float
        Cell length in m.
    """

    delta_k: float
    kappa: complex
    length: float
    alpha: complex = 0.0

    def __post_init__(self):
        if not self.length > 0:
            raise ValueError(f"length must be positive, got {self.length!r}")
        if complex(self.alpha).real < 0:
            raise ValueError(f"Re(alpha) must be non-negative, got {self.alpha!r}")
        if not math.isfinite(self.delta_k):
            raise ValueError("delta_k must be finite")

    @property
    def kappa_is_real(self) -> bool:
        return complex(self.kappa).imag == 0.0

    @property
    def is_lossless(self) -> bool:
        return complex(self.alpha) == 0.0

    def beta(self) -> float:
        """|2 kappa / dk|; ``inf`` for zero mismatch with nonzero coupling."""
        k = abs(complex(self.kappa))
        if self.delta_k == 0:
            return math.inf if k > 0 else math.nan
        return abs(2.0 * k / self.delta_k)

    def lossless(self) -> "EffectiveModel":
        return EffectiveModel(self.delta_k, self.kappa, self.length, 0.0)


@dataclass(frozen=True)
class Spectrum:
    lambda_plus: complex
    lambda_minus: complex
    beta: float
    regime: Regime
    degenerate: bool = False


@dataclass(frozen=True)
class TransferCoefficients:
    """Probe self-coefficient ``a`` and cross-coefficient ``c``."""

    a: complex
    c: complex

    @property
    def bogoliubov_defect(self) -> float:
        """|A|^2 - |C|^2 - 1, zero for a lossless transform."""
        return abs(self.a) ** 2 - abs(self.c) ** 2 - 1.0

    def matrix(self) -> np.ndarray:
        """Full propagator ``[[A, C*], [C, A*]]`` (lossless, real kappa)."""
        return np.array([[self.a, np.conj(self.c)], [self.c, np.conj(self.a)]])


@dataclass(frozen=True)
class GainReport:
    g_p: float
    g_s: float
    g_p_norm: float
    g_s_norm: float


def _require_lossless(model: EffectiveModel):
    if not model.is_lossless:
        raise ValueError(
            "model has nonzero alpha; use lossy.build_lossy_generator for lossy propagation"
        )


def build_hamiltonian(model: EffectiveModel) -> np.ndarray:
    _require_lossless(model)
    half = model.delta_k / 2.0
    k = complex(model.kappa)
    return np.array([[-half, -k], [k, half]], dtype=complex)


def parity_time_anticommutator(h: np.ndarray) -> np.ndarray:
    """Anticommutator of a 2x2 matrix with the joint parity-time operation.

    PT acts as ``psi -> X conj(psi)`` with X the basis swap, so as a map on
    matrices ``{H, PT} psi = (H X + X conj(H)) conj(psi)``; the returned
    matrix is ``H X + X conj(H)``.
    """
    swap = np.array([[0, 1], [1, 0]], dtype=complex)
    return h @ swap + swap @ np.conj(h)


def spectrum(model: EffectiveModel, ep_tol: float = EP_TOLERANCE) -> Spectrum:
    _require_lossless(model)
    dk = model.delta_k
    k = complex(model.kappa)
    if dk == 0:
        if k == 0:
            return Spectrum(0j, 0j, math.nan, Regime.EXCEPTIONAL_POINT, degenerate=True)
        lam = 1j * abs(k)
        return Spectrum(lam, -lam, math.inf, Regime.SYMMETRIC_PHASE)
    beta = model.beta()
    if abs(beta - 1.0) <= ep_tol:
        return Spectrum(0j, 0j, beta, Regime.EXCEPTIONAL_POINT)
    half, mag = abs(dk) / 2.0, abs(k)
    # factored so a tiny dk cannot overflow beta into 0 * inf
    lam = math.copysign(1.0, dk) * np.sqrt(complex((half - mag) * (half + mag)))
    # clear the rounding residue so the two phases are purely real / imaginary
    lam = complex(lam.real, 0.0) if beta < 1 else complex(0.0, lam.imag)
    regime = Regime.SYMMETRY_BROKEN if beta < 1 else Regime.SYMMETRIC_PHASE
    return Spectrum(lam, -lam, beta, regime)


def bogoliubov_coefficients(delta_k, kappa, length, ep_window: float = EP_WINDOW):
    """Vectorised (A, C) for real coupling; arguments broadcast as arrays."""
    dk, k, ell = np.broadcast_arrays(
        np.asarray(delta_k, dtype=float),
        np.asarray(kappa, dtype=float),
        np.asarray(length, dtype=float),
    )
    half = dk / 2.0
    lam2 = half * half - k * k
    s = lam2 * ell * ell

    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        one_minus_b2 = np.where(dk != 0, lam2 / (half * half), -np.inf)
    near = (np.abs(one_minus_b2) <= ep_window) & (np.abs(s) < 1e-3)
    near |= s == 0

    x = np.sqrt(s.astype(complex))
    with np.errstate(divide="ignore", invalid="ignore"):
        cos_x = np.cos(x)
        sinc_x = np.where(x == 0, 1.0, np.sin(x) / np.where(x == 0, 1.0, x))
    # second-order expansion of cos and sinc in s, which is linear in 1 - beta^2
    cos_x = np.where(near, 1.0 - s / 2.0 + s * s / 24.0, cos_x)
    sinc_x = np.where(near, 1.0 - s / 6.0 + s * s / 120.0, sinc_x)
    # the products are real for real coupling, whichever branch x sits on
    cos_x = np.real(cos_x)
    sinc_x = np.real(sinc_x)

    a = cos_x + 1j * half * ell * sinc_x
    c = -1j * k * ell * sinc_x
    return a, c


def transfer_matrix(model: EffectiveModel, ep_window: float = EP_WINDOW) -> TransferCoefficients:
    _require_lossless(model)
    if not model.kappa_is_real:
        # The closed form only gives [[A, C*], [C, A*]] for real kappa.
        prop = scipy.linalg.expm(-1j * build_hamiltonian(model) * model.length)
        return TransferCoefficients(complex(prop[0, 0]), complex(prop[1, 0]))
    a, c = bogoliubov_coefficients(
        model.delta_k, complex(model.kappa).real, model.length, ep_window
    )
    return TransferCoefficients(complex(a), complex(c))


def gains(tc: TransferCoefficients) -> GainReport:
    g_p = abs(tc.a) ** 2
    g_s = abs(tc.c) ** 2
    total = g_p + g_s
    if total == 0:
        raise ValueError("both transfer coefficients vanish")
    return GainReport(g_p, g_s, g_p / total, g_s / total)


def ideal_squeezing(tc: TransferCoefficients) -> tuple[float, float]:
    """Shot-noise-normalised relative-intensity noise ``(S, S_dB)``."""
    s = 1.0 / (abs(tc.a) ** 2 + abs(tc.c) ** 2)
    return s, to_db(s)


def to_db(s: float) -> float:
    return 10.0 * math.log10(s) if s > 0 else -math.inf
