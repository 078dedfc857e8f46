"""Photodetector inefficiency as a passive beamsplitter on each mode."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .lossy import MomentState, VarianceReport, variance_diff_photon


@dataclass(frozen=True)
class DetectorPair:
    """Quantum efficiencies of the probe and Stokes photodiodes.

    ``dark_variance`` is an additive photon-number variance floor for the
    difference signal (photons^2); it is zero for an ideal passive detector.
    """

    eta_p: float = 1.0
    eta_s: float = 1.0
    dark_variance: float = 0.0

    def __post_init__(self):
        for name in ("eta_p", "eta_s"):
            eta = getattr(self, name)
            if not 0 < eta <= 1:
                raise ValueError(f"{name} must lie in (0, 1], got {eta!r}")
        if self.dark_variance < 0:
            raise ValueError("dark_variance must be non-negative")


def apply_detectors(moments: MomentState, det: DetectorPair) -> MomentState:
    """Mix each mode with vacuum on a beamsplitter of transmissivity eta.

    ``a_p -> sqrt(eta_p) a_p + sqrt(1 - eta_p) e_p`` and likewise for the
    Stokes mode, where ``e`` are fresh vacua.
    """
    tp, ts = math.sqrt(det.eta_p), math.sqrt(det.eta_s)
    scale = np.diag([tp, ts, tp, ts]).astype(complex)
    # <e e^dagger> = 1 lands on <v1 v1^dagger> (probe) and <v2^dagger v2> (Stokes)
    vacuum = np.diag([1.0 - det.eta_p, 0.0, 0.0, 1.0 - det.eta_s]).astype(complex)
    cov = scale @ moments.cov @ scale + vacuum
    return moments.extended(moments.mean * np.array([tp, ts]), cov, scale, vacuum)


def detected_squeezing(moments: MomentState, det: DetectorPair, n_p0: float) -> VarianceReport:
    """Shot-noise-normalised ``Var(n_p - n_s)`` as seen by the photodiodes."""
    return variance_diff_photon(apply_detectors(moments, det), n_p0, det.dark_variance)
