"""Parameter sweeps through the full propagation and detection pipeline."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields

import numpy as np
import scipy.optimize

from .apt_core import EP_TOLERANCE, EffectiveModel, Regime, gains, spectrum, to_db, transfer_matrix
from .detection import DetectorPair, detected_squeezing
from .errors import AptError, ConfigError, NumericError
from .lossy import build_lossy_generator, lossy_spectrum, propagate_moments, variance_diff_photon
from .physical import PhysicalParams, effective_from_physical

log = logging.getLogger(__name__)

AXES = {"density": "n_density", "rabi": "omega_ghz"}
AXIS_UNITS = {"density": "cm^-3", "rabi": "GHz"}
DEFAULT_SEED_PHOTONS = 1e6


@dataclass(frozen=True)
class SweepRecord:
    param_value: float
    beta: float
    regime: str
    lambda_re: float
    lambda_im: float
    g_p: float
    g_s: float
    g_p_norm: float
    g_s_norm: float
    s_ideal: float
    s_ideal_db: float
    s_lossy: float
    s_lossy_db: float
    s_detected: float
    s_detected_db: float
    kappa: float = math.nan
    alpha: float = math.nan
    error: str | None = None

    @classmethod
    def failed(cls, param_value: float, message: str) -> "SweepRecord":
        nan = math.nan
        values = {f.name: nan for f in fields(cls)}
        values.update(param_value=param_value, regime="", error=message)
        return cls(**values)


def _axis_key(axis: str) -> str:
    try:
        return AXES[axis]
    except KeyError:
        raise ConfigError(f"unknown sweep axis {axis!r}; expected one of {sorted(AXES)}") from None


def evaluate_model(model: EffectiveModel, det: DetectorPair | None = None,
                   n_p0: float = DEFAULT_SEED_PHOTONS, param_value: float = math.nan,
                   ep_tol: float = EP_TOLERANCE) -> SweepRecord:
    """Run one model through the ideal, lossy and detected pipelines."""
    det = det or DetectorPair()
    ideal = model.lossless()
    spec = spectrum(ideal, ep_tol)
    tc0 = transfer_matrix(ideal)
    s_ideal = 1.0 / (abs(tc0.a) ** 2 + abs(tc0.c) ** 2)

    moments = propagate_moments(build_lossy_generator(model), model.length)
    gr = gains(moments.transfer_coefficients())
    lossy = variance_diff_photon(moments, n_p0)
    detected = detected_squeezing(moments, det, n_p0)
    lam = lossy_spectrum(model)[0]
    return SweepRecord(
        param_value=param_value,
        beta=spec.beta,
        regime=spec.regime.value,
        lambda_re=lam.real,
        lambda_im=lam.imag,
        g_p=gr.g_p,
        g_s=gr.g_s,
        g_p_norm=gr.g_p_norm,
        g_s_norm=gr.g_s_norm,
        s_ideal=s_ideal,
        s_ideal_db=to_db(s_ideal),
        s_lossy=lossy.squeezing_S,
        s_lossy_db=lossy.squeezing_dB,
        s_detected=detected.squeezing_S,
        s_detected_db=detected.squeezing_dB,
        kappa=complex(model.kappa).real,
        alpha=complex(model.alpha).real,
    )


def at_axis(p: PhysicalParams, axis: str, value: float) -> PhysicalParams:
    return p.replace(**{_axis_key(axis): float(value)})


def _check_grid(grid):
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2:
        raise ConfigError("sweep grid needs at least two points")
    if np.any(np.diff(grid) <= 0):
        raise ConfigError("sweep grid must be strictly increasing")
    return grid


def sweep(p: PhysicalParams, axis: str, grid, det: DetectorPair | None = None,
          n_p0: float = DEFAULT_SEED_PHOTONS, workers: int | None = None,
          ep_tol: float = EP_TOLERANCE) -> list[SweepRecord]:
    """One record per grid point; failing points are recorded, not raised."""
    _axis_key(axis)
    grid = _check_grid(grid)

    def point(item):
        i, x = item
        try:
            model = effective_from_physical(at_axis(p, axis, x))
            return evaluate_model(model, det, n_p0, float(x), ep_tol)
        except (AptError, ValueError, ArithmeticError) as exc:
            log.warning("sweep point %d (%s=%g) failed: %s", i, axis, x, exc)
            return SweepRecord.failed(float(x), f"point {i}: {exc}")

    items = list(enumerate(grid))
    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(point, items))
    return [point(item) for item in items]


def beta_at(p: PhysicalParams, axis: str, value: float) -> float:
    return effective_from_physical(at_axis(p, axis, value)).beta()


def locate_ep(p: PhysicalParams, axis: str, bracket, rtol: float = 1e-8) -> float:
    """Axis value where beta = 1, by Brent's bracketing method."""
    lo, hi = (float(x) for x in bracket)
    f = lambda x: beta_at(p, axis, x) - 1.0
    f_lo, f_hi = f(lo), f(hi)
    if f_lo == 0:
        return lo
    if f_hi == 0:
        return hi
    if not (math.isfinite(f_lo) and math.isfinite(f_hi)) or f_lo * f_hi > 0:
        raise NumericError(
            f"beta - 1 does not change sign on [{lo:g}, {hi:g}] "
            f"(beta = {f_lo + 1:.6g}, {f_hi + 1:.6g})"
        )
    return scipy.optimize.brentq(f, lo, hi, xtol=abs(hi - lo) * 1e-15, rtol=rtol)


@dataclass(frozen=True)
class Optimum:
    param_value: float
    s_detected: float
    s_detected_db: float
    bracketed: bool
    grid_index: int


def optimal_squeezing(p: PhysicalParams, axis: str, grid, det: DetectorPair | None = None,
                      n_p0: float = DEFAULT_SEED_PHOTONS, xtol: float = 1e-4,
                      records: list[SweepRecord] | None = None) -> Optimum:
    """Grid argmin of the detected squeezing refined between its neighbours.

    ``xtol`` is relative to the grid span.  A minimum on the grid boundary is
    returned unrefined with ``bracketed=False``.
    """
    grid = _check_grid(grid)
    if records is None:
        records = sweep(p, axis, grid, det, n_p0)
    s = np.array([r.s_detected for r in records])
    if np.all(np.isnan(s)):
        raise NumericError("no sweep point evaluated successfully")
    i = int(np.nanargmin(s))
    if i == 0 or i == len(grid) - 1:
        log.warning("squeezing minimum at grid boundary (%s=%g)", axis, grid[i])
        return Optimum(float(grid[i]), float(s[i]), to_db(s[i]), False, i)

    def objective(x):
        model = effective_from_physical(at_axis(p, axis, x))
        return evaluate_model(model, det, n_p0).s_detected

    span = grid[-1] - grid[0]
    res = scipy.optimize.minimize_scalar(
        objective, bounds=(grid[i - 1], grid[i + 1]), method="bounded",
        options={"xatol": xtol * span},
    )
    x, fx = float(res.x), float(res.fun)
    if fx > s[i]:
        x, fx = float(grid[i]), float(s[i])
    return Optimum(x, fx, to_db(fx), True, i)
