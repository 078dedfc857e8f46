"""Extract the phase mismatch (and optionally g, alpha_ref) from gain curves."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.optimize

from .errors import DataError, NumericError
from .lossy import build_lossy_generator, propagate_mean
from .physical import PhysicalParams, effective_from_physical
from .sweeps import AXES, at_axis

log = logging.getLogger(__name__)

FREE_PARAMETERS = ("delta_k", "g", "alpha_ref")


@dataclass
class GainDataset:
    """Measured probe and Stokes gains along one sweep axis."""

    axis: str
    param: np.ndarray
    g_p: np.ndarray
    g_s: np.ndarray
    weights: np.ndarray | None = None

    def __post_init__(self):
        if self.axis not in AXES:
            raise DataError(f"unknown axis {self.axis!r}")
        self.param = np.asarray(self.param, dtype=float)
        self.g_p = np.asarray(self.g_p, dtype=float)
        self.g_s = np.asarray(self.g_s, dtype=float)
        n = self.param.size
        if self.g_p.shape != (n,) or self.g_s.shape != (n,):
            raise DataError("param, g_p and g_s must be 1-D of equal length")
        if self.weights is not None:
            self.weights = np.asarray(self.weights, dtype=float)
            if self.weights.shape != (n,) or np.any(self.weights < 0):
                raise DataError("weights must be non-negative, one per row")
        if n < 4:
            raise DataError(f"need at least 4 rows, got {n}")
        if np.any(self.g_p <= 0) or np.any(self.g_s <= 0):
            raise DataError("gains must be positive")

    def __len__(self):
        return self.param.size


@dataclass
class FitResult:
    params: dict[str, float]
    stderr: dict[str, float]
    covariance: np.ndarray
    residual_norm: float
    converged: bool
    identifiable: bool
    message: str
    nfev: int
    residuals: np.ndarray = field(repr=False)


def model_gains(p: PhysicalParams, axis: str, values) -> tuple[np.ndarray, np.ndarray]:
    """Lossy classical gains ``(|A|^2, |C|^2)`` at each axis value."""
    g_p, g_s = [], []
    for x in np.asarray(values, dtype=float):
        model = effective_from_physical(at_axis(p, axis, x))
        tc, _ = propagate_mean(build_lossy_generator(model), model.length)
        g_p.append(abs(tc.a) ** 2)
        g_s.append(abs(tc.c) ** 2)
    return np.array(g_p), np.array(g_s)


def fit_delta_k(data: GainDataset, p: PhysicalParams, free=("delta_k", "g"),
                log_scale: bool = False, max_nfev: int = 2000, cond_limit: float = 1e12
                ) -> FitResult:
    """Weighted least squares of both gain curves over the ``free`` parameters.

    Residuals are ``w (G_model - G_meas)`` for probe and Stokes, on a linear
    or log scale.  The starting point is taken from ``p``; ``g`` must be set
    there even if it is free.  Covariance is ``s^2 (J^T J)^-1`` at the
    optimum, with ``s^2`` the reduced residual sum of squares.
    """
    free = tuple(free)
    bad = [name for name in free if name not in FREE_PARAMETERS]
    if bad or not free:
        raise DataError(f"free parameters must be a non-empty subset of {FREE_PARAMETERS}")
    if len(data) < len(free) + 2:
        raise DataError(f"{len(data)} rows are too few for {len(free)} free parameters")

    x0 = []
    for name in free:
        v = getattr(p, name)
        if v is None:
            raise DataError(f"starting value for {name} is not set")
        x0.append(float(v) if v != 0 else 1.0)
    x0 = np.array(x0)
    w = np.ones(len(data)) if data.weights is None else data.weights
    meas = np.concatenate([data.g_p, data.g_s])
    if log_scale:
        meas = np.log(meas)
    ww = np.concatenate([w, w])

    def unpack(u):
        return p.replace(**{name: float(val) for name, val in zip(free, u * x0)})

    def residuals(u):
        g_p, g_s = model_gains(unpack(u), data.axis, data.param)
        pred = np.concatenate([g_p, g_s])
        if log_scale:
            pred = np.log(np.maximum(pred, 1e-300))
        return ww * (pred - meas)

    # parameters are scaled by their starting values so the damping is isotropic
    res = scipy.optimize.least_squares(
        residuals, np.ones_like(x0), method="lm", max_nfev=max_nfev,
        xtol=1e-12, ftol=1e-12, gtol=1e-12,
    )
    converged = res.status > 0
    if not converged:
        log.warning("fit did not converge: %s", res.message)

    jac = res.jac * (1.0 / x0)
    jtj = jac.T @ jac
    dof = max(meas.size - len(free), 1)
    s2 = float(res.fun @ res.fun) / dof
    cond = np.linalg.cond(jtj) if np.all(np.isfinite(jtj)) else np.inf
    identifiable = bool(cond < cond_limit)
    if identifiable:
        cov = np.linalg.inv(jtj) * s2
    else:
        cov = np.full((len(free), len(free)), np.nan)
        log.warning("curvature matrix is singular (cond=%.3g); parameters not identifiable", cond)

    values = res.x * x0
    return FitResult(
        params={name: float(v) for name, v in zip(free, values)},
        stderr={name: float(np.sqrt(cov[i, i])) for i, name in enumerate(free)},
        covariance=cov,
        residual_norm=float(np.linalg.norm(res.fun)),
        converged=converged,
        identifiable=identifiable,
        message=str(res.message),
        nfev=int(res.nfev),
        residuals=res.fun,
    )


def synthetic_dataset(p: PhysicalParams, axis: str, values, noise: float = 0.0,
                      seed: int | None = None) -> GainDataset:
    """Model gains with optional multiplicative Gaussian noise of relative size ``noise``."""
    g_p, g_s = model_gains(p, axis, values)
    if noise:
        rng = np.random.default_rng(seed)
        g_p = g_p * (1 + noise * rng.standard_normal(g_p.size))
        g_s = g_s * (1 + noise * rng.standard_normal(g_s.size))
    return GainDataset(axis, np.asarray(values, dtype=float), g_p, g_s)


def ensure_converged(result: FitResult) -> FitResult:
    if not result.converged:
        raise NumericError(f"fit did not converge: {result.message}")
    return result
