"""Gain-curve fits for the phase mismatch and coupling."""

import math

import numpy as np
import pytest

from aptfwm.errors import DataError, NumericError
from aptfwm.fitting import GainDataset, ensure_converged, fit_delta_k, model_gains, synthetic_dataset
from aptfwm.physical import PhysicalParams, calibrate_coupling, kappa_from_physical
from aptfwm.sweeps import locate_ep

G = 268.6761824725624
TRUTH = PhysicalParams(g=G, alpha_ref=10.0, n_density=7e12)
GRID = np.linspace(5e12, 9e12, 20)


@pytest.fixture(scope="module")
def clean():
    return synthetic_dataset(TRUTH, "density", GRID)


def perturbed_start(dk=190.0, n_ep=6.2e12):
    p = TRUTH.replace(delta_k=dk)
    return p.replace(g=calibrate_coupling(p, n_ep))


@pytest.mark.parametrize("log_scale", [False, True])
def test_noiseless_recovery(clean, log_scale):
    res = fit_delta_k(clean, perturbed_start(), ("delta_k", "g"), log_scale=log_scale)
    assert res.converged and res.identifiable
    assert res.params["delta_k"] == pytest.approx(210.0, rel=1e-6)
    assert res.params["g"] == pytest.approx(G, rel=1e-6)
    assert res.residual_norm < 1e-6


def test_self_consistency_with_three_parameters(clean):
    start = perturbed_start(200.0, 5.8e12).replace(alpha_ref=8.0)
    res = fit_delta_k(clean, start, ("delta_k", "g", "alpha_ref"))
    for name, truth in (("delta_k", 210.0), ("g", G), ("alpha_ref", 10.0)):
        assert res.params[name] == pytest.approx(truth, rel=1e-6)


def test_g_only_fit_matches_locate_ep():
    ds = synthetic_dataset(TRUTH, "density", GRID, noise=0.03, seed=7)
    res = fit_delta_k(ds, perturbed_start(210.0, 6.0e12), ("g",))
    fitted = TRUTH.replace(g=res.params["g"])
    # kappa(N*) = dk / 2 inverted by hand versus the root finder
    n_star = 5.5e12 * G / res.params["g"]
    assert locate_ep(fitted, "density", (GRID[0], GRID[-1])) == pytest.approx(n_star, rel=1e-8)
    assert n_star == pytest.approx(5.5e12, rel=0.02)


def test_fitted_coupling_doubles_at_twice_the_ep_density(clean):
    res = fit_delta_k(clean, perturbed_start(210.0, 6.0e12), ("g",))
    fitted = TRUTH.replace(g=res.params["g"])
    n_star = locate_ep(fitted, "density", (GRID[0], GRID[-1]))
    assert kappa_from_physical(fitted.replace(n_density=n_star)) == pytest.approx(105.0, rel=1e-8)
    assert kappa_from_physical(fitted.replace(n_density=2 * n_star)) == pytest.approx(210.0, rel=1e-8)


def test_noisy_fit_reports_covariance():
    ds = synthetic_dataset(TRUTH, "density", GRID, noise=0.03, seed=3)
    res = fit_delta_k(ds, perturbed_start(), log_scale=True)
    assert res.covariance.shape == (2, 2)
    assert np.allclose(res.covariance, res.covariance.T)
    assert all(res.stderr[k] > 0 for k in res.params)
    # the error bar is honest: truth lies within a few standard errors
    assert abs(res.params["delta_k"] - 210) < 4 * res.stderr["delta_k"]


def test_weights_are_applied(clean):
    w = np.ones(len(clean))
    w[::2] = 0.0
    ds = GainDataset("density", clean.param, clean.g_p * (1 + 0.2 * (np.arange(20) % 2 == 0)),
                     clean.g_s, weights=w)
    res = fit_delta_k(ds, perturbed_start(), ("delta_k", "g"))
    # the corrupted rows carry zero weight
    assert res.params["delta_k"] == pytest.approx(210.0, rel=1e-6)


def test_zero_weights_are_unidentifiable(clean):
    ds = GainDataset("density", clean.param, clean.g_p, clean.g_s, weights=np.zeros(len(clean)))
    res = fit_delta_k(ds, perturbed_start(), ("delta_k", "g"))
    assert not res.identifiable
    assert all(math.isnan(v) for v in res.stderr.values())


def test_iteration_cap_flags_non_convergence(clean):
    res = fit_delta_k(clean, perturbed_start(150.0, 8e12), max_nfev=2)
    assert not res.converged
    with pytest.raises(NumericError):
        ensure_converged(res)


def test_model_gains_are_positive():
    g_p, g_s = model_gains(TRUTH, "density", GRID)
    assert np.all(g_p > 1) and np.all(g_s > 0)
    # loss sits on the probe only, so the Stokes gain overtakes it at high density
    assert g_p[0] > g_s[0] and g_s[-1] > g_p[-1]


class TestValidation:
    def test_too_few_rows(self):
        with pytest.raises(DataError):
            GainDataset("density", [1, 2, 3], [1, 1, 1], [1, 1, 1])

    def test_rows_versus_parameters(self, clean):
        ds = GainDataset("density", clean.param[:4], clean.g_p[:4], clean.g_s[:4])
        with pytest.raises(DataError):
            fit_delta_k(ds, TRUTH, ("delta_k", "g", "alpha_ref"))

    def test_unknown_parameter(self, clean):
        with pytest.raises(DataError):
            fit_delta_k(clean, TRUTH, ("theta",))

    def test_non_positive_gains(self):
        with pytest.raises(DataError):
            GainDataset("density", [1, 2, 3, 4], [1, 0, 1, 1], [1, 1, 1, 1])

    def test_unset_start(self, clean):
        with pytest.raises(DataError):
            fit_delta_k(clean, TRUTH.replace(g=None), ("g",))
