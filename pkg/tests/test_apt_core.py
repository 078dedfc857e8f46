"""Lossless anti-PT core: spectrum, closed-form propagator, gains."""

import math

import numpy as np
import pytest
import scipy.integrate
import scipy.linalg

from aptfwm.apt_core import (
    EffectiveModel,
    Regime,
    bogoliubov_coefficients,
    build_hamiltonian,
    gains,
    ideal_squeezing,
    parity_time_anticommutator,
    spectrum,
    to_db,
    transfer_matrix,
)


def expm_oracle(model):
    """Propagator of i dv/dz = H v by a generic matrix exponential."""
    h = np.array([[-model.delta_k / 2, -model.kappa], [model.kappa, model.delta_k / 2]], dtype=complex)
    return scipy.linalg.expm(-1j * h * model.length)


def ode_oracle(model):
    h = np.array([[-model.delta_k / 2, -model.kappa], [model.kappa, model.delta_k / 2]], dtype=complex)
    sol = scipy.integrate.solve_ivp(lambda z, v: -1j * h @ v, (0, model.length), np.array([1, 0], dtype=complex),
                                    rtol=1e-12, atol=1e-14, method="DOP853")
    return sol.y[:, -1]


class TestEffectiveModel:
    def test_rejects_nonpositive_length(self):
        with pytest.raises(ValueError):
            EffectiveModel(210, 100, 0.0)

    def test_rejects_gain_instead_of_loss(self):
        with pytest.raises(ValueError):
            EffectiveModel(210, 100, 0.019, alpha=-1.0)

    def test_beta(self):
        assert EffectiveModel(210, 105, 0.019).beta() == 1.0
        assert EffectiveModel(-210, 52.5, 0.019).beta() == 0.5
        assert EffectiveModel(0, 1, 0.019).beta() == math.inf
        assert math.isnan(EffectiveModel(0, 0, 0.019).beta())


class TestHamiltonian:
    @pytest.mark.parametrize("dk,kappa", [(210, 105), (210, 30), (-50, 80), (0, 10)])
    def test_anticommutes_with_pt(self, dk, kappa):
        h = build_hamiltonian(EffectiveModel(dk, kappa, 0.019))
        assert np.abs(parity_time_anticommutator(h)).max() == 0.0

    def test_complex_kappa_breaks_anti_pt(self):
        h = build_hamiltonian(EffectiveModel(210, 100 + 5j, 0.019))
        assert np.abs(parity_time_anticommutator(h)).max() > 1.0

    def test_rejects_loss(self):
        with pytest.raises(ValueError):
            build_hamiltonian(EffectiveModel(210, 100, 0.019, alpha=1.0))


class TestSpectrum:
    def test_symmetry_broken_phase_is_real(self):
        s = spectrum(EffectiveModel(210, 52.5, 0.019))
        assert s.regime is Regime.SYMMETRY_BROKEN
        assert s.lambda_plus == pytest.approx(105 * math.sqrt(0.75), rel=1e-15)
        assert s.lambda_plus.imag == 0 and s.lambda_minus == -s.lambda_plus

    def test_symmetric_phase_is_imaginary(self):
        s = spectrum(EffectiveModel(210, 210, 0.019))
        assert s.regime is Regime.SYMMETRIC_PHASE
        assert s.lambda_plus.real == 0
        assert s.lambda_plus.imag == pytest.approx(105 * math.sqrt(3), rel=1e-15)

    def test_exceptional_point(self):
        s = spectrum(EffectiveModel(210, 105, 0.019))
        assert s.regime is Regime.EXCEPTIONAL_POINT
        assert s.lambda_plus == 0 and s.lambda_minus == 0

    def test_ep_tolerance_is_configurable(self):
        m = EffectiveModel(210, 105 * (1 + 1e-7), 0.019)
        assert spectrum(m).regime is Regime.SYMMETRIC_PHASE
        assert spectrum(m, ep_tol=1e-6).regime is Regime.EXCEPTIONAL_POINT

    def test_zero_mismatch(self):
        s = spectrum(EffectiveModel(0, 7, 0.019))
        assert s.regime is Regime.SYMMETRIC_PHASE and s.lambda_plus == 7j
        s = spectrum(EffectiveModel(0, 0, 0.019))
        assert s.degenerate

    def test_matches_matrix_eigenvalues(self, rng):
        for _ in range(50):
            m = EffectiveModel(rng.uniform(-400, 400), rng.uniform(0, 400), 0.019)
            s = spectrum(m)
            ev = np.linalg.eigvals(build_hamiltonian(m))
            for lam in (s.lambda_plus, s.lambda_minus):
                assert np.min(np.abs(ev - lam)) < 1e-9


def test_spectrum_survives_a_vanishing_mismatch():
    s = spectrum(EffectiveModel(1e-310, 1.0, 1.0))
    assert s.regime is Regime.SYMMETRIC_PHASE
    assert s.lambda_plus == pytest.approx(1j, rel=1e-15)


class TestTransfer:
    def test_exceptional_point_values(self):
        # at beta = 1: A = 1 + i dk L / 2, C = -i kappa L, with dk L / 2 = kappa L = 1.995
        tc = transfer_matrix(EffectiveModel(210, 105, 0.019))
        assert tc.a == pytest.approx(1 + 1.995j, abs=1e-15)
        assert tc.c == pytest.approx(-1.995j, abs=1e-15)
        g = gains(tc)
        assert g.g_p == pytest.approx(4.980025, rel=1e-14)
        assert g.g_s == pytest.approx(3.980025, rel=1e-14)
        s, s_db = ideal_squeezing(tc)
        assert s == pytest.approx(1 / 8.96005, rel=1e-14)
        assert round(s_db, 2) == -9.52

    @pytest.mark.parametrize("dk,kappa", [(210, 30), (210, 104.9), (210, 300), (-210, 60), (0, 50), (300, 0)])
    def test_matches_expm_and_ode(self, dk, kappa):
        m = EffectiveModel(dk, kappa, 0.019)
        tc = transfer_matrix(m)
        prop = expm_oracle(m)
        assert tc.a == pytest.approx(prop[0, 0], abs=1e-12)
        assert tc.c == pytest.approx(prop[1, 0], abs=1e-12)
        v = ode_oracle(m)
        assert tc.a == pytest.approx(v[0], abs=1e-9)
        assert tc.c == pytest.approx(v[1], abs=1e-9)

    def test_full_matrix_structure(self):
        m = EffectiveModel(170, 60, 0.05)
        assert np.allclose(transfer_matrix(m).matrix(), expm_oracle(m), atol=1e-13)

    @pytest.mark.parametrize("offset", [-1e-5, -1e-8, 0.0, 1e-8, 1e-5])
    def test_continuous_through_ep_window(self, offset):
        m = EffectiveModel(210, 105 * (1 + offset), 0.019)
        prop = expm_oracle(m)
        tc = transfer_matrix(m)
        assert abs(tc.a - prop[0, 0]) < 1e-12 and abs(tc.c - prop[1, 0]) < 1e-12

    def test_series_branch_matches_trig_branch(self):
        dk = np.full(5, 210.0)
        kappa = 105 * (1 + np.array([-5e-7, -1e-7, 0, 1e-7, 5e-7]))
        a1, c1 = bogoliubov_coefficients(dk, kappa, 0.019)
        a0, c0 = bogoliubov_coefficients(dk, kappa, 0.019, ep_window=0.0)
        assert np.allclose(a1, a0, atol=1e-12) and np.allclose(c1, c0, atol=1e-12)

    def test_vectorised(self, rng):
        dk = rng.uniform(-300, 300, 100)
        kappa = rng.uniform(0, 300, 100)
        a, c = bogoliubov_coefficients(dk, kappa, 0.019)
        for i in range(0, 100, 17):
            tc = transfer_matrix(EffectiveModel(dk[i], kappa[i], 0.019))
            assert a[i] == tc.a and c[i] == tc.c

    def test_bogoliubov_identity(self, rng):
        for _ in range(200):
            m = EffectiveModel(rng.uniform(-500, 500), rng.uniform(0, 400), rng.uniform(1e-3, 0.05))
            tc = transfer_matrix(m)
            assert abs(tc.bogoliubov_defect) <= 1e-12 * (abs(tc.a) ** 2 + 1)

    def test_complex_kappa_falls_back_to_expm(self):
        m = EffectiveModel(210, 90 + 20j, 0.019)
        prop = expm_oracle(m)
        tc = transfer_matrix(m)
        assert tc.a == pytest.approx(prop[0, 0], abs=1e-14)
        assert tc.c == pytest.approx(prop[1, 0], abs=1e-14)

    def test_no_coupling_is_a_phase(self):
        tc = transfer_matrix(EffectiveModel(210, 0, 0.019))
        assert tc.c == 0 and abs(tc.a) == pytest.approx(1.0, abs=1e-15)
        assert tc.a == pytest.approx(np.exp(1j * 105 * 0.019), abs=1e-15)


def test_to_db():
    assert to_db(0.1) == pytest.approx(-10.0)
    assert to_db(0.0) == -math.inf
