"""Lab parameters to effective rates; vapor-pressure density."""

import math

import pytest

from aptfwm.errors import ConfigError, UncalibratedError
from aptfwm.physical import (
    HF_SPLITTING_GHZ,
    PhysicalParams,
    alpha_from_physical,
    calibrate_coupling,
    density_from_temperature,
    effective_from_physical,
    kappa_from_physical,
    temperature_from_density,
)

C_LIGHT = 299_792_458.0
BASE = PhysicalParams(n_density=5e12, g=268.6761824725624, alpha_ref=10.0)


def test_delta2_is_delta1_plus_hyperfine():
    assert BASE.delta2_ghz - BASE.delta1_ghz == pytest.approx(HF_SPLITTING_GHZ, abs=1e-12)
    assert round(BASE.delta2_ghz, 1) == 3.7


def test_zero_density_gives_zero_rates():
    m = effective_from_physical(BASE.replace(n_density=0.0))
    assert m.kappa == 0 and m.alpha == 0


def test_rates_are_linear_in_density():
    a = effective_from_physical(BASE)
    b = effective_from_physical(BASE.replace(n_density=1e13))
    assert b.kappa == pytest.approx(2 * a.kappa, rel=1e-15)
    assert b.alpha == pytest.approx(2 * a.alpha, rel=1e-15)


def test_kappa_formula_by_hand():
    # kappa = g N / (2 c Delta_2) with N in m^-3 and Delta_2 in rad/s
    n_m3 = 5e12 * 1e6
    delta2 = 2 * math.pi * (0.7 + 3.0357) * 1e9
    assert kappa_from_physical(BASE) == pytest.approx(268.6761824725624 * n_m3 / (2 * C_LIGHT * delta2), rel=1e-14)


def test_pump_scaling():
    k0, a0 = kappa_from_physical(BASE), alpha_from_physical(BASE)
    p2 = BASE.replace(omega_ghz=0.84)
    assert kappa_from_physical(p2) == pytest.approx(4 * k0, rel=1e-14)
    assert alpha_from_physical(p2) == pytest.approx(a0 / 4, rel=1e-14)
    p3 = BASE.replace(omega_ghz=0.84, kappa_pump_exponent=1.0, loss_pump_exponent=0.0)
    assert kappa_from_physical(p3) == pytest.approx(2 * k0, rel=1e-14)
    assert alpha_from_physical(p3) == pytest.approx(a0, rel=1e-14)


def test_calibration_places_the_ep():
    g = calibrate_coupling(BASE, 5.5e12)
    p = BASE.replace(g=g, n_density=5.5e12)
    assert kappa_from_physical(p) == pytest.approx(105.0, rel=1e-14)
    assert kappa_from_physical(p.replace(n_density=1.1e13)) == pytest.approx(210.0, rel=1e-14)
    assert g == pytest.approx(268.6761824725624, rel=1e-12)


def test_uncalibrated():
    with pytest.raises(UncalibratedError):
        effective_from_physical(PhysicalParams(n_density=5e12))


def test_density_and_temperature_are_exclusive():
    with pytest.raises(ConfigError):
        PhysicalParams(n_density=5e12, temperature_c=100.0)


def test_density_must_be_set():
    with pytest.raises(ConfigError):
        PhysicalParams(g=1.0).density


@pytest.mark.parametrize("bad", [dict(omega_ghz=0.0), dict(length=0.0), dict(n_density=-1.0), dict(alpha_ref=-1.0)])
def test_invalid_params(bad):
    with pytest.raises(ConfigError):
        PhysicalParams(**bad)


def test_temperature_resolves_density():
    p = PhysicalParams(temperature_c=105.0, g=1.0)
    assert p.density == density_from_temperature(105.0)
    assert p.replace(n_density=3e12).temperature_c is None


class TestVapor:
    def test_by_hand(self):
        t = 373.15
        pressure_pa = 133.322368 * 10 ** (2.881 + 4.857 - 4215 / t)
        n_cm3 = 0.7217 * pressure_pa / (1.380649e-23 * t) / 1e6
        assert density_from_temperature(100.0) == pytest.approx(n_cm3, rel=1e-8)
        assert round(density_from_temperature(100.0) / 1e12, 2) == 5.17

    def test_monotone(self):
        ts = [60, 80, 100, 104, 108.7, 130, 180]
        ns = [density_from_temperature(t) for t in ts]
        assert all(b > a for a, b in zip(ns, ns[1:]))

    def test_endpoint_ratio_against_caption_band(self):
        ratio = density_from_temperature(108.7) / density_from_temperature(100.0)
        assert abs(ratio / (9 / 5) - 1) < 0.25

    @pytest.mark.parametrize("t", [20.0, 100.0, 108.7, 150.0, 199.0])
    def test_round_trip(self, t):
        assert temperature_from_density(density_from_temperature(t)) == pytest.approx(t, abs=1e-6)

    @pytest.mark.parametrize("t", [0.0, -5.0, 200.0, 250.0])
    def test_out_of_range(self, t):
        with pytest.raises(ConfigError):
            density_from_temperature(t)

    def test_coefficients_are_overridable(self):
        assert density_from_temperature(100.0, a=4.9) > density_from_temperature(100.0)
