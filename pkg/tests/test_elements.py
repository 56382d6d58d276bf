"""Tests for the resistor, memristor and capacitor models."""

from __future__ import annotations

import math

import numpy as np
import pytest

from memristor_audit.errors import ArgumentError, ContractViolationError, InadmissibleModelError
from memristor_audit.models import Capacitor, ElementState, PolynomialMemristorModel, ThermalResistor
from memristor_audit.sim.elements import (
    advance_charge,
    check_nonnegativity,
    flux,
    memristance,
    memristance_floor,
    memristor_voltage,
    noise_current_psd,
    noise_voltage_psd,
    require_admissible,
    resistor_terminal_voltage,
    small_signal_resistance,
)


def _model(a, b=0.0, c=0.0):
    return PolynomialMemristorModel(a=a, b=b, c=c)


def _admissible_model(rng):
    a = rng.uniform(0.5, 5.0)
    c = rng.uniform(0.0, 2.0)
    b_max = 0.9 * math.sqrt(3 * a * c)
    return _model(a, rng.uniform(-b_max, b_max), c)


class TestMemristance:
    def test_is_derivative_of_flux(self):
        rng = np.random.default_rng(1)
        h = 1e-4
        for _ in range(1000):
            model = _admissible_model(rng)
            q = rng.uniform(-100, 100)
            numeric = (flux(model, q + h) - flux(model, q - h)) / (2 * h)
            m = memristance(model, q)
            assert numeric == pytest.approx(m, rel=0, abs=1e-6 * (1 + abs(m))), (model, q)

    def test_vectorized_evaluation(self, cubic_model):
        q = np.linspace(-2, 2, 401)
        np.testing.assert_allclose(flux(cubic_model, q), q + q**2 + q**3)
        np.testing.assert_allclose(memristance(cubic_model, q), 1 + 2 * q + 3 * q**2)

    def test_voltage_reads_state_without_changing_it(self, cubic_model):
        state = ElementState(q=0.5)
        assert memristor_voltage(cubic_model, state, 2.0) == pytest.approx((1 + 1 + 0.75) * 2.0)
        assert state.q == 0.5

    def test_trapezoidal_charge_update(self):
        state = advance_charge(ElementState(q=1.0), 1.0, 3.0, 0.5)
        assert state.q == pytest.approx(2.0)
        assert state.t == pytest.approx(0.5)

    def test_linear_voltage_matches_quiet_resistor(self):
        current = np.random.default_rng(5).normal(size=4096)
        state = ElementState(q=0.7)
        mem = memristor_voltage(_model(2.5), state, current)
        res = resistor_terminal_voltage(ThermalResistor(R=2.5, T=1.0), current)
        np.testing.assert_array_equal(mem, res)

    def test_charge_returns_after_a_sine_period(self):
        amplitude, period, steps = 3.0, 20.0, 1000
        dt = period / steps
        current = amplitude * np.sin(2 * np.pi * np.arange(steps + 1) * dt / period)
        state = ElementState()
        for i_prev, i_now in zip(current[:-1], current[1:]):
            state = advance_charge(state, float(i_prev), float(i_now), dt)
        assert abs(state.q) < 1e-9 * amplitude * period
        assert state.t == pytest.approx(period)

    @pytest.mark.parametrize("dt", [0.0, -1.0])
    def test_non_positive_step_rejected(self, dt):
        with pytest.raises(ArgumentError):
            advance_charge(ElementState(), 0.0, 1.0, dt)

    def test_floor(self):
        assert memristance_floor(_model(2.0)) == pytest.approx(2e-9)
        assert memristance_floor(_model(0.0, 0.0, 1.0)) == pytest.approx(1e-9)

    def test_small_signal_resistance(self, cubic_model):
        assert small_signal_resistance(cubic_model) == 1.0
        assert small_signal_resistance(cubic_model, q=1.0) == 6.0
        assert small_signal_resistance(_model(0.0)) == pytest.approx(1e-9)


class TestAdmissibility:
    @pytest.mark.parametrize(
        "coeffs",
        [(1, 1, 1), (1, 0, 0), (0, 0, 0), (3, 3, 1), (2, 0, 5)],
    )
    def test_admissible_models(self, coeffs):
        assert check_nonnegativity(_model(*coeffs)).admissible

    def test_boundary_is_flagged(self):
        # b^2 = 3ac
        report = check_nonnegativity(_model(3, 3, 1))
        assert report.admissible and report.boundary
        assert not check_nonnegativity(_model(1, 1, 1)).boundary

    def test_discriminant_witness(self):
        report = check_nonnegativity(_model(1, 2, 1))
        assert not report.admissible
        assert report.witness_q == pytest.approx(-2 / 3)
        assert memristance(_model(1, 2, 1), report.witness_q) < 0

    @pytest.mark.parametrize(
        "coeffs",
        [(-1, 0, 0), (1, 1, 0), (1, -1, 0), (1, 0, -1), (5, 2, -0.1)],
    )
    def test_witness_is_negative(self, coeffs):
        model = _model(*coeffs)
        report = check_nonnegativity(model)
        assert not report.admissible
        assert memristance(model, report.witness_q) < 0

    def test_agrees_with_brute_force_scan(self):
        rng = np.random.default_rng(2)
        dense = np.linspace(-10, 10, 200_001)
        wide = np.linspace(-1e6, 1e6, 200_001)
        for _ in range(1000):
            a, b, c = (float(v) for v in rng.integers(-5, 6, size=3))
            model = _model(a, b, c)
            report = check_nonnegativity(model)
            scan_min = min(memristance(model, dense).min(), memristance(model, wide).min())
            if report.admissible:
                assert scan_min >= -1e-9, (a, b, c)
            else:
                assert scan_min < 0, (a, b, c)
                assert memristance(model, report.witness_q) < 0, (a, b, c)

    def test_agrees_with_dense_scan_on_real_coefficients(self):
        # 1000 triples x 10^4 charges: 5000 uniform in [-10, 10], 5000 log-spaced out to 1e6.
        rng = np.random.default_rng(8)
        tail = np.geomspace(10.0, 1e6, 2500)
        grid = np.concatenate([np.linspace(-10, 10, 5000), tail, -tail])
        for _ in range(1000):
            a, b, c = rng.uniform(-1.0, 5.0), rng.uniform(-5.0, 5.0), rng.uniform(-1.0, 5.0)
            model = _model(a, b, c)
            values = memristance(model, grid)
            # rounding bound of a + 2bq + 3cq^2 at each charge
            slack = 1e-12 * (abs(a) + 2 * abs(b) * np.abs(grid) + 3 * abs(c) * grid**2)
            scan_negative = bool(np.any(values < -slack))
            assert scan_negative != check_nonnegativity(model).admissible, (a, b, c)

    def test_require_admissible_raises_with_witness(self):
        with pytest.raises(InadmissibleModelError) as info:
            require_admissible(_model(1, 2, 1))
        assert info.value.witness_q == pytest.approx(-2 / 3)
        assert info.value.details["witness_q"] == pytest.approx(-2 / 3)
        assert info.value.exit_code == 3


class TestResistorAndCapacitor:
    def test_thevenin_and_norton_levels(self):
        r = ThermalResistor(R=2.0, T=3.0)
        assert noise_voltage_psd(r, 1.0) == pytest.approx(24.0)
        assert noise_current_psd(r, 1.0) == pytest.approx(6.0)

    def test_noise_free_variant_is_silent(self):
        r = ThermalResistor(R=2.0, T=3.0, noisy=False)
        assert noise_voltage_psd(r, 1.0) == 0.0
        assert noise_current_psd(r, 1.0) == 0.0

    def test_terminal_voltage(self):
        r = ThermalResistor(R=2.0, T=1.0)
        assert resistor_terminal_voltage(r, 0.5, 0.25) == pytest.approx(1.25)

    def test_noise_free_resistor_cannot_carry_noise(self):
        r = ThermalResistor(R=2.0, T=1.0, noisy=False)
        assert resistor_terminal_voltage(r, 0.5) == pytest.approx(1.0)
        with pytest.raises(ContractViolationError):
            resistor_terminal_voltage(r, 0.5, 0.1)

    def test_capacitor_cutoff(self):
        assert Capacitor(C=50.0).cutoff_frequency(1.0) == pytest.approx(1 / (100 * math.pi))

    def test_resistance_must_be_positive(self):
        with pytest.raises(ValueError):
            ThermalResistor(R=0.0, T=1.0)
