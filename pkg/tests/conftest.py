"""Shared fixtures: reduced record lengths keep the suite fast."""

from __future__ import annotations

from pathlib import Path

import pytest

from memristor_audit.models import BranchSpec, Capacitor, PolynomialMemristorModel, SimConfig, ThermalResistor

SPECS_DIR = Path(__file__).resolve().parent.parent / "specs"


@pytest.fixture
def small_config() -> SimConfig:
    return SimConfig(n_samples=2**16, seed=7)


@pytest.fixture
def tiny_config() -> SimConfig:
    return SimConfig(n_samples=2**13, seed=3)


@pytest.fixture
def hot_resistor() -> BranchSpec:
    return BranchSpec.resistor(R=1.0, T=2.0)


@pytest.fixture
def bath_resistor() -> BranchSpec:
    return BranchSpec.resistor(R=1.0, T=1.0)


@pytest.fixture
def cubic_model() -> PolynomialMemristorModel:
    return PolynomialMemristorModel(a=1.0, b=1.0, c=1.0)


@pytest.fixture
def linear_model() -> PolynomialMemristorModel:
    return PolynomialMemristorModel(a=1.0)


@pytest.fixture
def shunt() -> ThermalResistor:
    return ThermalResistor(R=1.0, T=1.0)


@pytest.fixture
def big_cap() -> Capacitor:
    # corner 1/(2 pi 50) ~ 3.2e-3, below f_L/10 = 5e-3
    return Capacitor(C=50.0)


@pytest.fixture
def specs_dir() -> Path:
    return SPECS_DIR
