"""Device models: thermal resistor, polynomial memristor, capacitor.

Functions accept scalars or numpy arrays for ``q`` and currents, so the same
code evaluates single steps and whole curves.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import ArgumentError, ContractViolationError, InadmissibleModelError
from ..models import (
    AdmissibilityReport,
    ElementState,
    PolynomialMemristorModel,
    ThermalResistor,
)

# M(q) floor during circuit solving, relative to the linear coefficient a.
MEMRISTANCE_FLOOR_RATIO = 1e-9

ArrayLike = float | np.ndarray


def memristance(model: PolynomialMemristorModel, q: ArrayLike) -> ArrayLike:
    """M(q) = dPhi/dq = a + 2bq + 3cq^2."""
    return model.a + 2.0 * model.b * q + 3.0 * model.c * q * q


def flux(model: PolynomialMemristorModel, q: ArrayLike) -> ArrayLike:
    """Phi(q) = aq + bq^2 + cq^3."""
    return model.a * q + model.b * q * q + model.c * q * q * q


def check_nonnegativity(model: PolynomialMemristorModel) -> AdmissibilityReport:
    """Closed-form test of M(q) >= 0 for every real q.

    When the model fails, ``witness_q`` is a point where M is strictly negative.
    """
    a, b, c = model.a, model.b, model.c

    if c > 0:
        # Upward parabola; minimum a - b^2/(3c) at q = -b/(3c).
        disc = b * b - 3.0 * a * c
        if disc <= 0:
            return AdmissibilityReport(admissible=True, boundary=disc == 0)
        return AdmissibilityReport(admissible=False, witness_q=-b / (3.0 * c))

    if c == 0 and b == 0:
        if a >= 0:
            return AdmissibilityReport(admissible=True, boundary=a == 0)
        return AdmissibilityReport(admissible=False, witness_q=0.0)

    if c == 0:
        # Linear in q, so negative beyond its zero crossing.
        crossing = -a / (2.0 * b)
        return AdmissibilityReport(
            admissible=False,
            witness_q=crossing - math.copysign(1.0 + abs(crossing), b),
        )

    # c < 0: downward parabola, negative one unit past its upper root.
    vertex = -b / (3.0 * c)
    peak = a - b * b / (3.0 * c)
    reach = math.sqrt(max(peak, 0.0) / (-3.0 * c))
    return AdmissibilityReport(admissible=False, witness_q=vertex + reach + 1.0)


def require_admissible(model: PolynomialMemristorModel) -> AdmissibilityReport:
    report = check_nonnegativity(model)
    if not report.admissible:
        raise InadmissibleModelError(
            f"memristor model (a={model.a}, b={model.b}, c={model.c}) is not admissible: "
            f"M({report.witness_q:.6g}) = {memristance(model, report.witness_q):.6g} < 0",
            witness_q=report.witness_q,
            details={"a": model.a, "b": model.b, "c": model.c},
        )
    return report


def memristance_floor(model: PolynomialMemristorModel) -> float:
    """M_min = 1e-9 * a; models with a = 0 fall back to an absolute 1e-9."""
    return MEMRISTANCE_FLOOR_RATIO * model.a if model.a > 0 else MEMRISTANCE_FLOOR_RATIO


def small_signal_resistance(model: PolynomialMemristorModel, q: float | None = None) -> float:
    """M(q), floored, at ``q`` (default q0); used to match reference resistors."""
    value = memristance(model, model.q0 if q is None else q)
    return max(float(value), memristance_floor(model))


def memristor_voltage(model: PolynomialMemristorModel, state: ElementState, I: ArrayLike) -> ArrayLike:
    """U = M(q) I. The state is read, never modified."""
    return memristance(model, state.q) * I


def trapezoid_increment(i_prev: float, i_now: float, dt: float) -> float:
    return 0.5 * dt * (i_prev + i_now)


def advance_charge(state: ElementState, I_prev: float, I_now: float, dt: float) -> ElementState:
    """Trapezoidal charge update q <- q + dt (I_prev + I_now) / 2."""
    if not dt > 0:
        raise ArgumentError(f"dt must be > 0, got {dt}")
    return ElementState(q=state.q + trapezoid_increment(I_prev, I_now, dt), t=state.t + dt)


def noise_voltage_psd(r: ThermalResistor, k_B: float) -> float:
    """Thevenin open-circuit noise level 4kTR; zero for the noise-free variant."""
    return 4.0 * k_B * r.temperature * r.resistance if r.noisy else 0.0


def noise_current_psd(r: ThermalResistor, k_B: float) -> float:
    """Norton short-circuit noise level 4kT/R; zero for the noise-free variant."""
    return 4.0 * k_B * r.temperature / r.resistance if r.noisy else 0.0


def resistor_terminal_voltage(r: ThermalResistor, I: ArrayLike, u_n: ArrayLike = 0.0) -> ArrayLike:
    """U = R I + U_n with current flowing into the + terminal."""
    if not r.noisy and np.any(np.asarray(u_n) != 0.0):
        raise ContractViolationError(
            "a noise-free resistor cannot carry a noise voltage",
            {"R": r.resistance, "T": r.temperature},
        )
    return r.resistance * I + u_n
