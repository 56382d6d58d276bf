"""Fixed-topology testbenches.

- exchange loop: two branches in parallel, each a Thevenin noise EMF in series
  with its resistance (or a noise-free memristor), one loop current
- rectifier cell: Norton noise current || shunt || memristor || capacitor
- cascade: independent rectifier cells stacked in series
- ideal drive: memristor fed by a prescribed current, voltage monitored

Each run is sequential inside; independent runs share nothing.
"""

from __future__ import annotations

import logging
import math

import numpy as np
from scipy.integrate import cumulative_trapezoid, solve_ivp
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from ..errors import ArgumentError, ConfigurationError
from ..lang import t
from ..models import (
    BranchSpec,
    CascadeResult,
    Capacitor,
    CircuitTrace,
    MeanWithError,
    NoiseRecord,
    NoiseRole,
    PolynomialMemristorModel,
    PowerFlowEstimate,
    RectifierResult,
    SimConfig,
    StageDc,
    ThermalResistor,
)
from .elements import (
    memristance,
    memristance_floor,
    noise_current_psd,
    noise_voltage_psd,
    require_admissible,
    trapezoid_increment,
)
from .noise import oversample_record, synthesize_bandlimited_gaussian
from .stats import trimmed_estimate

logger = logging.getLogger(__name__)

# Capacitor corner must sit this far below f_L for U_w to read as DC.
CUTOFF_DECADE = 10.0

BRANCH_A_STREAM = 0
BRANCH_B_STREAM = 1

# Implicit loop-charge step; the residual is in flux units (V s).
NEWTON_ABSTOL = 1e-12
NEWTON_RELTOL = 1e-12
NEWTON_MAX_ITERATIONS = 50

# Band-limited upsampling of the drive before the oracle spline.
ORACLE_INTERPOLATION = 4


# --- Exchange loop ---


def _branch_noise(branch: BranchSpec, config: SimConfig, stream: int) -> np.ndarray:
    if not branch.has_noise_source:
        return np.zeros(config.n_samples)
    level = noise_voltage_psd(branch.parameters, config.k_B)
    return synthesize_bandlimited_gaussian(config, level, NoiseRole.VOLTAGE, stream=stream).samples


def _solve_resistive_loop(
    r_a: float, r_b: float, u_a: np.ndarray, u_b: np.ndarray, dt: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    current = (u_a - u_b) / (r_a + r_b)
    loop_charge = cumulative_trapezoid(current, dx=dt, initial=0.0)
    return current, np.full(current.size, r_a), np.full(current.size, r_b), loop_charge


def _loop_flux_coefficients(branch_a: BranchSpec, branch_b: BranchSpec) -> tuple[float, float, float]:
    """Coefficients of G(Q) = g1 Q + g2 Q^2 + g3 Q^3 with dG/dQ = R_a + R_b.

    Q is the loop charge moved from a to b since t = 0, so branch b holds
    q0_b + Q and branch a holds q0_a - Q. G(Q) is the summed flux change of
    both branches relative to their initial charges.
    """
    g1 = g2 = g3 = 0.0
    for branch, sign in ((branch_a, -1.0), (branch_b, 1.0)):
        params = branch.parameters
        if isinstance(params, ThermalResistor):
            g1 += params.resistance
            continue
        g1 += memristance(params, params.q0)
        g2 += sign * (params.b + 3.0 * params.c * params.q0)
        g3 += params.c
    return g1, g2, g3


def _bracketed_loop_charge(g1: float, g2: float, g3: float, target: float, guess: float) -> float:
    def residual(x: float) -> float:
        return ((g3 * x + g2) * x + g1) * x - target

    span = 1.0
    while residual(guess - span) > 0.0 or residual(guess + span) < 0.0:
        span *= 2.0
    return brentq(residual, guess - span, guess + span, xtol=NEWTON_ABSTOL, rtol=4 * np.finfo(float).eps)


def _loop_charge(
    g1: float, g2: float, g3: float, target: float, guess: float, slope_floor: float
) -> float:
    """Root of G(Q) = target, Newton from ``guess`` with a bracketed fallback.

    dG/dQ is a sum of nonnegative resistances, so G is monotone and the root
    is unique.
    """
    x = guess
    tolerance = NEWTON_ABSTOL + NEWTON_RELTOL * abs(target)
    for _ in range(NEWTON_MAX_ITERATIONS):
        residual = ((g3 * x + g2) * x + g1) * x - target
        if abs(residual) <= tolerance:
            return x
        slope = (3.0 * g3 * x + 2.0 * g2) * x + g1
        x -= residual / max(slope, slope_floor)
    return _bracketed_loop_charge(g1, g2, g3, target, guess)


def _solve_memristive_loop(
    branch_a: BranchSpec,
    branch_b: BranchSpec,
    u_a: np.ndarray,
    u_b: np.ndarray,
    dt: float,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, int]:
    """Step the loop with charge-dependent branch resistances.

    The loop equation (R_a + R_b) dQ/dt = u_a - u_b integrates exactly to
    G(Q) = Y, with Y the running integral of u_a - u_b. Each step solves
    that relation implicitly for the loop charge, so the flux balance holds
    at every sample and the charge cannot drift. The current then follows
    from the branch resistances at the solved charge. Branch a sees the loop
    current in reverse orientation.
    """
    mem_a = branch_a.parameters if isinstance(branch_a.parameters, PolynomialMemristorModel) else None
    mem_b = branch_b.parameters if isinstance(branch_b.parameters, PolynomialMemristorModel) else None
    fixed_a = None if mem_a else branch_a.parameters.resistance
    fixed_b = None if mem_b else branch_b.parameters.resistance
    floor_a = memristance_floor(mem_a) if mem_a else 0.0
    floor_b = memristance_floor(mem_b) if mem_b else 0.0
    q0_a = mem_a.q0 if mem_a else 0.0
    q0_b = mem_b.q0 if mem_b else 0.0

    g1, g2, g3 = _loop_flux_coefficients(branch_a, branch_b)
    slope_floor = (fixed_a or 0.0) + (fixed_b or 0.0)
    if slope_floor == 0.0:
        # Two memristors: the floors keep G strictly increasing where both touch M = 0.
        slope_floor = floor_a + floor_b
        g1 += slope_floor
    drive_flux = cumulative_trapezoid(u_a - u_b, dx=dt, initial=0.0)

    n = u_a.size
    current = np.empty(n)
    res_a = np.empty(n)
    res_b = np.empty(n)
    loop_charge = np.empty(n)
    x = 0.0
    clamps = 0

    for k, (ua, ub, y) in enumerate(zip(u_a.tolist(), u_b.tolist(), drive_flux.tolist())):
        x = _loop_charge(g1, g2, g3, y, x, slope_floor)
        if mem_a:
            r_a = memristance(mem_a, q0_a - x)
            if r_a < floor_a:
                r_a = floor_a
                clamps += 1
        else:
            r_a = fixed_a
        if mem_b:
            r_b = memristance(mem_b, q0_b + x)
            if r_b < floor_b:
                r_b = floor_b
                clamps += 1
        else:
            r_b = fixed_b

        current[k] = (ua - ub) / (r_a + r_b)
        res_a[k] = r_a
        res_b[k] = r_b
        loop_charge[k] = x

    return current, res_a, res_b, loop_charge, clamps


def _branch_charge(branch: BranchSpec, loop_charge: np.ndarray, sign: float) -> np.ndarray:
    q0 = branch.parameters.q0 if isinstance(branch.parameters, PolynomialMemristorModel) else 0.0
    return q0 + sign * loop_charge


def run_exchange(
    branch_a: BranchSpec,
    branch_b: BranchSpec,
    config: SimConfig,
    *,
    decimation: int = 16,
) -> tuple[PowerFlowEstimate, CircuitTrace]:
    """Net power flow from branch a into branch b.

    I = (u_a - u_b) / (R_a + R_b). Branch b absorbs V I with V = R_b I + u_b,
    i.e. its own dissipation R_b I^2 minus the power -u_b I its EMF injects.
    The burn-in-trimmed mean of that series is the a->b flow.
    """
    config.check()
    for branch in (branch_a, branch_b):
        if isinstance(branch.parameters, PolynomialMemristorModel):
            require_admissible(branch.parameters)
    if decimation < 1:
        raise ArgumentError(f"decimation must be >= 1, got {decimation}")

    logger.info(
        t("exchange.starting", {"a": branch_a.describe(), "b": branch_b.describe(), "seed": config.seed})
    )
    u_a = _branch_noise(branch_a, config, BRANCH_A_STREAM)
    u_b = _branch_noise(branch_b, config, BRANCH_B_STREAM)

    clamps = 0
    if isinstance(branch_a.parameters, ThermalResistor) and isinstance(branch_b.parameters, ThermalResistor):
        current, res_a, res_b, loop_charge = _solve_resistive_loop(
            branch_a.parameters.resistance, branch_b.parameters.resistance, u_a, u_b, config.dt
        )
    else:
        current, res_a, res_b, loop_charge, clamps = _solve_memristive_loop(
            branch_a, branch_b, u_a, u_b, config.dt
        )
    if clamps:
        logger.warning(t("circuit.clamped", {"count": clamps}))

    node_voltage = res_b * current + u_b
    flow = trimmed_estimate(node_voltage * current, config)

    q_a = _branch_charge(branch_a, loop_charge, -1.0)
    q_b = _branch_charge(branch_b, loop_charge, 1.0)
    keep = slice(None, None, decimation)
    trace = CircuitTrace(
        time=(np.arange(config.n_samples) * config.dt)[keep],
        current=current[keep],
        node_voltage=node_voltage[keep],
        q_a=q_a[keep],
        q_b=q_b[keep],
        emf_power=((u_a - u_b) * current)[keep],
        dissipation_a=(res_a * current * current)[keep],
        dissipation_b=(res_b * current * current)[keep],
        decimation=decimation,
        burn_in_discarded=config.burn_in_samples,
        clamp_count=clamps,
        flow_mean=flow.mean,
    )
    logger.info(t("exchange.finished", {"mean": f"{flow.mean:.6g}", "se": f"{flow.standard_error:.3g}"}))
    return flow, trace


def net_flow(trace: CircuitTrace, toward: str = "b") -> float:
    """Mean absorbed power of branch ``toward``, from the full-rate post-burn-in series."""
    if toward not in ("a", "b"):
        raise ArgumentError(f"toward must be 'a' or 'b', got {toward!r}")
    return trace.flow_mean if toward == "b" else -trace.flow_mean


# --- Rectifier cell ---


def check_rectifier(
    m: PolynomialMemristorModel, shunt: ThermalResistor, cap: Capacitor, config: SimConfig
) -> None:
    config.check()
    require_admissible(m)
    if not shunt.noisy:
        raise ConfigurationError(
            "rectifier shunt must be a noisy resistor", {"R": shunt.resistance, "T": shunt.temperature}
        )
    cutoff = cap.cutoff_frequency(shunt.resistance)
    limit = config.band_low / CUTOFF_DECADE
    if not cutoff < limit:
        raise ConfigurationError(
            f"capacitor cutoff {cutoff:.4g} must be below f_L/10 = {limit:.4g}; increase C",
            {"cutoff": cutoff, "limit": limit, "C": cap.capacitance, "R": shunt.resistance},
        )


def _integrate_rectifier(
    m: PolynomialMemristorModel,
    shunt: ThermalResistor,
    cap: Capacitor,
    drive: np.ndarray,
    dt: float,
) -> tuple[np.ndarray, int]:
    """Node equation C dV/dt = i_n - V/R - V/M(q), dq/dt = V/M(q).

    Crank-Nicolson on the node: the memristor conductance is taken at a
    predicted mid-step charge, the node voltage is solved from the averaged
    currents, and the charge advances by the trapezoid rule with that same
    conductance. Sample 0 is the initial state.
    """
    c_dt = cap.capacitance / dt
    g_shunt = 1.0 / shunt.resistance
    floor = memristance_floor(m)

    q = m.q0
    v = cap.v0
    clamps = 0
    samples = drive.tolist()
    out = [v]
    for i_prev, i_now in zip(samples, samples[1:]):
        g_start = 1.0 / max(memristance(m, q), floor)
        m_mid = memristance(m, q + 0.5 * dt * v * g_start)
        if m_mid < floor:
            m_mid = floor
            clamps += 1
        g = 1.0 / m_mid
        h = 0.5 * (g_shunt + g)
        v_new = ((c_dt - h) * v + 0.5 * (i_prev + i_now)) / (c_dt + h)
        q += trapezoid_increment(v * g, v_new * g, dt)
        v = v_new
        out.append(v)
    return np.asarray(out), clamps


def norton_drive(shunt: ThermalResistor, config: SimConfig, stream: int) -> NoiseRecord:
    level = noise_current_psd(shunt, config.k_B)
    return synthesize_bandlimited_gaussian(config, level, NoiseRole.CURRENT, stream=stream)


def _check_drive(drive: NoiseRecord, config: SimConfig) -> None:
    if drive.n_samples != config.n_samples or not math.isclose(drive.dt, config.dt):
        raise ArgumentError(
            "drive record does not match the configured sample rate and length",
            {"drive_n": drive.n_samples, "config_n": config.n_samples},
        )


def run_rectifier_cell(
    m: PolynomialMemristorModel,
    shunt: ThermalResistor,
    cap: Capacitor,
    config: SimConfig,
    *,
    stream: int = 0,
    drive: NoiseRecord | None = None,
) -> RectifierResult:
    """Burn-in-trimmed mean capacitor voltage U_w of one rectifier cell."""
    check_rectifier(m, shunt, cap, config)
    if drive is None:
        drive = norton_drive(shunt, config, stream)
    else:
        _check_drive(drive, config)

    voltage, clamps = _integrate_rectifier(m, shunt, cap, drive.samples, config.dt)
    if clamps:
        logger.warning(t("circuit.clamped", {"count": clamps}))
    est = trimmed_estimate(voltage, config)
    logger.info(
        t("rectifier.finished", {"stream": stream, "mean": f"{est.mean:.6g}", "se": f"{est.standard_error:.3g}"})
    )
    return RectifierResult(
        dc_voltage_mean=est.mean,
        dc_voltage_se=est.standard_error,
        capacitor_final_voltage=float(voltage[-1]),
        clamp_count=clamps,
        n_blocks=est.n_blocks,
        block_length=est.block_length,
        burn_in_discarded=est.burn_in_discarded,
        stream=stream,
        config=config,
    )


def rectifier_reference_oracle(
    m: PolynomialMemristorModel,
    shunt: ThermalResistor,
    cap: Capacitor,
    config: SimConfig,
    drive: NoiseRecord,
) -> MeanWithError:
    """Same node equations integrated by adaptive DOP853.

    The drive is upsampled band-limited before the spline, so the oracle sees
    the same continuous signal the stepped integrator approximates.
    """
    check_rectifier(m, shunt, cap, config)
    _check_drive(drive, config)

    times = np.arange(config.n_samples) * config.dt
    fine = oversample_record(drive, ORACLE_INTERPOLATION)
    source = CubicSpline(np.arange(fine.n_samples) * fine.dt, fine.samples)
    floor = memristance_floor(m)
    g_shunt = 1.0 / shunt.resistance

    def rhs(time: float, y: np.ndarray) -> list[float]:
        v, q = y
        i_m = v / max(memristance(m, q), floor)
        return [(float(source(time)) - v * g_shunt - i_m) / cap.capacitance, i_m]

    sol = solve_ivp(
        rhs,
        (0.0, float(times[-1])),
        [cap.v0, m.q0],
        method="DOP853",
        t_eval=times,
        rtol=1e-8,
        atol=1e-12,
        max_step=config.dt,
    )
    if not sol.success:
        raise RuntimeError(f"{t('rectifier.oracleFailed')}: {sol.message}")
    est = trimmed_estimate(sol.y[0], config)
    return MeanWithError(est.mean, est.standard_error)


# --- Cascade ---


def run_cascade(
    n_stages: int,
    m: PolynomialMemristorModel,
    shunt: ThermalResistor,
    cap: Capacitor,
    config: SimConfig,
) -> CascadeResult:
    """N independent cells in series; stage i draws from substream i.

    Available power uses the matched-load convention R_out = shunt R.
    """
    if n_stages < 1:
        raise ArgumentError(f"n_stages must be >= 1, got {n_stages}")
    stages = [run_rectifier_cell(m, shunt, cap, config, stream=i) for i in range(n_stages)]
    return cascade_from_stages(stages, shunt.resistance)


def cascade_from_stages(stages: list[RectifierResult], output_resistance: float) -> CascadeResult:
    """Series-stack already simulated cells; the total is the plain sum of stage means."""
    if not stages:
        raise ArgumentError("a cascade needs at least one stage")
    n = len(stages)
    total = sum(s.dc_voltage_mean for s in stages)
    total_se = math.sqrt(sum(s.dc_voltage_se**2 for s in stages))
    return CascadeResult(
        per_stage_dc=[StageDc(mean=s.dc_voltage_mean, standard_error=s.dc_voltage_se) for s in stages],
        total_dc_mean=total,
        total_dc_se=total_se,
        available_power_estimate=total * total / (4.0 * n * output_resistance),
        n_stages=n,
        output_resistance=output_resistance,
        clamp_count=sum(s.clamp_count for s in stages),
    )


# --- Ideal current drive ---


def run_ideal_drive(
    m: PolynomialMemristorModel, drive: NoiseRecord, config: SimConfig
) -> MeanWithError:
    """Mean of U = M(q) I with q the trapezoidal integral of the prescribed current."""
    config.check()
    require_admissible(m)
    if drive.role is not NoiseRole.CURRENT:
        raise ArgumentError("ideal drive needs a current-source record")
    if not drive.band[0] > 0:
        raise ConfigurationError("ideal drive must be band-limited with f_L > 0")
    _check_drive(drive, config)

    current = drive.samples
    q = m.q0 + cumulative_trapezoid(current, dx=drive.dt, initial=0.0)
    voltage = memristance(m, q) * current
    est = trimmed_estimate(voltage, config)
    return MeanWithError(est.mean, est.standard_error)
