"""Closed-form references, FDT compliance and the Second-Law passivity verdict.

A device "requires activity" when, taken noise-free as its equations state and
placed in parallel with a noisy resistor at the bath temperature, it draws a
steady net power that a 5-sigma rule resolves with the same sign on every
seed. A finite run can refute passivity but never prove it, so the other
outcome is "passive-consistent".
"""

from __future__ import annotations

import logging
import math
from collections.abc import Iterable, Sequence
from concurrent.futures import Executor

import numpy as np

from ..errors import ArgumentError
from ..lang import t
from ..models import (
    BranchSpec,
    ComplianceReport,
    MeanWithError,
    NoiseRole,
    PassivityClass,
    PassivityVerdict,
    PolynomialMemristorModel,
    PowerFlowEstimate,
    SeedEstimate,
    SimConfig,
    SweepPoint,
    ThermalResistor,
)
from .circuits import run_exchange
from .elements import noise_voltage_psd, require_admissible, small_signal_resistance
from .noise import estimate_psd, in_band_level, out_of_band_peak, synthesize_bandlimited_gaussian

logger = logging.getLogger(__name__)

DEFAULT_THRESHOLD = 5.0
MIN_SEEDS = 3
FDT_TOLERANCE = 0.03
SILENCE_RATIO = 1e-6


# --- Closed-form references ---


def _check_band(f_L: float, f_H: float) -> None:
    if not f_H > f_L:
        raise ArgumentError(f"invalid band: f_H = {f_H} must exceed f_L = {f_L}")


def fdt_reference_psd(re_z: float, T: float, k_B: float = 1.0) -> float:
    """Classical FDT voltage level S_u = Re[Z] * 4kT."""
    if re_z < 0 or T < 0:
        raise ArgumentError(f"Re[Z] and T must be >= 0, got {re_z}, {T}")
    return 4.0 * k_B * T * re_z


def norton_reference_psd(R: float, T: float, k_B: float = 1.0) -> float:
    """Norton current level S_I = 4kT / R."""
    if not R > 0 or T < 0:
        raise ArgumentError(f"need R > 0 and T >= 0, got {R}, {T}")
    return 4.0 * k_B * T / R


def expected_exchange_power(
    R0: float, T1: float, T2: float, f_L: float, f_H: float, k_B: float = 1.0
) -> float:
    """Mean power from resistor 1 to an equal resistor 2: k (T1 - T2)(f_H - f_L).

    The R0^2 / 4R0^2 matching factor cancels the 4 of 4kTR, so R0 drops out.
    """
    if not R0 > 0:
        raise ArgumentError(f"R0 must be > 0, got {R0}")
    _check_band(f_L, f_H)
    return k_B * (T1 - T2) * (f_H - f_L)


def expected_loop_power(
    R_a: float, T_a: float, R_b: float, T_b: float, f_L: float, f_H: float, k_B: float = 1.0
) -> float:
    """Mean a->b power for unequal linear branches: 4k R_a R_b (T_a - T_b) df / (R_a + R_b)^2.

    A noise-free linear branch enters with T = 0.
    """
    if not (R_a > 0 and R_b > 0):
        raise ArgumentError(f"branch resistances must be > 0, got {R_a}, {R_b}")
    _check_band(f_L, f_H)
    return 4.0 * k_B * R_a * R_b * (T_a - T_b) * (f_H - f_L) / (R_a + R_b) ** 2


def expected_memristor_absorption(T: float, f_L: float, f_H: float, k_B: float = 1.0) -> float:
    """Mean power a noise-free memristor draws from a matched resistor at T."""
    if T < 0:
        raise ArgumentError(f"T must be >= 0, got {T}")
    _check_band(f_L, f_H)
    return k_B * T * (f_H - f_L)


def expected_resistor_noise_power(R: float, T: float, f_L: float, f_H: float, k_B: float = 1.0) -> float:
    """Mean-square open-circuit noise voltage 4kTR (f_H - f_L)."""
    _check_band(f_L, f_H)
    return fdt_reference_psd(R, T, k_B) * (f_H - f_L)


# --- FDT compliance ---


def check_fdt_compliance(
    branch: BranchSpec,
    config: SimConfig,
    *,
    t_bath: float = 1.0,
    n_segments: int = 64,
    tolerance: float = FDT_TOLERANCE,
) -> ComplianceReport:
    """Measure a branch's open-circuit noise level against 4kT Re[Z].

    Noise-free devices are compared with a noisy twin of the same small-signal
    resistance at ``t_bath`` and must measure silent.
    """
    params = branch.parameters
    if isinstance(params, ThermalResistor):
        twin_r, twin_t = params.resistance, params.temperature
        level = noise_voltage_psd(params, config.k_B)
    else:
        require_admissible(params)
        twin_r, twin_t = small_signal_resistance(params), t_bath
        level = 0.0
    reference = fdt_reference_psd(twin_r, twin_t, config.k_B)

    record = synthesize_bandlimited_gaussian(config, level, NoiseRole.VOLTAGE)
    measured = in_band_level(estimate_psd(record, n_segments, "hann"), config.band)
    # One full-length rectangular periodogram resolves the synthesis bins exactly.
    leakage = out_of_band_peak(estimate_psd(record, 1, "boxcar"), config.band)

    fdt_device = branch.has_noise_source or twin_t == 0.0
    if fdt_device:
        if reference == 0.0:
            passed = measured == 0.0
        else:
            passed = abs(measured - reference) / reference <= tolerance
        note = t("fdt.compliant") if passed else t("fdt.nonCompliant")
    else:
        silent = measured <= SILENCE_RATIO * reference
        passed = False
        note = t("fdt.nonFdtDevice", {"silent": silent})

    logger.info(
        t("fdt.checked", {"branch": branch.describe(), "measured": f"{measured:.6g}", "reference": f"{reference:.6g}"})
    )
    return ComplianceReport(
        passed=passed,
        measured_psd_level=measured,
        reference=reference,
        out_of_band_peak=leakage,
        fdt_device=fdt_device,
        note=note,
    )


# --- Pooling and seeds ---


def derive_seeds(seed: int, n: int) -> list[int]:
    """``n`` portable 64-bit seeds from one root seed."""
    state = np.random.SeedSequence(seed).generate_state(n, dtype=np.uint64)
    return [int(s) for s in state]


def pool_means(means: Sequence[float], standard_errors: Sequence[float]) -> MeanWithError:
    """Equal-weight mean of independent estimates with SE sqrt(sum se^2) / n."""
    if len(means) != len(standard_errors):
        raise ArgumentError(f"{len(means)} means but {len(standard_errors)} standard errors")
    if not means:
        raise ArgumentError("nothing to pool")
    n = len(means)
    return MeanWithError(
        math.fsum(means) / n,
        math.sqrt(math.fsum(se * se for se in standard_errors)) / n,
    )


def pool_estimates(estimates: Sequence[PowerFlowEstimate]) -> PowerFlowEstimate:
    """Equal-weight merge of independent estimates; order does not matter."""
    if not estimates:
        raise ArgumentError("nothing to pool")
    pooled = pool_means([e.mean for e in estimates], [e.standard_error for e in estimates])
    return PowerFlowEstimate(
        mean=pooled.mean,
        standard_error=pooled.standard_error,
        n_blocks=sum(e.n_blocks for e in estimates),
        block_length=max(e.block_length for e in estimates),
        burn_in_discarded=sum(e.burn_in_discarded for e in estimates),
    )


def _exchange_flow(job: tuple[BranchSpec, BranchSpec, SimConfig, int]) -> PowerFlowEstimate:
    branch_a, branch_b, config, decimation = job
    flow, _ = run_exchange(branch_a, branch_b, config, decimation=decimation)
    return flow


# --- Passivity verdict ---


def reference_resistor_for(device: BranchSpec, t_bath: float) -> BranchSpec:
    """Noisy resistor at the bath temperature matched to the device's resistance at q0."""
    params = device.parameters
    if isinstance(params, PolynomialMemristorModel):
        resistance = small_signal_resistance(params)
    else:
        resistance = params.resistance
    return BranchSpec.resistor(R=resistance, T=t_bath, noisy=True)


def classify_passivity(
    device_branch: BranchSpec,
    T_bath: float,
    config: SimConfig,
    n_seeds: int = MIN_SEEDS,
    *,
    threshold: float = DEFAULT_THRESHOLD,
    seeds: Sequence[int] | None = None,
    decimation: int = 16,
    executor: Executor | None = None,
) -> PassivityVerdict:
    """Exchange the device against a matched noisy resistor and apply the 5-sigma rule."""
    if seeds is not None:
        n_seeds = len(seeds)
    if n_seeds < MIN_SEEDS:
        raise ArgumentError(f"passivity needs at least {MIN_SEEDS} seeds, got {n_seeds}")
    if T_bath < 0:
        raise ArgumentError(f"T_bath must be >= 0, got {T_bath}")
    if isinstance(device_branch.parameters, PolynomialMemristorModel):
        require_admissible(device_branch.parameters)
    config.check()

    reference = reference_resistor_for(device_branch, T_bath)
    seed_list = list(seeds) if seeds is not None else derive_seeds(config.seed, n_seeds)
    jobs = [(reference, device_branch, config.with_seed(s), decimation) for s in seed_list]
    mapper = executor.map if executor is not None else map
    flows = list(mapper(_exchange_flow, jobs))

    pooled = pool_estimates(flows)
    sign_consistent = all(f.mean > 0 for f in flows) or all(f.mean < 0 for f in flows)
    z = pooled.z_score
    active = z > threshold and sign_consistent
    classification = PassivityClass.REQUIRES_ACTIVITY if active else PassivityClass.PASSIVE_CONSISTENT

    logger.info(
        t("passivity.verdict", {"device": device_branch.describe(), "verdict": classification.value, "z": f"{z:.3g}"})
    )
    return PassivityVerdict(
        classification=classification,
        z_score=z,
        threshold=threshold,
        sign_consistent=sign_consistent,
        pooled=pooled,
        per_seed=[SeedEstimate(seed=s, estimate=f) for s, f in zip(seed_list, flows)],
        testbench=(
            f"exchange loop: {reference.describe()} (branch a) -> "
            f"{device_branch.describe()} (branch b), T_bath={T_bath:g}"
        ),
        reference_resistance=reference.parameters.resistance,
        t_bath=T_bath,
    )


# --- Exchange points and sweeps ---


def _linear_branch(branch: BranchSpec) -> tuple[float, float] | None:
    """(resistance, effective noise temperature) of a linear branch, else None."""
    params = branch.parameters
    if isinstance(params, ThermalResistor):
        return params.resistance, params.temperature if params.noisy else 0.0
    if params.is_linear and params.a > 0:
        return params.a, 0.0
    return None


def predicted_exchange_power(branch_a: BranchSpec, branch_b: BranchSpec, config: SimConfig) -> float | None:
    """Closed-form a->b flow when both branches are linear; None otherwise."""
    a, b = _linear_branch(branch_a), _linear_branch(branch_b)
    if a is None or b is None:
        return None
    (r_a, t_a), (r_b, t_b) = a, b
    f_L, f_H = config.band
    if r_a == r_b:
        return expected_exchange_power(r_a, t_a, t_b, f_L, f_H, config.k_B)
    return expected_loop_power(r_a, t_a, r_b, t_b, f_L, f_H, config.k_B)


def _temperature(branch: BranchSpec) -> float | None:
    params = branch.parameters
    return params.temperature if isinstance(params, ThermalResistor) else None


def exchange_point(
    branch_a: BranchSpec,
    branch_b: BranchSpec,
    config: SimConfig,
    *,
    decimation: int = 16,
    keep_trace: bool = False,
) -> SweepPoint:
    """One exchange run next to its closed-form prediction, if any."""
    flow, trace = run_exchange(branch_a, branch_b, config, decimation=decimation)
    t_a, t_b = _temperature(branch_a), _temperature(branch_b)
    return SweepPoint(
        t_a=t_a,
        t_b=t_b,
        delta_t=t_a - t_b if t_a is not None and t_b is not None else None,
        measured=flow,
        predicted=predicted_exchange_power(branch_a, branch_b, config),
        clamp_count=trace.clamp_count,
        trace=trace if keep_trace else None,
    )


def exchange_sweep(
    t_a_values: Iterable[float],
    branch_a: BranchSpec,
    branch_b: BranchSpec,
    config: SimConfig,
    *,
    decimation: int = 16,
    keep_traces: bool = False,
) -> list[SweepPoint]:
    """Measured vs predicted a->b flow with branch a's resistor stepped over T_a."""
    base = branch_a.parameters
    if not isinstance(base, ThermalResistor):
        raise ArgumentError("a temperature sweep needs a thermal resistor in branch a")
    return [
        exchange_point(
            BranchSpec.resistor(R=base.resistance, T=t_a, noisy=base.noisy),
            branch_b,
            config,
            decimation=decimation,
            keep_trace=keep_traces,
        )
        for t_a in t_a_values
    ]


def agreement_r_squared(points: Sequence[SweepPoint]) -> float:
    """R^2 of measured flows against the closed-form line (no refit)."""
    if any(p.predicted is None for p in points):
        raise ArgumentError("every sweep point needs a closed-form prediction")
    measured = np.array([p.measured.mean for p in points])
    predicted = np.array([p.predicted for p in points])
    ss_tot = float(np.sum((measured - measured.mean()) ** 2))
    ss_res = float(np.sum((measured - predicted) ** 2))
    if ss_tot == 0.0:
        return 1.0 if ss_res == 0.0 else 0.0
    return 1.0 - ss_res / ss_tot
