"""Data models for memristor-audit."""

from __future__ import annotations

import math
from enum import Enum
from typing import Annotated, Any, NamedTuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .errors import ConfigurationError

BOLTZMANN_SI = 1.380649e-23

DEFINITION_TEXT = (
    "a) The device-in-question is active if the following condition holds. "
    "Suppose we have a hypothetical-device, which does not require an external "
    "energy source to function and has the same signal-response characteristics "
    "as the device-in-question. In an isolated system with thermal equilibrium, "
    "such a hypothetical-device in a proper circuit would be able to produce "
    "steady-state entropy reduction in the system that is originally in thermal "
    "equilibrium, where the other elements are all passive. In other words, such "
    "hypothetical device would violate the Second Law of Thermodynamics. "
    "b) Such a hypothetical-device cannot exist in practice, thus an active "
    "physical device always requires an external energy source to execute its "
    "response characteristics of activity. "
    "c) The device-in-question is passive if it is not active."
)

RECTIFIER_TOPOLOGY = (
    "Norton noise current source (one-sided PSD 4kT/R) in parallel with the shunt "
    "conductance 1/R, the memristor and the capacitor on a single node; U_w is the "
    "node voltage read across the capacitor"
)


def _is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


# --- Simulation configuration ---


class UnitSystem(str, Enum):
    NORMALIZED = "normalized"
    SI = "si"


class SimConfig(BaseModel):
    """Global run parameters shared by every testbench."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    sample_rate: float = Field(1.0, gt=0)
    band_low: float = 0.05
    band_high: float = 0.45
    n_samples: int = Field(2**22, gt=0)
    seed: int = Field(0, ge=0, lt=2**64)
    k_B: float = Field(1.0, gt=0)
    burn_in_fraction: float = 0.1
    units: UnitSystem = UnitSystem.NORMALIZED
    min_blocks: int = Field(32, ge=2)

    @model_validator(mode="before")
    @classmethod
    def _default_boltzmann(cls, data: Any) -> Any:
        if isinstance(data, dict) and data.get("k_B") is None:
            data = dict(data)
            si = data.get("units") in (UnitSystem.SI, UnitSystem.SI.value)
            data["k_B"] = BOLTZMANN_SI if si else 1.0
        return data

    @property
    def dt(self) -> float:
        return 1.0 / self.sample_rate

    @property
    def band(self) -> tuple[float, float]:
        return (self.band_low, self.band_high)

    @property
    def bandwidth(self) -> float:
        return self.band_high - self.band_low

    @property
    def burn_in_samples(self) -> int:
        return int(self.n_samples * self.burn_in_fraction)

    def with_seed(self, seed: int) -> SimConfig:
        return self.model_copy(update={"seed": seed})

    def oversampled(self, factor: int) -> SimConfig:
        """Same band and duration at ``factor`` times the sample rate."""
        return self.model_copy(
            update={
                "sample_rate": self.sample_rate * factor,
                "n_samples": self.n_samples * factor,
            }
        )

    def check(self) -> None:
        """Raise ConfigurationError unless 0 < f_L < f_H <= fs/2 etc."""
        nyquist = self.sample_rate / 2.0
        if not 0.0 < self.band_low < self.band_high <= nyquist:
            raise ConfigurationError(
                f"invalid band [{self.band_low}, {self.band_high}]: "
                f"need 0 < f_L < f_H <= fs/2 = {nyquist}",
                {"band_low": self.band_low, "band_high": self.band_high, "nyquist": nyquist},
            )
        if not _is_power_of_two(self.n_samples):
            raise ConfigurationError(
                f"n_samples = {self.n_samples} is not a power of two",
                {"n_samples": self.n_samples},
            )
        if not 0.0 <= self.burn_in_fraction < 1.0:
            raise ConfigurationError(
                f"burn_in_fraction = {self.burn_in_fraction} outside [0, 1)",
                {"burn_in_fraction": self.burn_in_fraction},
            )


# --- Noise ---


class NoiseRole(str, Enum):
    VOLTAGE = "voltage-source"
    CURRENT = "current-source"


class NoiseRecord(BaseModel):
    """A sampled waveform with the one-sided PSD level it was synthesized for."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    samples: np.ndarray
    dt: float = Field(gt=0)
    band: tuple[float, float]
    target_psd_level: float = Field(ge=0)
    role: NoiseRole
    seed: int = 0
    stream: int = 0

    @field_validator("samples", mode="before")
    @classmethod
    def _freeze_samples(cls, v: Any) -> np.ndarray:
        arr = np.array(v, dtype=np.float64).reshape(-1)
        arr.setflags(write=False)
        return arr

    @property
    def sample_rate(self) -> float:
        return 1.0 / self.dt

    @property
    def n_samples(self) -> int:
        return int(self.samples.size)

    def header(self) -> dict[str, Any]:
        """Sidecar metadata for raw exports."""
        return {
            "fs": self.sample_rate,
            "band": list(self.band),
            "psd_level": self.target_psd_level,
            "seed": self.seed,
            "stream": self.stream,
            "role": self.role.value,
            "n_samples": self.n_samples,
            "dtype": "<f8",
        }


class PsdEstimate(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    frequency_bins: np.ndarray
    psd_values: np.ndarray
    segment_count: int
    window_name: str

    @property
    def resolution(self) -> float:
        if self.frequency_bins.size < 2:
            return 0.0
        return float(self.frequency_bins[1] - self.frequency_bins[0])


class RecordStatistics(NamedTuple):
    mean: float
    variance: float
    standard_error_of_mean: float


class BlockEstimate(NamedTuple):
    mean: float
    standard_error: float
    n_blocks: int
    block_length: int


class MeanWithError(NamedTuple):
    mean: float
    standard_error: float


# --- Elements ---


class ThermalResistor(BaseModel):
    """Resistor; noisy=True obeys S_u = 4kTR, noisy=False is the noise-free variant."""

    model_config = ConfigDict(frozen=True, extra="forbid", populate_by_name=True)

    resistance: float = Field(alias="R", gt=0)
    temperature: float = Field(alias="T", ge=0)
    noisy: bool = True


class PolynomialMemristorModel(BaseModel):
    """Flux polynomial Phi(q) = a q + b q^2 + c q^3 with initial charge q0."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    a: float
    b: float = 0.0
    c: float = 0.0
    q0: float = 0.0

    @property
    def is_linear(self) -> bool:
        return self.b == 0.0 and self.c == 0.0


class ElementState(BaseModel):
    model_config = ConfigDict(frozen=True)

    q: float = 0.0  # accumulated charge
    t: float = 0.0


class Capacitor(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid", populate_by_name=True)

    capacitance: float = Field(alias="C", gt=0)
    v0: float = 0.0

    def cutoff_frequency(self, resistance: float) -> float:
        return 1.0 / (2.0 * math.pi * resistance * self.capacitance)


class AdmissibilityReport(BaseModel):
    admissible: bool
    witness_q: float | None = None
    boundary: bool = False  # min M(q) is exactly zero (b^2 = 3ac)


class BranchKind(str, Enum):
    THERMAL_RESISTOR = "thermal-resistor"
    MEMRISTOR = "memristor"


class BranchSpec(BaseModel):
    """One device per branch. Spec files may give the device keys flat next to ``kind``."""

    model_config = ConfigDict(frozen=True)

    kind: BranchKind
    parameters: ThermalResistor | PolynomialMemristorModel

    @model_validator(mode="before")
    @classmethod
    def _lift_flat_parameters(cls, data: Any) -> Any:
        if not isinstance(data, dict):
            return data
        data = dict(data)
        params = data.pop("parameters", None)
        if params is None:
            params = {k: data.pop(k) for k in list(data) if k != "kind"}
        kind = BranchKind(data.get("kind"))
        if isinstance(params, dict):
            if kind is BranchKind.MEMRISTOR:
                params = PolynomialMemristorModel.model_validate(params)
            else:
                params = ThermalResistor.model_validate(params)
        return {"kind": kind, "parameters": params}

    @model_validator(mode="after")
    def _kind_matches(self) -> BranchSpec:
        expected = (
            PolynomialMemristorModel if self.kind is BranchKind.MEMRISTOR else ThermalResistor
        )
        if not isinstance(self.parameters, expected):
            raise ValueError(f"branch kind {self.kind.value} needs {expected.__name__} parameters")
        return self

    @classmethod
    def resistor(cls, R: float, T: float, noisy: bool = True) -> BranchSpec:
        return cls(kind=BranchKind.THERMAL_RESISTOR, parameters=ThermalResistor(R=R, T=T, noisy=noisy))

    @classmethod
    def memristor(cls, a: float, b: float = 0.0, c: float = 0.0, q0: float = 0.0) -> BranchSpec:
        return cls(
            kind=BranchKind.MEMRISTOR,
            parameters=PolynomialMemristorModel(a=a, b=b, c=c, q0=q0),
        )

    @property
    def has_noise_source(self) -> bool:
        # A memristor branch never carries a noise source.
        return isinstance(self.parameters, ThermalResistor) and self.parameters.noisy

    def describe(self) -> str:
        p = self.parameters
        if isinstance(p, ThermalResistor):
            tag = "noisy" if p.noisy else "noise-free"
            return f"{tag} resistor R={p.resistance:g} T={p.temperature:g}"
        return f"noise-free memristor a={p.a:g} b={p.b:g} c={p.c:g} q0={p.q0:g}"


# --- Testbench results ---


class PowerFlowEstimate(BaseModel):
    """Burn-in-trimmed mean power with block-means standard error."""

    model_config = ConfigDict(frozen=True)

    mean: float
    standard_error: float = Field(ge=0)
    n_blocks: int
    block_length: int
    burn_in_discarded: int

    @property
    def z_score(self) -> float:
        if self.standard_error == 0.0:
            return 0.0 if self.mean == 0.0 else math.inf
        return abs(self.mean) / self.standard_error


class CircuitTrace(BaseModel):
    """Decimated per-sample record of an exchange-loop run.

    Passive sign convention: ``current`` flows out of branch a's + terminal into
    branch b's, so branch b absorbs ``node_voltage * current`` and branch a
    absorbs its negative.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    time: np.ndarray
    current: np.ndarray
    node_voltage: np.ndarray
    q_a: np.ndarray
    q_b: np.ndarray
    emf_power: np.ndarray
    dissipation_a: np.ndarray
    dissipation_b: np.ndarray
    decimation: int = Field(ge=1)
    burn_in_discarded: int = 0
    clamp_count: int = 0
    # Full-rate, post-burn-in mean of the absorbed power of branch b.
    flow_mean: float

    @property
    def retained_burn_in(self) -> int:
        """First retained index at or after the burn-in boundary."""
        return -(-self.burn_in_discarded // self.decimation)


class RectifierResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    dc_voltage_mean: float
    dc_voltage_se: float = Field(ge=0)
    capacitor_final_voltage: float
    clamp_count: int = 0
    n_blocks: int
    block_length: int
    burn_in_discarded: int
    stream: int = 0
    config: SimConfig
    topology: str = RECTIFIER_TOPOLOGY

    @property
    def boundary_degenerate(self) -> bool:
        return self.clamp_count > 0


class StageDc(BaseModel):
    mean: float
    standard_error: float


class CascadeResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    per_stage_dc: list[StageDc]
    total_dc_mean: float
    total_dc_se: float
    available_power_estimate: float
    n_stages: int
    output_resistance: float
    clamp_count: int = 0


# --- Audit ---


class PassivityClass(str, Enum):
    PASSIVE_CONSISTENT = "passive-consistent"
    REQUIRES_ACTIVITY = "requires-activity"


class ComplianceReport(BaseModel):
    passed: bool
    measured_psd_level: float
    reference: float
    out_of_band_peak: float = 0.0
    fdt_device: bool = True
    note: str = ""


class SeedEstimate(BaseModel):
    seed: int
    estimate: PowerFlowEstimate


class PassivityVerdict(BaseModel):
    classification: PassivityClass
    z_score: float
    threshold: float = 5.0
    sign_consistent: bool
    pooled: PowerFlowEstimate
    per_seed: list[SeedEstimate]
    testbench: str
    reference_resistance: float
    t_bath: float
    definition_citation: str = DEFINITION_TEXT


class SweepPoint(BaseModel):
    """One exchange run, or one temperature point of a sweep.

    Temperatures are None when a branch has none (a memristor); ``predicted``
    is None when no closed form applies.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    t_a: float | None = None
    t_b: float | None = None
    delta_t: float | None = None
    measured: PowerFlowEstimate
    predicted: float | None = None
    clamp_count: int = 0
    trace: CircuitTrace | None = Field(None, exclude=True, repr=False)


# --- Experiments ---


class ExperimentKind(str, Enum):
    EXCHANGE = "exchange"
    RECTIFY = "rectify"
    CASCADE = "cascade"
    PASSIVITY = "passivity"
    FDT_CHECK = "fdt-check"
    IDEAL_DRIVE = "ideal-drive"


# Element blocks each kind needs.
REQUIRED_BLOCKS: dict[ExperimentKind, tuple[str, ...]] = {
    ExperimentKind.EXCHANGE: ("branch_a", "branch_b"),
    ExperimentKind.RECTIFY: ("memristor", "shunt", "capacitor"),
    ExperimentKind.CASCADE: ("memristor", "shunt", "capacitor"),
    ExperimentKind.PASSIVITY: ("device",),
    ExperimentKind.FDT_CHECK: ("device",),
    ExperimentKind.IDEAL_DRIVE: ("memristor",),
}

Seed = Annotated[int, Field(ge=0, lt=2**64)]


class OutputSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    dir: str | None = None  # falls back to the runner's out_dir
    traces: bool = False
    raw_records: bool = False


class PlotSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    q_min: float = -2.0
    q_max: float = 2.0
    q_points: int = Field(401, ge=2)


class DriveSpec(BaseModel):
    """Ideal current drive; without an explicit level it is the Norton noise of R at T."""

    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    psd_level: float | None = Field(None, ge=0)
    resistance: float = Field(1.0, alias="R", gt=0)
    temperature: float = Field(1.0, alias="T", ge=0)

    def level(self, k_B: float) -> float:
        if self.psd_level is not None:
            return self.psd_level
        return 4.0 * k_B * self.temperature / self.resistance


class ExperimentSpec(BaseModel):
    """One static experiment file: kind, element blocks, simulation block, seeds."""

    model_config = ConfigDict(extra="forbid")

    kind: ExperimentKind
    name: str = "experiment"
    sim: SimConfig = Field(default_factory=SimConfig)
    seeds: list[Seed] = Field(min_length=1)
    branch_a: BranchSpec | None = None
    branch_b: BranchSpec | None = None
    device: BranchSpec | None = None
    memristor: PolynomialMemristorModel | None = None
    shunt: ThermalResistor | None = None
    capacitor: Capacitor | None = None
    drive: DriveSpec = Field(default_factory=DriveSpec)
    t_bath: float = Field(1.0, ge=0)
    threshold: float = Field(5.0, gt=0)
    n_stages: list[Annotated[int, Field(ge=1)]] = Field(default_factory=lambda: [1], min_length=1)
    sweep_t_a: list[Annotated[float, Field(ge=0)]] | None = None
    output: OutputSpec = Field(default_factory=OutputSpec)
    plot: PlotSpec = Field(default_factory=PlotSpec)

    @field_validator("n_stages", mode="before")
    @classmethod
    def _single_stage_count(cls, v: Any) -> Any:
        return [v] if isinstance(v, int) else v

    @model_validator(mode="after")
    def _blocks_present(self) -> ExperimentSpec:
        missing = [name for name in REQUIRED_BLOCKS[self.kind] if getattr(self, name) is None]
        if missing:
            raise ValueError(f"experiment kind {self.kind.value!r} needs blocks: {', '.join(missing)}")
        if self.sweep_t_a is not None and (
            self.branch_a is None or self.branch_a.kind is not BranchKind.THERMAL_RESISTOR
        ):
            raise ValueError("sweep_t_a needs a thermal-resistor branch_a")
        return self

    def echo(self) -> dict[str, Any]:
        """Spec as recorded in results: JSON-safe, aliases restored, output paths left out."""
        return self.model_dump(mode="json", by_alias=True, exclude={"output"})


class ExperimentResult(BaseModel):
    """Deterministic content of result.json; timestamps go to meta.json."""

    kind: ExperimentKind
    name: str
    units: UnitSystem
    config_hash: str
    seeds: list[int]
    runs: list[dict[str, Any]]
    summary: dict[str, Any]
    decision_log: list[str]
    spec: dict[str, Any]
