"""Experiment runner - binds spec files to testbenches and writes result directories."""

from __future__ import annotations

import asyncio
import functools
import hashlib
import json
import logging
import math
import os
import platform
import time
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from collections.abc import Sequence
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, NamedTuple

import numpy as np
from pydantic import ValidationError

from . import __version__
from .config import RunnerConfig
from .errors import ArgumentError, ResultFileError, SpecParseError
from .lang import t
from .models import (
    RECTIFIER_TOPOLOGY,
    BranchSpec,
    CircuitTrace,
    ExperimentKind,
    ExperimentResult,
    ExperimentSpec,
    NoiseRecord,
    NoiseRole,
    PolynomialMemristorModel,
    PowerFlowEstimate,
    SimConfig,
    SweepPoint,
)
from .sim import audit, circuits, elements, noise
from .utils.saver import ResultSaver

logger = logging.getLogger(__name__)

RESULT_FILE = "result.json"
META_FILE = "meta.json"


# --- Loading and validation ---


def parse_spec(data: Any) -> ExperimentSpec:
    try:
        return ExperimentSpec.model_validate(data)
    except ValidationError as e:
        raise SpecParseError(
            t("spec.invalid", {"count": e.error_count()}),
            {"errors": json.loads(e.json())},
        ) from e


def load_spec(path: str | os.PathLike[str]) -> ExperimentSpec:
    """Read a TOML (default) or JSON (``.json``) spec file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise SpecParseError(t("spec.unreadable", {"path": str(path), "reason": str(e)}), {"path": str(path)}) from e
    try:
        data = json.loads(text) if path.suffix.lower() == ".json" else tomllib.loads(text)
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as e:
        raise SpecParseError(t("spec.malformed", {"path": str(path), "reason": str(e)}), {"path": str(path)}) from e
    return parse_spec(data)


def with_seeds(spec: ExperimentSpec, seeds: Sequence[int]) -> ExperimentSpec:
    """Copy of ``spec`` with its seed list replaced (re-validated)."""
    data = spec.model_dump(mode="json", by_alias=True)
    data["seeds"] = list(seeds)
    return parse_spec(data)


def memristor_models(spec: ExperimentSpec) -> list[tuple[str, PolynomialMemristorModel]]:
    """Every memristor model a spec references, labelled by its block name."""
    found = []
    if spec.memristor is not None:
        found.append(("memristor", spec.memristor))
    for label in ("branch_a", "branch_b", "device"):
        branch: BranchSpec | None = getattr(spec, label)
        if branch is not None and isinstance(branch.parameters, PolynomialMemristorModel):
            found.append((label, branch.parameters))
    return found


def validate_spec(spec: ExperimentSpec) -> list[str]:
    """Run the eager semantic checks; returns the names of the checks that passed."""
    passed = []
    spec.sim.check()
    passed.append("sim")
    for label, model in memristor_models(spec):
        elements.require_admissible(model)
        passed.append(f"admissible:{label}")
    if spec.kind in (ExperimentKind.RECTIFY, ExperimentKind.CASCADE):
        circuits.check_rectifier(spec.memristor, spec.shunt, spec.capacitor, spec.sim)
        passed.append("rectifier")
    if spec.kind is ExperimentKind.PASSIVITY and len(spec.seeds) < audit.MIN_SEEDS:
        raise ArgumentError(
            t("spec.tooFewSeeds", {"min": audit.MIN_SEEDS, "count": len(spec.seeds)}),
            {"seeds": spec.seeds},
        )
    if spec.kind is ExperimentKind.IDEAL_DRIVE and not spec.sim.band_low > 0:
        raise ArgumentError(t("spec.idealDriveBand"), {"band_low": spec.sim.band_low})
    return passed


def config_hash(spec: ExperimentSpec) -> str:
    canonical = json.dumps(spec.echo(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def decision_log(spec: ExperimentSpec) -> list[str]:
    sim = spec.sim
    log = [
        t("decisions.units", {"units": sim.units.value, "k_B": sim.k_B}),
        t("decisions.psd"),
        t("decisions.rng"),
        t("decisions.burnIn", {"fraction": sim.burn_in_fraction, "samples": sim.burn_in_samples}),
        t("decisions.blocks", {"min": sim.min_blocks}),
    ]
    if memristor_models(spec):
        log.append(t("decisions.q0"))
        log.append(t("decisions.floor", {"ratio": elements.MEMRISTANCE_FLOOR_RATIO}))
    kind = spec.kind
    if kind is ExperimentKind.EXCHANGE:
        log.append(t("decisions.exchange"))
    elif kind in (ExperimentKind.RECTIFY, ExperimentKind.CASCADE):
        log.append(t("decisions.topology", {"topology": RECTIFIER_TOPOLOGY}))
        log.append(t("decisions.integrator"))
        if kind is ExperimentKind.CASCADE:
            log.append(t("decisions.matchedLoad"))
    elif kind is ExperimentKind.PASSIVITY:
        log.append(t("decisions.verdict", {"threshold": spec.threshold}))
    elif kind is ExperimentKind.FDT_CHECK:
        log.append(t("decisions.fdtTolerance", {"tolerance": audit.FDT_TOLERANCE}))
    elif kind is ExperimentKind.IDEAL_DRIVE:
        log.append(t("decisions.idealDrive"))
    return log


# --- Per-seed work (runs in worker processes) ---


class SeedOutcome(NamedTuple):
    runs: list[dict[str, Any]]
    traces: dict[str, CircuitTrace]
    records: dict[str, NoiseRecord]


def _exchange_seed(spec: ExperimentSpec, config: SimConfig, decimation: int) -> SeedOutcome:
    outcome = SeedOutcome([], {}, {})
    branch_b = spec.branch_b
    keep = spec.output.traces
    if spec.sweep_t_a is not None:
        points = audit.exchange_sweep(
            spec.sweep_t_a, spec.branch_a, branch_b, config, decimation=decimation, keep_traces=keep
        )
    else:
        points = [audit.exchange_point(spec.branch_a, branch_b, config, decimation=decimation, keep_trace=keep)]

    for index, point in enumerate(points):
        outcome.runs.append(
            {
                "seed": config.seed,
                "t_a": point.t_a,
                "t_b": point.t_b,
                "delta_t": point.delta_t,
                **point.measured.model_dump(mode="json"),
                "z_score": _finite(point.measured.z_score),
                "predicted": point.predicted,
                "clamp_count": point.clamp_count,
            }
        )
        if point.trace is not None:
            suffix = f"-point-{index}" if spec.sweep_t_a is not None else ""
            outcome.traces[f"seed-{config.seed}{suffix}"] = point.trace

    if spec.output.raw_records:
        for label, branch, stream in (
            ("branch-a", spec.branch_a, circuits.BRANCH_A_STREAM),
            ("branch-b", branch_b, circuits.BRANCH_B_STREAM),
        ):
            if branch.has_noise_source:
                level = elements.noise_voltage_psd(branch.parameters, config.k_B)
                outcome.records[f"seed-{config.seed}-{label}"] = noise.synthesize_bandlimited_gaussian(
                    config, level, NoiseRole.VOLTAGE, stream=stream
                )
    return outcome


def _rectify_seed(spec: ExperimentSpec, config: SimConfig, decimation: int) -> SeedOutcome:
    result = circuits.run_rectifier_cell(spec.memristor, spec.shunt, spec.capacitor, config)
    run = {
        "seed": config.seed,
        **result.model_dump(mode="json", exclude={"config", "topology"}),
        "boundary_degenerate": result.boundary_degenerate,
    }
    records = {}
    if spec.output.raw_records:
        records[f"seed-{config.seed}-drive"] = circuits.norton_drive(spec.shunt, config, 0)
    return SeedOutcome([run], {}, records)


def _cascade_seed(spec: ExperimentSpec, config: SimConfig, decimation: int) -> SeedOutcome:
    # Stage i always draws substream i, so shorter cascades are prefixes of the longest.
    longest = max(spec.n_stages)
    cells = [
        circuits.run_rectifier_cell(spec.memristor, spec.shunt, spec.capacitor, config, stream=i)
        for i in range(longest)
    ]
    runs = []
    for n in spec.n_stages:
        result = circuits.cascade_from_stages(cells[:n], spec.shunt.resistance)
        runs.append({"seed": config.seed, **result.model_dump(mode="json")})
    return SeedOutcome(runs, {}, {})


def _fdt_seed(spec: ExperimentSpec, config: SimConfig, decimation: int) -> SeedOutcome:
    report = audit.check_fdt_compliance(spec.device, config, t_bath=spec.t_bath)
    return SeedOutcome([{"seed": config.seed, **report.model_dump(mode="json")}], {}, {})


def _ideal_drive_seed(spec: ExperimentSpec, config: SimConfig, decimation: int) -> SeedOutcome:
    level = spec.drive.level(config.k_B)
    drive = noise.synthesize_bandlimited_gaussian(config, level, NoiseRole.CURRENT, stream=0)
    est = circuits.run_ideal_drive(spec.memristor, drive, config)
    run = {
        "seed": config.seed,
        "psd_level": level,
        "mean_voltage": est.mean,
        "standard_error": est.standard_error,
    }
    records = {f"seed-{config.seed}-drive": drive} if spec.output.raw_records else {}
    return SeedOutcome([run], {}, records)


_SEED_HANDLERS = {
    ExperimentKind.EXCHANGE: _exchange_seed,
    ExperimentKind.RECTIFY: _rectify_seed,
    ExperimentKind.CASCADE: _cascade_seed,
    ExperimentKind.FDT_CHECK: _fdt_seed,
    ExperimentKind.IDEAL_DRIVE: _ideal_drive_seed,
}


def run_seed(spec: ExperimentSpec, seed: int, decimation: int = 16) -> SeedOutcome:
    """One (experiment, seed) pair. Module-level so worker processes can pickle it."""
    logger.info(t("runner.seed", {"name": spec.name, "seed": seed}))
    return _SEED_HANDLERS[spec.kind](spec, spec.sim.with_seed(seed), decimation)


# --- Summaries ---


def _finite(value: float) -> float | None:
    return value if math.isfinite(value) else None


def _pool(runs: Sequence[dict[str, Any]], mean_key: str, se_key: str) -> dict[str, float]:
    return audit.pool_means([r[mean_key] for r in runs], [r[se_key] for r in runs])._asdict()


def _flow_estimate(run: dict[str, Any]) -> PowerFlowEstimate:
    return PowerFlowEstimate.model_validate({key: run[key] for key in PowerFlowEstimate.model_fields})


def _exchange_summary(runs: list[dict[str, Any]]) -> dict[str, Any]:
    groups: dict[Any, list[dict[str, Any]]] = {}
    for run in runs:
        groups.setdefault(run["t_a"], []).append(run)
    points = [
        SweepPoint(
            t_a=group[0]["t_a"],
            t_b=group[0]["t_b"],
            delta_t=group[0]["delta_t"],
            measured=audit.pool_estimates([_flow_estimate(r) for r in group]),
            predicted=group[0]["predicted"],
            clamp_count=sum(r["clamp_count"] for r in group),
        )
        for group in groups.values()
    ]
    rows = []
    for point in points:
        se = point.measured.standard_error
        deviation = None
        if point.predicted is not None and se > 0:
            deviation = (point.measured.mean - point.predicted) / se
        rows.append(
            {
                "t_a": point.t_a,
                "t_b": point.t_b,
                "delta_t": point.delta_t,
                "mean": point.measured.mean,
                "standard_error": se,
                "predicted": point.predicted,
                "deviation_in_se": deviation,
            }
        )
    summary: dict[str, Any] = {
        "points": rows,
        "clamp_count": sum(p.clamp_count for p in points),
    }
    if len(points) > 1 and all(p.predicted is not None for p in points):
        summary["r_squared"] = audit.agreement_r_squared(points)
    return summary


def _cascade_summary(runs: list[dict[str, Any]]) -> dict[str, Any]:
    by_n: dict[int, list[dict[str, Any]]] = {}
    for run in runs:
        by_n.setdefault(run["n_stages"], []).append(run)
    stages = []
    for n, group in sorted(by_n.items()):
        pooled = _pool(group, "total_dc_mean", "total_dc_se")
        stages.append(
            {
                "n_stages": n,
                "total_dc_mean": pooled["mean"],
                "total_dc_se": pooled["standard_error"],
                "available_power_estimate": math.fsum(r["available_power_estimate"] for r in group) / len(group),
            }
        )
    summary: dict[str, Any] = {"stages": stages, "clamp_count": sum(r["clamp_count"] for r in runs)}
    if len(stages) > 1:
        slope = np.polyfit([s["n_stages"] for s in stages], [s["total_dc_mean"] for s in stages], 1)[0]
        summary["slope_per_stage"] = float(slope)
    return summary


def summarize(spec: ExperimentSpec, runs: list[dict[str, Any]]) -> dict[str, Any]:
    kind = spec.kind
    if kind is ExperimentKind.EXCHANGE:
        return _exchange_summary(runs)
    if kind is ExperimentKind.RECTIFY:
        return {
            **_pool(runs, "dc_voltage_mean", "dc_voltage_se"),
            "clamp_count": sum(r["clamp_count"] for r in runs),
            "boundary_degenerate": any(r["boundary_degenerate"] for r in runs),
        }
    if kind is ExperimentKind.CASCADE:
        return _cascade_summary(runs)
    if kind is ExperimentKind.FDT_CHECK:
        verdicts = {r["passed"] for r in runs}
        return {
            "all_passed": verdicts == {True},
            "stable": len(verdicts) == 1,
            "mean_measured_psd_level": math.fsum(r["measured_psd_level"] for r in runs) / len(runs),
            "reference": runs[0]["reference"],
            "fdt_device": runs[0]["fdt_device"],
        }
    if kind is ExperimentKind.IDEAL_DRIVE:
        return _pool(runs, "mean_voltage", "standard_error")
    raise ArgumentError(f"no summary for kind {kind.value!r}")


# --- Running ---


async def _run_per_seed(
    spec: ExperimentSpec, runner_config: RunnerConfig, pool: ProcessPoolExecutor | None
) -> list[SeedOutcome]:
    loop = asyncio.get_running_loop()
    job = functools.partial(run_seed, spec, decimation=runner_config.trace_decimation)
    if pool is None:
        return [await loop.run_in_executor(None, job, seed) for seed in spec.seeds]
    # gather keeps submission (seed) order whatever order workers finish in
    return list(await asyncio.gather(*(loop.run_in_executor(pool, job, seed) for seed in spec.seeds)))


async def run_experiment_async(
    spec: ExperimentSpec,
    runner_config: RunnerConfig | None = None,
    *,
    out_dir: str | os.PathLike[str] | None = None,
) -> Path:
    """Validate, run every seed, and write ``<out>/<name>/``. Returns that directory."""
    runner_config = runner_config or RunnerConfig()
    validate_spec(spec)
    root = Path(out_dir or spec.output.dir or runner_config.out_dir) / spec.name
    started = time.perf_counter()
    started_at = datetime.now(timezone.utc)
    logger.info(t("runner.starting", {"name": spec.name, "kind": spec.kind.value, "seeds": len(spec.seeds)}))

    pool = ProcessPoolExecutor(max_workers=runner_config.workers) if runner_config.workers > 1 else None
    try:
        if spec.kind is ExperimentKind.PASSIVITY:
            verdict = await asyncio.get_running_loop().run_in_executor(
                None,
                functools.partial(
                    audit.classify_passivity,
                    spec.device,
                    spec.t_bath,
                    spec.sim,
                    seeds=spec.seeds,
                    threshold=spec.threshold,
                    decimation=runner_config.trace_decimation,
                    executor=pool,
                ),
            )
            outcomes: list[SeedOutcome] = []
            runs = [{"seed": s.seed, **s.estimate.model_dump(mode="json")} for s in verdict.per_seed]
            summary = verdict.model_dump(mode="json", exclude={"per_seed"})
            summary["z_score"] = _finite(verdict.z_score)
            summary["pooled"]["z_score"] = _finite(verdict.pooled.z_score)
        else:
            outcomes = await _run_per_seed(spec, runner_config, pool)
            runs = [run for outcome in outcomes for run in outcome.runs]
            summary = summarize(spec, runs)
    finally:
        if pool is not None:
            pool.shutdown()

    result = ExperimentResult(
        kind=spec.kind,
        name=spec.name,
        units=spec.sim.units,
        config_hash=config_hash(spec),
        seeds=list(spec.seeds),
        runs=runs,
        summary=summary,
        decision_log=decision_log(spec),
        spec=spec.echo(),
    )

    saver = ResultSaver(root)
    saver.write_text(RESULT_FILE, result.model_dump_json(indent=2) + "\n")
    for outcome in outcomes:
        for label, trace in outcome.traces.items():
            saver.write_trace(f"traces/{label}.csv", trace)
        for label, record in outcome.records.items():
            saver.write_record_raw(f"records/{label}", record)

    duration = time.perf_counter() - started
    saver.write_json(
        META_FILE,
        {
            "started_at": started_at.isoformat(),
            "duration_s": round(duration, 3),
            "version": __version__,
            "python": platform.python_version(),
            "platform": platform.platform(),
            "numpy": np.__version__,
            "workers": runner_config.workers,
            "files": sorted(str(p.relative_to(root)) for p in saver.written),
        },
    )
    logger.info(t("runner.finished", {"name": spec.name, "path": str(root), "seconds": f"{duration:.1f}"}))
    return root


def run_experiment(
    spec: ExperimentSpec,
    runner_config: RunnerConfig | None = None,
    *,
    out_dir: str | os.PathLike[str] | None = None,
) -> Path:
    return asyncio.run(run_experiment_async(spec, runner_config, out_dir=out_dir))


# --- Plot data ---


def load_result(path: str | os.PathLike[str]) -> ExperimentResult:
    path = Path(path)
    try:
        return ExperimentResult.model_validate_json(path.read_text(encoding="utf-8"))
    except (OSError, ValidationError) as e:
        raise ResultFileError(t("plot.corrupt", {"path": str(path)}), {"path": str(path), "reason": str(e)}) from e


def _result_files(result_dir: Path) -> list[Path]:
    if (result_dir / RESULT_FILE).is_file():
        return [result_dir / RESULT_FILE]
    found = sorted(result_dir.glob(f"*/{RESULT_FILE}"))
    if not found:
        raise ResultFileError(t("plot.noResults", {"path": str(result_dir)}), {"path": str(result_dir)})
    return found


def emit_plot_data(result_dir: str | os.PathLike[str], out_dir: str | os.PathLike[str]) -> list[Path]:
    """CSV bundles for every result under ``result_dir``.

    - curves-<block>.csv: q, flux, memristance for each memristor model
    - exchange-flow.csv: delta_t, measured flow and SE, predicted flow
    - cascade-scaling.csv: N, total DC mean and SE, available power
    """
    written: list[Path] = []
    for path in _result_files(Path(result_dir)):
        result = load_result(path)
        try:
            spec = parse_spec(result.spec)
        except SpecParseError as e:
            raise ResultFileError(t("plot.corrupt", {"path": str(path)}), e.details) from e
        saver = ResultSaver(Path(out_dir) / result.name)

        grid = np.linspace(spec.plot.q_min, spec.plot.q_max, spec.plot.q_points)
        for label, model in memristor_models(spec):
            phi = elements.flux(model, grid)
            m = np.broadcast_to(elements.memristance(model, grid), grid.shape)
            saver.write_csv(
                f"curves-{label}.csv",
                ("q", "flux", "memristance"),
                zip(grid.tolist(), phi.tolist(), m.tolist()),
            )

        if result.kind is ExperimentKind.EXCHANGE:
            saver.write_csv(
                "exchange-flow.csv",
                ("delta_t", "measured_flow", "measured_se", "predicted_flow"),
                (
                    (p["delta_t"], p["mean"], p["standard_error"], p["predicted"])
                    for p in result.summary["points"]
                ),
            )
        elif result.kind is ExperimentKind.CASCADE:
            saver.write_csv(
                "cascade-scaling.csv",
                ("n_stages", "total_dc_mean", "total_dc_se", "available_power_estimate"),
                (
                    (s["n_stages"], s["total_dc_mean"], s["total_dc_se"], s["available_power_estimate"])
                    for s in result.summary["stages"]
                ),
            )
        written.extend(saver.written)
    logger.info(t("plot.written", {"count": len(written), "path": str(out_dir)}))
    return written
