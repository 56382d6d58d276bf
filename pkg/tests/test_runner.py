"""Tests for spec loading, validation, result files and plot export."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import jsonschema
import pytest

from memristor_audit.config import RunnerConfig
from memristor_audit.errors import ArgumentError, InadmissibleModelError, ResultFileError, SpecParseError
from memristor_audit.models import ExperimentKind, ExperimentResult
from memristor_audit.runner import (
    META_FILE,
    RESULT_FILE,
    config_hash,
    emit_plot_data,
    load_result,
    load_spec,
    parse_spec,
    run_experiment,
    validate_spec,
    with_seeds,
)

FAST_SIM = {"n_samples": 2**14}
SCHEMA_PATH = Path(__file__).resolve().parent.parent / "schemas" / "result.schema.json"

_RESISTOR = {"kind": "thermal-resistor", "R": 1.0, "T": 1.0}
_CELL = {"memristor": {"a": 1.0, "b": 1.0, "c": 1.0}, "shunt": {"R": 1.0, "T": 1.0}, "capacitor": {"C": 50.0}}
SCHEMA_CASES = [
    {
        "kind": "exchange",
        "name": "pair",
        "seeds": [1],
        "sim": FAST_SIM,
        "branch_a": _RESISTOR,
        "branch_b": {"kind": "memristor", "a": 1.0, "b": 1.0, "c": 1.0},
    },
    {
        "kind": "exchange",
        "name": "sweep",
        "seeds": [1, 2],
        "sim": FAST_SIM,
        "sweep_t_a": [1.0, 2.0],
        "branch_a": _RESISTOR,
        "branch_b": _RESISTOR,
    },
    {"kind": "rectify", "name": "cell", "seeds": [1], "sim": FAST_SIM, **_CELL},
    {"kind": "cascade", "name": "stack", "seeds": [1], "sim": FAST_SIM, "n_stages": [1, 2], **_CELL},
    {
        "kind": "passivity",
        "name": "verdict",
        "seeds": [1, 2, 3],
        "sim": FAST_SIM,
        "device": {"kind": "memristor", "a": 1.0},
    },
    {"kind": "fdt-check", "name": "fdt", "seeds": [1], "sim": {"n_samples": 2**16}, "device": _RESISTOR},
    {"kind": "ideal-drive", "name": "drive", "seeds": [1], "sim": FAST_SIM, "memristor": {"a": 1.0, "c": 1.0}},
]


@pytest.fixture(scope="module")
def result_validator():
    schema = json.loads(SCHEMA_PATH.read_text(encoding="utf-8"))
    jsonschema.Draft202012Validator.check_schema(schema)
    return jsonschema.Draft202012Validator(schema)


def _spec(**overrides):
    data = {
        "kind": "fdt-check",
        "name": "fdt-small",
        "seeds": [1, 2],
        "sim": {"n_samples": 2**16},
        "device": {"kind": "thermal-resistor", "R": 1.0, "T": 1.0},
    }
    data.update(overrides)
    return parse_spec(data)


def _read_csv(path):
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.DictReader(f))


class TestLoading:
    def test_shipped_specs_parse_and_validate(self, specs_dir):
        paths = sorted(specs_dir.glob("*.toml")) + sorted(specs_dir.glob("*.json"))
        assert paths
        for path in paths:
            spec = load_spec(path)
            if spec.name == "inadmissible":
                continue
            assert validate_spec(spec)

    def test_every_kind_has_a_shipped_spec(self, specs_dir):
        kinds = {load_spec(p).kind for p in list(specs_dir.glob("*.toml")) + list(specs_dir.glob("*.json"))}
        assert kinds == set(ExperimentKind)

    def test_inadmissible_spec_reports_witness(self, specs_dir):
        spec = load_spec(specs_dir / "inadmissible.toml")
        with pytest.raises(InadmissibleModelError) as info:
            validate_spec(spec)
        assert info.value.exit_code == 3
        assert info.value.details["witness_q"] == pytest.approx(-2 / 3)

    def test_empty_seed_list_is_a_parse_error(self):
        with pytest.raises(SpecParseError) as info:
            _spec(seeds=[])
        assert info.value.exit_code == 2

    def test_missing_block_is_a_parse_error(self):
        with pytest.raises(SpecParseError):
            parse_spec({"kind": "exchange", "seeds": [1], "branch_a": {"kind": "thermal-resistor", "R": 1, "T": 1}})

    def test_unknown_key_is_a_parse_error(self):
        with pytest.raises(SpecParseError):
            _spec(colour="blue")

    def test_malformed_file_is_a_parse_error(self, tmp_path):
        path = tmp_path / "broken.toml"
        path.write_text('kind = "exchange\n', encoding="utf-8")
        with pytest.raises(SpecParseError):
            load_spec(path)

    def test_missing_file_is_a_parse_error(self, tmp_path):
        with pytest.raises(SpecParseError):
            load_spec(tmp_path / "absent.toml")

    def test_sweep_needs_resistor_branch(self):
        with pytest.raises(SpecParseError):
            parse_spec(
                {
                    "kind": "exchange",
                    "seeds": [1],
                    "sweep_t_a": [1.0, 2.0],
                    "branch_a": {"kind": "memristor", "a": 1.0},
                    "branch_b": {"kind": "thermal-resistor", "R": 1.0, "T": 1.0},
                }
            )

    def test_passivity_needs_three_seeds(self):
        spec = parse_spec({"kind": "passivity", "seeds": [1], "device": {"kind": "memristor", "a": 1.0}})
        with pytest.raises(ArgumentError):
            validate_spec(spec)

    def test_small_capacitor_fails_validation(self):
        spec = parse_spec(
            {
                "kind": "rectify",
                "seeds": [1],
                "memristor": {"a": 1.0},
                "shunt": {"R": 1.0, "T": 1.0},
                "capacitor": {"C": 1.0},
            }
        )
        with pytest.raises(Exception) as info:
            validate_spec(spec)
        assert info.value.exit_code == 3

    def test_seed_override(self):
        spec = with_seeds(_spec(), [5, 6, 7])
        assert spec.seeds == [5, 6, 7]
        assert spec.device == _spec().device

    def test_config_hash_tracks_content(self):
        assert config_hash(_spec()) == config_hash(_spec())
        assert config_hash(_spec()) != config_hash(_spec(seeds=[3]))
        # output paths are not part of the experiment
        assert config_hash(_spec()) == config_hash(_spec(output={"dir": "elsewhere"}))


class TestRunExperiment:
    def test_result_is_byte_identical_across_runs(self, tmp_path):
        spec = _spec()
        first = run_experiment(spec, RunnerConfig(workers=1), out_dir=tmp_path / "one")
        second = run_experiment(spec, RunnerConfig(workers=1), out_dir=tmp_path / "two")
        assert (first / RESULT_FILE).read_bytes() == (second / RESULT_FILE).read_bytes()

    def test_result_layout(self, tmp_path):
        root = run_experiment(_spec(), RunnerConfig(), out_dir=tmp_path)
        assert root == tmp_path / "fdt-small"
        result = load_result(root / RESULT_FILE)
        assert result.kind is ExperimentKind.FDT_CHECK
        assert result.units.value == "normalized"
        assert result.seeds == [1, 2]
        assert [r["seed"] for r in result.runs] == [1, 2]
        assert result.summary["all_passed"] is True
        assert result.decision_log
        meta = json.loads((root / META_FILE).read_text(encoding="utf-8"))
        assert meta["version"] == "1.0.0"
        assert RESULT_FILE in meta["files"]
        assert not list(root.glob(".*.tmp"))

    def test_result_matches_shipped_schema(self, tmp_path, specs_dir):
        schema = json.loads((specs_dir.parent / "schemas" / "result.schema.json").read_text(encoding="utf-8"))
        root = run_experiment(_spec(), RunnerConfig(), out_dir=tmp_path)
        payload = json.loads((root / RESULT_FILE).read_text(encoding="utf-8"))
        assert set(schema["required"]) == set(payload) == set(ExperimentResult.model_fields)
        assert set(schema["properties"]["spec"]["properties"]["sim"]["required"]) == set(payload["spec"]["sim"])

    @pytest.mark.parametrize("data", SCHEMA_CASES, ids=lambda d: d["name"])
    def test_every_kind_validates_against_schema(self, tmp_path, result_validator, data):
        root = run_experiment(parse_spec(data), RunnerConfig(), out_dir=tmp_path)
        payload = json.loads((root / RESULT_FILE).read_text(encoding="utf-8"))
        result_validator.validate(payload)

    def test_schema_rejects_a_run_of_the_wrong_shape(self, tmp_path, result_validator):
        root = run_experiment(_spec(), RunnerConfig(), out_dir=tmp_path)
        payload = json.loads((root / RESULT_FILE).read_text(encoding="utf-8"))
        del payload["runs"][0]["measured_psd_level"]
        with pytest.raises(jsonschema.ValidationError):
            result_validator.validate(payload)
        payload = json.loads((root / RESULT_FILE).read_text(encoding="utf-8"))
        payload["summary"]["stray"] = 1
        with pytest.raises(jsonschema.ValidationError):
            result_validator.validate(payload)

    def test_worker_pool_gives_identical_result(self, tmp_path):
        spec = _spec(seeds=[1, 2, 3])
        serial = run_experiment(spec, RunnerConfig(workers=1), out_dir=tmp_path / "serial")
        pooled = run_experiment(spec, RunnerConfig(workers=2), out_dir=tmp_path / "pooled")
        assert (serial / RESULT_FILE).read_bytes() == (pooled / RESULT_FILE).read_bytes()

    def test_exchange_with_traces_and_records(self, tmp_path):
        spec = parse_spec(
            {
                "kind": "exchange",
                "name": "gradient",
                "seeds": [4],
                "sim": FAST_SIM,
                "branch_a": {"kind": "thermal-resistor", "R": 1.0, "T": 2.0},
                "branch_b": {"kind": "thermal-resistor", "R": 1.0, "T": 1.0},
                "output": {"traces": True, "raw_records": True},
            }
        )
        root = run_experiment(spec, RunnerConfig(trace_decimation=4), out_dir=tmp_path)
        result = load_result(root / RESULT_FILE)
        run = result.runs[0]
        assert run["predicted"] == pytest.approx(0.4)
        assert run["delta_t"] == 1.0
        rows = _read_csv(root / "traces" / "seed-4.csv")
        assert len(rows) == 2**14 // 4
        assert (root / "records" / "seed-4-branch-a.f64").stat().st_size == 8 * 2**14
        header = json.loads((root / "records" / "seed-4-branch-b.json").read_text(encoding="utf-8"))
        assert header["psd_level"] == 4.0

    def test_passivity_run(self, tmp_path):
        spec = parse_spec(
            {
                "kind": "passivity",
                "name": "linear",
                "seeds": [1, 2, 3],
                "sim": FAST_SIM,
                "device": {"kind": "memristor", "a": 1.0},
            }
        )
        root = run_experiment(spec, RunnerConfig(), out_dir=tmp_path)
        result = load_result(root / RESULT_FILE)
        assert result.summary["classification"] == "requires-activity"
        assert len(result.runs) == 3
        assert "Second Law" in result.summary["definition_citation"]

    def test_validation_failure_writes_nothing(self, tmp_path, specs_dir):
        with pytest.raises(InadmissibleModelError):
            run_experiment(load_spec(specs_dir / "inadmissible.toml"), RunnerConfig(), out_dir=tmp_path)
        assert not list(tmp_path.iterdir())


class TestPlotData:
    def test_curves_follow_the_polynomial(self, tmp_path):
        spec = parse_spec(
            {
                "kind": "ideal-drive",
                "name": "cubic",
                "seeds": [1],
                "sim": FAST_SIM,
                "memristor": {"a": 1.0, "b": 1.0, "c": 1.0},
                "plot": {"q_min": -2.0, "q_max": 2.0, "q_points": 41},
            }
        )
        results = run_experiment(spec, RunnerConfig(), out_dir=tmp_path / "results")
        emit_plot_data(results, tmp_path / "plots")
        rows = _read_csv(tmp_path / "plots" / "cubic" / "curves-memristor.csv")
        assert len(rows) == 41
        for row in rows:
            q = float(row["q"])
            assert float(row["flux"]) == pytest.approx(q + q**2 + q**3, abs=1e-12)
            assert float(row["memristance"]) == pytest.approx(1 + 2 * q + 3 * q**2, abs=1e-12)

    def test_linear_curve_is_flat(self, tmp_path):
        spec = parse_spec(
            {"kind": "ideal-drive", "name": "linear", "seeds": [1], "sim": FAST_SIM, "memristor": {"a": 2.0}}
        )
        emit_plot_data(run_experiment(spec, RunnerConfig(), out_dir=tmp_path / "r"), tmp_path / "p")
        rows = _read_csv(tmp_path / "p" / "linear" / "curves-memristor.csv")
        assert {float(r["memristance"]) for r in rows} == {2.0}

    def test_sweep_table(self, tmp_path):
        spec = parse_spec(
            {
                "kind": "exchange",
                "name": "sweep",
                "seeds": [1, 2],
                "sim": FAST_SIM,
                "sweep_t_a": [1.0, 1.5, 2.0],
                "branch_a": {"kind": "thermal-resistor", "R": 1.0, "T": 1.0},
                "branch_b": {"kind": "thermal-resistor", "R": 1.0, "T": 1.0},
            }
        )
        run_experiment(spec, RunnerConfig(), out_dir=tmp_path / "r")
        emit_plot_data(tmp_path / "r", tmp_path / "p")
        rows = _read_csv(tmp_path / "p" / "sweep" / "exchange-flow.csv")
        assert [float(r["delta_t"]) for r in rows] == [0.0, 0.5, 1.0]
        assert [float(r["predicted_flow"]) for r in rows] == pytest.approx([0.0, 0.2, 0.4])

    def test_cascade_table(self, tmp_path):
        spec = parse_spec(
            {
                "kind": "cascade",
                "name": "stack",
                "seeds": [1],
                "sim": FAST_SIM,
                "n_stages": [2, 1],
                "memristor": {"a": 1.0, "b": 1.0, "c": 1.0},
                "shunt": {"R": 1.0, "T": 1.0},
                "capacitor": {"C": 50.0},
            }
        )
        root = run_experiment(spec, RunnerConfig(), out_dir=tmp_path / "r")
        result = load_result(root / RESULT_FILE)
        one, two = result.runs[1], result.runs[0]
        assert two["per_stage_dc"][0] == one["per_stage_dc"][0]
        emit_plot_data(root, tmp_path / "p")
        rows = _read_csv(tmp_path / "p" / "stack" / "cascade-scaling.csv")
        assert [int(r["n_stages"]) for r in rows] == [1, 2]

    def test_missing_results(self, tmp_path):
        with pytest.raises(ResultFileError) as info:
            emit_plot_data(tmp_path / "nothing", tmp_path / "out")
        assert info.value.exit_code == 3

    def test_corrupt_result(self, tmp_path):
        (tmp_path / "bad").mkdir()
        (tmp_path / "bad" / RESULT_FILE).write_text("{not json", encoding="utf-8")
        with pytest.raises(ResultFileError):
            emit_plot_data(tmp_path / "bad", tmp_path / "out")
