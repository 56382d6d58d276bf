"""Tests for the command-line surface: exit codes, JSON payloads and help text."""

from __future__ import annotations

import json

import pytest

from memristor_audit.cli import build_parser, main
from memristor_audit.models import (
    Capacitor,
    DriveSpec,
    ExperimentKind,
    ExperimentSpec,
    PolynomialMemristorModel,
    SimConfig,
    ThermalResistor,
)

SMALL_SPEC = """
kind = "fdt-check"
name = "cli-fdt"
seeds = [1]

[sim]
n_samples = 65536

[device]
kind = "thermal-resistor"
R = 1.0
T = 1.0
"""


def _payload(capsys):
    return json.loads(capsys.readouterr().out)


@pytest.fixture
def small_spec(tmp_path):
    path = tmp_path / "small.toml"
    path.write_text(SMALL_SPEC, encoding="utf-8")
    return path


class TestHelp:
    def test_help_lists_every_kind_and_key(self):
        text = build_parser().format_help()
        for kind in ExperimentKind:
            assert kind.value in text
        for model in (ExperimentSpec, SimConfig, ThermalResistor, PolynomialMemristorModel, Capacitor, DriveSpec):
            for name, info in model.model_fields.items():
                assert (info.alias or name) in text

    def test_subcommands(self):
        text = build_parser().format_help()
        for command in ("run", "plot", "validate", "serve", "schema"):
            assert command in text


class TestCommands:
    def test_validate_ok(self, small_spec, capsys):
        assert main(["validate", str(small_spec)]) == 0
        payload = _payload(capsys)
        assert payload["valid"] is True
        assert payload["kind"] == "fdt-check"

    def test_validate_inadmissible_exits_3(self, specs_dir, capsys):
        assert main(["validate", str(specs_dir / "inadmissible.toml")]) == 3
        error = _payload(capsys)["error"]
        assert error["code"] == "inadmissible_model"
        assert error["details"]["witness_q"] == pytest.approx(-2 / 3)

    def test_missing_spec_exits_2(self, tmp_path, capsys):
        assert main(["validate", str(tmp_path / "absent.toml")]) == 2
        assert _payload(capsys)["error"]["code"] == "spec_parse_error"

    def test_empty_seed_override_exits_2(self, small_spec, tmp_path, capsys):
        assert main(["run", str(small_spec), "--seeds", "", "--out", str(tmp_path)]) == 2
        assert "error" in _payload(capsys)

    def test_run_then_plot(self, small_spec, tmp_path, capsys):
        out = tmp_path / "results"
        assert main(["run", str(small_spec), "--seeds", "3,4", "--out", str(out)]) == 0
        payload = _payload(capsys)
        assert payload["seeds"] == [3, 4]
        result = json.loads((out / "cli-fdt" / "result.json").read_text(encoding="utf-8"))
        assert result["seeds"] == [3, 4]

        assert main(["plot", str(out), "--out", str(tmp_path / "plots")]) == 0
        assert "files" in _payload(capsys)

    def test_plot_missing_results_exits_3(self, tmp_path, capsys):
        assert main(["plot", str(tmp_path / "none"), "--out", str(tmp_path / "plots")]) == 3
        assert _payload(capsys)["error"]["code"] == "result_file_error"

    def test_schema(self, capsys):
        assert main(["schema"]) == 0
        schema = _payload(capsys)
        assert set(schema["required"]) >= {"kind", "config_hash", "runs", "summary", "decision_log"}

    def test_bad_seed_list_is_an_argparse_error(self, small_spec):
        with pytest.raises(SystemExit) as info:
            main(["run", str(small_spec), "--seeds", "1,x"])
        assert info.value.code == 2
