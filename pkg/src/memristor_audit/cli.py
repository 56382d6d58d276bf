"""Command-line entry point.

Usage:
    memristor-audit run specs/exchange_gradient.toml --workers 4
    memristor-audit validate specs/passivity_linear.toml
    memristor-audit plot results/exchange-gradient --out plots
    memristor-audit serve
"""

from __future__ import annotations

import argparse
import asyncio
import json
import logging
import sys
from collections.abc import Sequence

from pydantic import BaseModel

from . import __version__
from .config import RunnerConfig
from .errors import AuditError, SpecParseError
from .lang import init_from_env, t
from .models import (
    BranchKind,
    Capacitor,
    DriveSpec,
    ExperimentKind,
    ExperimentResult,
    ExperimentSpec,
    OutputSpec,
    PlotSpec,
    PolynomialMemristorModel,
    REQUIRED_BLOCKS,
    SimConfig,
    ThermalResistor,
)
from .runner import emit_plot_data, load_spec, run_experiment, validate_spec, with_seeds

logger = logging.getLogger(__name__)


def _keys(model: type[BaseModel]) -> str:
    return ", ".join(info.alias or name for name, info in model.model_fields.items())


def spec_reference() -> str:
    """Help epilog listing every experiment kind and every spec key."""
    lines = [t("cli.kindsHeading")]
    for kind in ExperimentKind:
        lines.append(f"  {kind.value:<12} needs: {', '.join(REQUIRED_BLOCKS[kind])}")
    lines.append("")
    lines.append(t("cli.keysHeading"))
    blocks = [
        ("(top level)", _keys(ExperimentSpec)),
        ("[sim]", _keys(SimConfig)),
        (
            "[branch_a] [branch_b] [device]",
            f"kind ({' | '.join(k.value for k in BranchKind)}), "
            f"{_keys(ThermalResistor)} | {_keys(PolynomialMemristorModel)}",
        ),
        ("[memristor]", _keys(PolynomialMemristorModel)),
        ("[shunt]", _keys(ThermalResistor)),
        ("[capacitor]", _keys(Capacitor)),
        ("[drive]", _keys(DriveSpec)),
        ("[output]", _keys(OutputSpec)),
        ("[plot]", _keys(PlotSpec)),
    ]
    lines.extend(f"  {block:<32} {keys}" for block, keys in blocks)
    return "\n".join(lines)


def _seed_list(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(t("cli.badSeeds", {"value": text})) from e


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="memristor-audit",
        description=t("cli.description"),
        epilog=spec_reference(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument(
        "--log-level",
        default=None,
        help="Logging level (default: INFO, overrides MEMRISTOR_AUDIT_LOG_LEVEL env)",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser(
        "run",
        help=t("cli.runHelp"),
        epilog=spec_reference(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    run.add_argument("spec", help="Spec file (.toml or .json)")
    run.add_argument("--seeds", type=_seed_list, default=None, help="Comma-separated seeds, replaces the spec's list")
    run.add_argument(
        "--workers",
        type=int,
        default=None,
        help="Worker processes (default: 1, overrides MEMRISTOR_AUDIT_WORKERS env)",
    )
    run.add_argument(
        "--out",
        default=None,
        help="Result root (default: results, overrides [output].dir and MEMRISTOR_AUDIT_OUT env)",
    )

    plot = commands.add_parser("plot", help=t("cli.plotHelp"))
    plot.add_argument("result_dir", help="One result directory or a root holding several")
    plot.add_argument("--out", required=True, help="Directory for the CSV bundles")

    validate = commands.add_parser(
        "validate",
        help=t("cli.validateHelp"),
        epilog=spec_reference(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    validate.add_argument("spec", help="Spec file (.toml or .json)")

    commands.add_parser("serve", help=t("cli.serveHelp"))
    commands.add_parser("schema", help=t("cli.schemaHelp"))
    return parser


def configure_logging(level: str) -> None:
    """One stderr handler; stdout is reserved for JSON and the MCP transport."""
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(name)s: %(message)s"))
    root = logging.getLogger()
    root.handlers[:] = [handler]
    root.setLevel(getattr(logging, level.upper(), logging.INFO))


def _emit(payload: dict) -> None:
    print(json.dumps(payload, indent=2, sort_keys=True))


def _command_run(args: argparse.Namespace, config: RunnerConfig) -> int:
    if args.workers is not None:
        config.workers = max(1, args.workers)
    spec = load_spec(args.spec)
    if args.seeds is not None:
        if not args.seeds:
            raise SpecParseError(t("cli.emptySeeds"))
        spec = with_seeds(spec, args.seeds)
    root = run_experiment(spec, config, out_dir=args.out)
    _emit({"result_dir": str(root), "kind": spec.kind.value, "seeds": spec.seeds})
    return 0


def _command_validate(args: argparse.Namespace) -> int:
    spec = load_spec(args.spec)
    _emit({"valid": True, "kind": spec.kind.value, "checks": validate_spec(spec)})
    return 0


def _command_plot(args: argparse.Namespace) -> int:
    paths = emit_plot_data(args.result_dir, args.out)
    _emit({"files": [str(p) for p in paths]})
    return 0


def _command_serve(config: RunnerConfig) -> int:
    from .server import MCPAuditServer

    server = MCPAuditServer(config)
    try:
        asyncio.run(server.run())
    except (KeyboardInterrupt, SystemExit):
        pass
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    init_from_env()
    args = build_parser().parse_args(argv)

    # CLI args override env vars
    config = RunnerConfig()
    if args.log_level is not None:
        config.log_level = args.log_level.upper()
    configure_logging(config.log_level)

    try:
        if args.command == "run":
            return _command_run(args, config)
        if args.command == "validate":
            return _command_validate(args)
        if args.command == "plot":
            return _command_plot(args)
        if args.command == "serve":
            return _command_serve(config)
        print(json.dumps(ExperimentResult.model_json_schema(), indent=2))
        return 0
    except AuditError as e:
        logger.error(t("cli.failed", {"code": e.code, "message": e.message}))
        _emit(e.to_payload())
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
