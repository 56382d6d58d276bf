"""MCP server core - registers audit tools and handles the MCP protocol."""

from __future__ import annotations

import asyncio
import json
import logging
import os
import signal
from typing import Any

from mcp.server import Server
from mcp.server.stdio import stdio_server
from mcp.types import TextContent, Tool

from .config import RunnerConfig
from .errors import ArgumentError, AuditError
from .lang import init_from_env, t
from .models import PolynomialMemristorModel
from .runner import emit_plot_data, load_spec, parse_spec, run_experiment_async, validate_spec, with_seeds
from .sim import audit, elements

logger = logging.getLogger(__name__)

_SPEC_INPUT = {
    "spec": {
        "type": "object",
        "description": "Experiment spec as an object (same keys as a spec file)",
    },
    "specPath": {
        "type": "string",
        "description": "Path to a TOML or JSON spec file (used when spec is absent)",
    },
}

# reference_power quantities and the arguments each one reads
_REFERENCES = {
    "exchange": ("R", "T_a", "T_b"),
    "loop": ("R_a", "T_a", "R_b", "T_b"),
    "memristor_absorption": ("T",),
    "fdt_voltage_psd": ("R", "T"),
    "norton_current_psd": ("R", "T"),
    "resistor_noise_power": ("R", "T"),
}


class MCPAuditServer:
    """Stdio MCP server exposing the experiment runner and closed-form references."""

    def __init__(self, config: RunnerConfig | None = None):
        self.config = config or RunnerConfig()
        init_from_env()
        self.mcp = Server("memristor-audit")
        self._register_handlers()

    def _register_handlers(self) -> None:
        @self.mcp.list_tools()
        async def list_tools() -> list[Tool]:
            return [
                Tool(
                    name="run_experiment",
                    description=t("server.tools.runExperiment"),
                    inputSchema={
                        "type": "object",
                        "properties": {
                            **_SPEC_INPUT,
                            "seeds": {
                                "type": "array",
                                "items": {"type": "integer", "minimum": 0},
                                "description": "Override the spec's seed list",
                            },
                            "outDir": {
                                "type": "string",
                                "description": f"Result root (default: {self.config.out_dir})",
                            },
                        },
                    },
                ),
                Tool(
                    name="validate_spec",
                    description=t("server.tools.validateSpec"),
                    inputSchema={"type": "object", "properties": dict(_SPEC_INPUT)},
                ),
                Tool(
                    name="check_admissibility",
                    description=t("server.tools.checkAdmissibility"),
                    inputSchema={
                        "type": "object",
                        "properties": {
                            "a": {"type": "number", "description": "Linear coefficient"},
                            "b": {"type": "number", "description": "Quadratic coefficient", "default": 0},
                            "c": {"type": "number", "description": "Cubic coefficient", "default": 0},
                        },
                        "required": ["a"],
                    },
                ),
                Tool(
                    name="reference_power",
                    description=t("server.tools.referencePower"),
                    inputSchema={
                        "type": "object",
                        "properties": {
                            "quantity": {"type": "string", "enum": sorted(_REFERENCES)},
                            "R": {"type": "number"},
                            "R_a": {"type": "number"},
                            "R_b": {"type": "number"},
                            "T": {"type": "number"},
                            "T_a": {"type": "number"},
                            "T_b": {"type": "number"},
                            "f_L": {"type": "number", "default": 0.05},
                            "f_H": {"type": "number", "default": 0.45},
                            "k_B": {"type": "number", "default": 1.0},
                        },
                        "required": ["quantity"],
                    },
                ),
                Tool(
                    name="emit_plot_data",
                    description=t("server.tools.emitPlotData"),
                    inputSchema={
                        "type": "object",
                        "properties": {
                            "resultDir": {"type": "string", "description": "A result directory or a root of them"},
                            "outDir": {"type": "string", "description": "Where the CSV bundles go"},
                        },
                        "required": ["resultDir", "outDir"],
                    },
                ),
            ]

        @self.mcp.call_tool()
        async def call_tool(name: str, arguments: dict[str, Any]) -> list[TextContent]:
            try:
                result = await self._dispatch_tool(name, arguments or {})
            except AuditError as e:
                result = e.to_payload()
            except Exception as e:
                logger.exception(t("server.toolFailed", {"tool": name}))
                result = {"error": {"code": "internal_error", "message": str(e), "details": {}}}
            return [TextContent(type="text", text=json.dumps(result, ensure_ascii=False))]

    def _spec_from(self, args: dict[str, Any]):
        if args.get("spec") is not None:
            spec = parse_spec(args["spec"])
        elif args.get("specPath"):
            spec = load_spec(args["specPath"])
        else:
            raise ArgumentError(t("server.specMissing"))
        if args.get("seeds"):
            spec = with_seeds(spec, args["seeds"])
        return spec

    async def _dispatch_tool(self, name: str, args: dict[str, Any]) -> dict[str, Any]:
        if name == "run_experiment":
            spec = self._spec_from(args)
            root = await run_experiment_async(spec, self.config, out_dir=args.get("outDir"))
            result = json.loads((root / "result.json").read_text(encoding="utf-8"))
            return {"result_dir": str(root), "config_hash": result["config_hash"], "summary": result["summary"]}

        elif name == "validate_spec":
            spec = self._spec_from(args)
            return {"valid": True, "kind": spec.kind.value, "checks": validate_spec(spec)}

        elif name == "check_admissibility":
            model = PolynomialMemristorModel(a=args["a"], b=args.get("b", 0.0), c=args.get("c", 0.0))
            report = elements.check_nonnegativity(model)
            return report.model_dump(mode="json")

        elif name == "reference_power":
            return {"quantity": args.get("quantity"), "value": self._reference(args)}

        elif name == "emit_plot_data":
            paths = emit_plot_data(args["resultDir"], args["outDir"])
            return {"files": [str(p) for p in paths], "count": len(paths)}

        else:
            raise ArgumentError(t("server.unknownTool", {"tool": name}))

    @staticmethod
    def _reference(args: dict[str, Any]) -> float:
        quantity = args.get("quantity")
        if quantity not in _REFERENCES:
            raise ArgumentError(t("server.unknownQuantity", {"quantity": quantity}), {"known": sorted(_REFERENCES)})
        missing = [key for key in _REFERENCES[quantity] if key not in args]
        if missing:
            raise ArgumentError(t("server.missingArguments", {"names": ", ".join(missing)}))
        f_L, f_H, k_B = args.get("f_L", 0.05), args.get("f_H", 0.45), args.get("k_B", 1.0)

        if quantity == "exchange":
            return audit.expected_exchange_power(args["R"], args["T_a"], args["T_b"], f_L, f_H, k_B)
        if quantity == "loop":
            return audit.expected_loop_power(args["R_a"], args["T_a"], args["R_b"], args["T_b"], f_L, f_H, k_B)
        if quantity == "memristor_absorption":
            return audit.expected_memristor_absorption(args["T"], f_L, f_H, k_B)
        if quantity == "fdt_voltage_psd":
            return audit.fdt_reference_psd(args["R"], args["T"], k_B)
        if quantity == "norton_current_psd":
            return audit.norton_reference_psd(args["R"], args["T"], k_B)
        return audit.expected_resistor_noise_power(args["R"], args["T"], f_L, f_H, k_B)

    async def run(self) -> None:
        """Run the MCP server on stdio."""
        logger.info(t("server.starting"))
        logger.info(t("server.settings", {"workers": self.config.workers, "out": self.config.out_dir}))

        loop = asyncio.get_running_loop()
        for sig in (signal.SIGINT, signal.SIGTERM):
            loop.add_signal_handler(sig, self._shutdown_and_exit)

        try:
            async with stdio_server() as (read_stream, write_stream):
                await self.mcp.run(
                    read_stream,
                    write_stream,
                    self.mcp.create_initialization_options(),
                )
        except asyncio.CancelledError:
            pass

    def _shutdown_and_exit(self) -> None:
        """Re-raise SIGINT with the default handler.

        stdio_server reads stdin in a blocking thread that task cancellation
        cannot interrupt, so the process is ended by the OS instead.
        """
        logger.info(t("server.shutdown"))
        signal.signal(signal.SIGINT, signal.SIG_DFL)
        os.kill(os.getpid(), signal.SIGINT)
