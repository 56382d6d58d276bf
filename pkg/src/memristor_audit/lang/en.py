"""English translations."""

TRANSLATIONS = {
    "server": {
        "starting": "Starting memristor-audit MCP server...",
        "settings": "MCP transport: stdio, workers: {workers}, result root: {out}",
        "shutdown": "Server shutting down...",
        "toolFailed": "Tool {tool} failed unexpectedly",
        "unknownTool": "Unknown tool: {tool}",
        "specMissing": "Pass either 'spec' (object) or 'specPath' (file)",
        "unknownQuantity": "Unknown reference quantity: {quantity}",
        "missingArguments": "Missing arguments: {names}",
        "tools": {
            "runExperiment": "Run an experiment spec over its seeds and write the result directory",
            "validateSpec": "Parse and validate an experiment spec without running it",
            "checkAdmissibility": "Closed-form check that M(q) = a + 2bq + 3cq^2 is non-negative for every q",
            "referencePower": "Closed-form reference powers and noise levels (normalized k_B = 1 by default)",
            "emitPlotData": "Export curve, flow and cascade CSV bundles from result directories",
        },
    },
    "cli": {
        "description": "Thermal-noise circuit simulator and Second-Law passivity auditor for memristors",
        "runHelp": "Run an experiment spec and write <out>/<name>/result.json",
        "plotHelp": "Export CSV plot data from result directories",
        "validateHelp": "Validate a spec (band, admissibility, cutoff) without running it",
        "serveHelp": "Serve the runner as an MCP tool server on stdio",
        "schemaHelp": "Print the JSON schema of result.json",
        "kindsHeading": "experiment kinds:",
        "keysHeading": "spec keys:",
        "badSeeds": "Seeds must be comma-separated integers, got '{value}'",
        "emptySeeds": "--seeds was given but lists no seeds",
        "failed": "{code}: {message}",
    },
    "spec": {
        "unreadable": "Cannot read spec {path}: {reason}",
        "malformed": "Spec {path} is not valid TOML/JSON: {reason}",
        "invalid": "Spec has {count} invalid or missing field(s)",
        "tooFewSeeds": "Passivity needs at least {min} seeds, got {count}",
        "idealDriveBand": "Ideal drive needs a band-limited source with f_L > 0",
    },
    "runner": {
        "starting": "Running {name} ({kind}) over {seeds} seed(s)",
        "seed": "{name}: seed {seed}",
        "finished": "{name} finished in {seconds}s -> {path}",
    },
    "exchange": {
        "starting": "Exchange loop a=[{a}] b=[{b}] seed={seed}",
        "finished": "Exchange flow a->b = {mean} +/- {se}",
    },
    "circuit": {
        "clamped": "Memristance hit the floor {count} time(s); the model sits on the admissibility boundary",
    },
    "rectifier": {
        "finished": "Rectifier stage {stream}: U_w = {mean} +/- {se}",
        "oracleFailed": "Reference integrator did not converge",
    },
    "fdt": {
        "compliant": "In-band level matches 4kT Re[Z]",
        "nonCompliant": "In-band level deviates from 4kT Re[Z]",
        "nonFdtDevice": "Noise-free device: no FDT noise source (measured silent: {silent})",
        "checked": "FDT check {branch}: measured {measured}, reference {reference}",
    },
    "passivity": {
        "verdict": "Passivity of {device}: {verdict} (z = {z})",
    },
    "decisions": {
        "units": "Units: {units}, k_B = {k_B}",
        "psd": "All PSDs are one-sided per unit frequency; a flat level S carries variance S (f_H - f_L)",
        "rng": "Noise from PCG64 substreams keyed by (seed, stream, role); no wall-clock seeding",
        "burnIn": "Burn-in: first {fraction} of each record ({samples} samples) discarded",
        "blocks": "Standard errors from block means, block length ceil(10 fs / f_L), at least {min} blocks",
        "q0": "Memristor charge starts at q0 (default 0)",
        "floor": "Memristance floored at {ratio} * a while solving; floor hits are counted",
        "exchange": "Flow a->b is the mean of V I at the shared node, V = R_b I + u_b",
        "topology": "Rectifier topology: {topology}",
        "integrator": "Rectifier node solved backward-Euler with M frozen per step; charge by trapezoid",
        "matchedLoad": "Available power uses a matched load equal to N shunt resistances",
        "verdict": "requires-activity when z > {threshold} and the flow sign agrees on every seed",
        "fdtTolerance": "FDT compliance tolerance: {tolerance} relative on the in-band level",
        "idealDrive": "Ideal drive: charge is the trapezoidal integral of the prescribed current",
    },
    "plot": {
        "noResults": "No result.json under {path}",
        "corrupt": "Result file {path} is missing or corrupt",
        "written": "Wrote {count} plot file(s) under {path}",
    },
    "saver": {
        "saved": "Saved {path}",
    },
}
