"""Process-level configuration for the experiment runner."""

from __future__ import annotations

import os
from dataclasses import dataclass, field


@dataclass
class RunnerConfig:
    """Runner settings loaded from environment variables.

    Experiment physics never lives here; that belongs in the spec file.
    """

    # Parallelism
    workers: int = field(
        default_factory=lambda: int(os.environ.get("MEMRISTOR_AUDIT_WORKERS", "1"))
    )

    # Output
    out_dir: str = field(
        default_factory=lambda: os.environ.get("MEMRISTOR_AUDIT_OUT", "results")
    )

    # Logging
    log_level: str = field(
        default_factory=lambda: os.environ.get("MEMRISTOR_AUDIT_LOG_LEVEL", "INFO").upper()
    )

    # Stored traces keep every n-th sample; statistics always use full rate
    trace_decimation: int = field(
        default_factory=lambda: int(os.environ.get("MEMRISTOR_AUDIT_TRACE_DECIMATION", "16"))
    )

    def __post_init__(self) -> None:
        self.workers = max(1, self.workers)
        self.trace_decimation = max(1, self.trace_decimation)
