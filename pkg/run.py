"""memristor-audit entry point.

Usage:
    uv run python run.py run specs/exchange_gradient.toml
    uv run python run.py serve
"""

from __future__ import annotations

import os
import sys

# Ensure the src directory is on the path so memristor_audit can be imported
# when running this file directly (without pip install).
sys.path.insert(0, os.path.join(os.path.dirname(__file__), "src"))

from memristor_audit.cli import main

if __name__ == "__main__":
    sys.exit(main())
