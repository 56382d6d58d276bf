"""Allow ``python -m memristor_audit``."""

import sys

from .cli import main

sys.exit(main())
