"""memristor-audit - thermal-noise circuit simulator and Second-Law passivity auditor."""

__version__ = "1.0.0"
