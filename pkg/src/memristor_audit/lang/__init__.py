"""Message catalog for log lines, CLI help and error text."""

from __future__ import annotations

import os
import re
from typing import Any

AVAILABLE_LANGUAGES = ["en"]
DEFAULT_LANGUAGE = "en"

_current_language: str = DEFAULT_LANGUAGE
_language_data: dict[str, Any] | None = None


def set_language(lang: str) -> None:
    global _current_language, _language_data
    if lang in AVAILABLE_LANGUAGES:
        _current_language = lang
        _language_data = None


def _load_language_data() -> dict[str, Any]:
    global _language_data
    if _language_data is not None:
        return _language_data

    from . import en as lang_module

    _language_data = lang_module.TRANSLATIONS
    return _language_data


def t(key: str, params: dict[str, Any] | None = None) -> str:
    """Look up a dotted key and interpolate ``{name}`` placeholders.

    Usage: t('exchange.finished', {'mean': 0.4, 'se': 0.001})
    Unknown keys come back unchanged so a missing entry never hides an error.
    """
    data = _load_language_data()

    value: Any = data
    for part in key.split("."):
        if isinstance(value, dict) and part in value:
            value = value[part]
        else:
            return key

    if not isinstance(value, str):
        return key

    if params:
        value = re.sub(
            r"\{(\w+)\}",
            lambda m: str(params.get(m.group(1), m.group(0))),
            value,
        )
    return value


def init_from_env() -> None:
    """Pick the catalog language from MEMRISTOR_AUDIT_LANGUAGE (falls back to en)."""
    lang = os.environ.get("MEMRISTOR_AUDIT_LANGUAGE", DEFAULT_LANGUAGE).split(".")[0]
    set_language(lang if lang in AVAILABLE_LANGUAGES else DEFAULT_LANGUAGE)
