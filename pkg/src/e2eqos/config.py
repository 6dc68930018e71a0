"""Flat dotted-key run configuration files.

Format: one `key = value` pair per line, `#` starts a comment, blank lines
ignored. Keys are dotted paths like `run.mu` or `schedule.cap`; values are
scalars or space-separated lists parsed by the typed accessors. Every lookup
is tracked so a config with unknown keys can be rejected with the offending
names spelled out.
"""

from __future__ import annotations

from typing import Dict, List, Optional


class ConfigFileError(ValueError):
    """Malformed config content; the message names the offending key/line."""


class Config:
    def __init__(self, raw: Dict[str, str], source: str = "<config>"):
        self.raw = dict(raw)
        self.source = source
        self._used = set()

    # -- typed accessors ----------------------------------------------------

    def _fetch(self, key: str, default):
        self._used.add(key)
        if key in self.raw:
            return self.raw[key]
        if default is _REQUIRED:
            raise ConfigFileError(f"{self.source}: missing required key '{key}'")
        return default

    def str_(self, key: str, default=None) -> Optional[str]:
        val = self._fetch(key, default)
        return val if val is None else str(val)

    def float_(self, key: str, default=None) -> Optional[float]:
        val = self._fetch(key, default)
        if val is None or isinstance(val, float):
            return val
        try:
            return float(val)
        except ValueError:
            raise ConfigFileError(f"{self.source}: key '{key}': '{val}' is not a number") from None

    def int_(self, key: str, default=None) -> Optional[int]:
        val = self._fetch(key, default)
        if val is None or isinstance(val, int):
            return val
        try:
            return int(str(val), 0)
        except ValueError:
            raise ConfigFileError(f"{self.source}: key '{key}': '{val}' is not an integer") from None

    def bool_(self, key: str, default=None) -> Optional[bool]:
        val = self._fetch(key, default)
        if val is None or isinstance(val, bool):
            return val
        lowered = str(val).strip().lower()
        if lowered in ("true", "yes", "on", "1"):
            return True
        if lowered in ("false", "no", "off", "0"):
            return False
        raise ConfigFileError(f"{self.source}: key '{key}': '{val}' is not a boolean")

    def floats(self, key: str, default=None) -> Optional[List[float]]:
        val = self._fetch(key, default)
        if val is None or isinstance(val, list):
            return val
        try:
            return [float(tok) for tok in str(val).split()]
        except ValueError:
            raise ConfigFileError(
                f"{self.source}: key '{key}': '{val}' is not a list of numbers"
            ) from None

    # -- bookkeeping ----------------------------------------------------------

    def override(self, key: str, value):
        """Command-line override; wins over the file content."""
        self.raw[key] = str(value)

    def reject_unknown(self):
        unknown = sorted(set(self.raw) - self._used)
        if unknown:
            raise ConfigFileError(
                f"{self.source}: unknown config key(s): {', '.join(unknown)}"
            )

    def echo(self) -> Dict[str, str]:
        return dict(sorted(self.raw.items()))


_REQUIRED = object()
REQUIRED = _REQUIRED


def parse_config_text(text: str, source: str = "<config>") -> Config:
    raw: Dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigFileError(f"{source}:{lineno}: expected 'key = value', got '{stripped}'")
        key, value = stripped.split("=", 1)
        key = key.strip()
        value = value.strip()
        if not key:
            raise ConfigFileError(f"{source}:{lineno}: empty key")
        if key in raw:
            raise ConfigFileError(f"{source}:{lineno}: duplicate key '{key}'")
        raw[key] = value
    return Config(raw, source=source)


def load_config(path: str) -> Config:
    with open(path, "r", encoding="utf-8") as handle:
        return parse_config_text(handle.read(), source=str(path))
