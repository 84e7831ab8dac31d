"""Plain-text ``key = value`` files used for topologies and run configs.

Grammar, one entry per line::

    # comment
    key = value        # trailing comments are allowed

Keys are identifiers (letters, digits, ``_``, ``-``). Values are parsed as
JSON when possible (numbers, lists, ``true``/``false``/``null``) and fall back
to a bare string otherwise. Whitespace around keys, values and inside JSON
lists is ignored. A key may appear only once.
"""

from __future__ import annotations

import json
import re
from pathlib import Path
from typing import Any

from .errors import ConfigError

_KEY = re.compile(r"^[A-Za-z_][A-Za-z0-9_\-]*$")


def parse_value(text: str) -> Any:
    text = text.strip()
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def loads(text: str) -> dict[str, Any]:
    out: dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not _KEY.match(key):
            raise ConfigError(f"line {lineno}: bad key {key!r}")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        if not value:
            raise ConfigError(f"line {lineno}: empty value for {key!r}")
        out[key] = parse_value(value)
    return out


def load(path: str | Path) -> dict[str, Any]:
    return loads(Path(path).read_text())


def dumps(entries: dict[str, Any]) -> str:
    lines = []
    for key, value in entries.items():
        if value is None:
            continue
        if isinstance(value, str):
            lines.append(f"{key} = {value}")
        else:
            lines.append(f"{key} = {json.dumps(value)}")
    return "\n".join(lines) + "\n"
