"""Deterministic text serialization: 17-significant-digit floats, JSON, atomic writes.

Every artifact the package writes (CSV datasets, checkpoints, metrics
reports) goes through these helpers so that identical values always produce
identical bytes.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path

from .errors import ConfigError


def fmt17(x: float) -> str:
    """Decimal form with 17 significant digits; round-trips any finite float64."""
    x = float(x)
    if not math.isfinite(x):
        raise ConfigError(f"cannot serialize non-finite value {x}")
    s = format(x, ".17g")
    if "." not in s and "e" not in s and "E" not in s:
        s += ".0"  # keep float-ness through a JSON round-trip
    return s


def dump_json(obj, sort_keys: bool = False) -> str:
    """Render JSON with fmt17 floats; key order is insertion order unless sorted."""
    parts: list[str] = []
    _render(obj, sort_keys, parts)
    return "".join(parts)


def _render(obj, sort_keys: bool, out: list[str]) -> None:
    if isinstance(obj, dict):
        items = sorted(obj.items()) if sort_keys else list(obj.items())
        out.append("{")
        for i, (key, value) in enumerate(items):
            if not isinstance(key, str):
                raise ConfigError(f"JSON object keys must be strings, got {key!r}")
            if i:
                out.append(",")
            out.append(json.dumps(key))
            out.append(":")
            _render(value, sort_keys, out)
        out.append("}")
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        for i, value in enumerate(obj):
            if i:
                out.append(",")
            _render(value, sort_keys, out)
        out.append("]")
    elif isinstance(obj, bool) or obj is None:
        out.append(json.dumps(obj))
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, float):
        out.append(fmt17(obj))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    else:
        raise ConfigError(f"cannot serialize value of type {type(obj).__name__}")


def atomic_write_text(path: str | Path, text: str) -> None:
    """Write UTF-8 text via a temp file + rename so readers never see partials."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
