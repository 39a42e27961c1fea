"""Canonical JSON reports and run manifests.

Canonical form: keys sorted, two-space indent, integers bare, non-integral
rationals as ``"p/q"`` strings, floats with 12 significant digits.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import tempfile
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path
from typing import Any, Mapping

from . import __version__


def canonical(value: Any) -> Any:
    """Convert ``value`` into plain JSON types following the canonical rules."""
    if isinstance(value, bool) or value is None or isinstance(value, str):
        return value
    if isinstance(value, int):
        return int(value)
    if isinstance(value, Fraction):
        return value.numerator if value.denominator == 1 else f"{value.numerator}/{value.denominator}"
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"cannot emit non-finite number {value}")
        return _Float(value)
    if isinstance(value, Mapping):
        return {str(k): canonical(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [canonical(v) for v in value]
    if hasattr(value, "item"):  # numpy scalars
        return canonical(value.item())
    raise TypeError(f"cannot emit {type(value).__name__}")


class _Float(float):
    def __repr__(self) -> str:
        text = f"{float(self):.12g}"
        if "e" not in text and "." not in text and "inf" not in text:
            text += ".0"
        return text


def dumps(doc: Any) -> str:
    return _encode(canonical(doc), 0) + "\n"


def _encode(v: Any, depth: int) -> str:
    pad, inner = "  " * depth, "  " * (depth + 1)
    if isinstance(v, dict):
        if not v:
            return "{}"
        items = [f"{inner}{json.dumps(k)}: {_encode(v[k], depth + 1)}" for k in sorted(v)]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(v, list):
        if not v:
            return "[]"
        if all(not isinstance(x, (dict, list)) for x in v):
            return "[" + ", ".join(_encode(x, depth + 1) for x in v) + "]"
        return "[\n" + ",\n".join(inner + _encode(x, depth + 1) for x in v) + "\n" + pad + "]"
    if isinstance(v, _Float):
        return repr(v)
    return json.dumps(v)


def emit_report(doc: Any, path: str | os.PathLike) -> None:
    """Write ``doc`` canonically to ``path`` via a temp file and rename."""
    text = dumps(doc)
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def sha256_file(path: str | os.PathLike) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def sha256_doc(doc: Any) -> str:
    return hashlib.sha256(dumps(doc).encode()).hexdigest()


def manifest(subcommand: str, inputs: Mapping[str, str | os.PathLike], options: Mapping[str, Any],
             timestamp: bool = True) -> dict:
    return {
        "tool": "ringmap",
        "version": __version__,
        "subcommand": subcommand,
        "inputs": {name: sha256_file(p) for name, p in sorted(inputs.items())},
        "options": dict(options),
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds") if timestamp else None,
    }
