"""Flat `key = value` config files supplying CLI defaults.

Keys use the flag spelling (dashes allowed) and apply to every command
that has a matching option; explicit flags always win.
"""

from __future__ import annotations

from pathlib import Path
from typing import Dict, Union

from .core import FormatError

__all__ = ["load_config"]


def load_config(path: Union[str, Path]) -> Dict[str, str]:
    path = Path(path)
    out: Dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise FormatError(f"{path}: line {lineno}: expected 'key = value'")
            key, value = line.split("=", 1)
            key = key.strip().replace("-", "_")
            if not key:
                raise FormatError(f"{path}: line {lineno}: empty key")
            out[key] = value.strip()
    return out
