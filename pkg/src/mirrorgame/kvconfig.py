"""Plain-text `key = value` config files (comments with #, blank lines ok)."""

from __future__ import annotations

from pathlib import Path

from .errors import ParseError

__all__ = ["parse_kv_text", "load_kv", "write_kv"]


def parse_kv_text(text: str, source: str = "<config>") -> dict[str, str]:
    out: dict[str, str] = {}
    for i, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"{source}: expected 'key = value'", line=i)
        key, _, value = line.partition("=")
        key = key.strip()
        if not key:
            raise ParseError(f"{source}: empty key", line=i)
        out[key] = value.strip()
    return out


def load_kv(path) -> dict[str, str]:
    return parse_kv_text(Path(path).read_text(encoding="utf-8"), str(path))


def write_kv(path, values: dict) -> None:
    lines = [f"{k} = {v}" for k, v in values.items()]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
