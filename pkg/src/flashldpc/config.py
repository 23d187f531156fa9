"""Tiny key/value config format shared by the model, code and sim loaders.

Files are plain text, one ``key = value`` pair per line, ``#`` comments,
blank lines ignored.  Values keep their raw string form; callers convert.
"""

import os


def parse_kv_text(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines into a dict. Raises on malformed lines."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        if not key:
            raise ValueError(f"line {lineno}: empty key")
        if key in out:
            raise ValueError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value.strip()
    return out


def load_kv(path: str | os.PathLike) -> dict[str, str]:
    with open(path, "r", encoding="utf-8") as f:
        return parse_kv_text(f.read())


def format_kv(pairs: dict[str, object], header: str | None = None) -> str:
    lines = [] if header is None else [f"# {header}"]
    lines.extend(f"{k} = {v}" for k, v in pairs.items())
    return "\n".join(lines) + "\n"


def parse_bool(value: str) -> bool:
    v = value.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {value!r}")


def parse_float_list(value: str) -> tuple[float, ...]:
    items = [s for s in (part.strip() for part in value.split(",")) if s]
    if not items:
        raise ValueError("empty list")
    return tuple(float(s) for s in items)
