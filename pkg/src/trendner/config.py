"""Flat ``key = value`` config files shared by the generator and the runner."""

from __future__ import annotations

from pathlib import Path


class ConfigError(Exception):
    """Bad configuration: unknown keys, unparseable or out-of-range values."""


def load_kv_file(path: str | Path) -> dict[str, str]:
    """Parse a UTF-8 ``key = value`` file.

    Blank lines and ``#`` comments are ignored; later keys override earlier
    ones. Values keep internal whitespace but are stripped at the ends.
    """
    entries: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}: line {lineno}: expected 'key = value', got {line!r}")
        key, _, value = stripped.partition("=")
        key = key.strip()
        if not key:
            raise ConfigError(f"{path}: line {lineno}: empty key")
        entries[key] = value.strip()
    return entries


def parse_int(raw: str, key: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {raw!r}") from None


def parse_float(raw: str, key: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {raw!r}") from None


def parse_int_list(raw: str, key: str) -> tuple[int, ...]:
    """Comma-separated integers, e.g. ``1,2,3``."""
    parts = [p.strip() for p in raw.split(",") if p.strip()]
    if not parts:
        raise ConfigError(f"{key}: expected at least one integer")
    return tuple(parse_int(p, key) for p in parts)


def parse_year_range(raw: str, key: str) -> tuple[int, ...]:
    """Either ``2014-2019`` (inclusive) or a comma-separated list of years."""
    raw = raw.strip()
    if "-" in raw and "," not in raw:
        lo_s, _, hi_s = raw.partition("-")
        lo, hi = parse_int(lo_s.strip(), key), parse_int(hi_s.strip(), key)
        if hi < lo:
            raise ConfigError(f"{key}: descending range {raw!r}")
        return tuple(range(lo, hi + 1))
    return parse_int_list(raw, key)
