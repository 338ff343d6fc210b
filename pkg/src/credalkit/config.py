"""Flat ``key = value`` run configuration files.

A deliberately rigid format: one key per line, ``#`` comments, no
sections, and unknown keys are hard errors so a typo cannot silently
fall back to a default mid-ablation.
"""

from __future__ import annotations

__all__ = ["ConfigError", "KNOWN_KEYS", "parse_config"]


class ConfigError(ValueError):
    """Malformed configuration file or unknown/invalid key."""


def _int_list(text: str):
    return tuple(int(part) for part in text.split(",") if part.strip())


# key -> coercion from string
KNOWN_KEYS = {
    "epochs": int,
    "batch_size": int,
    "learning_rate": float,
    "lr_drop_epoch": int,
    "lr_drop_factor": float,
    "temperature": float,
    "optimizer": str,
    "seed": int,
    "weight_seed": int,
    "hidden_dims": _int_list,
    "activation": str,
    "members": int,
    "ece_bins": int,
}


def parse_config(path) -> dict:
    """Parse a config file into a dict of typed values."""
    try:
        with open(path, "r", encoding="ascii") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    values: dict = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, text = line.partition("=")
        key = key.strip()
        text = text.strip()
        if key not in KNOWN_KEYS:
            raise ConfigError(
                f"{path}:{lineno}: unknown key {key!r} (known: {sorted(KNOWN_KEYS)})"
            )
        if key in values:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        try:
            values[key] = KNOWN_KEYS[key](text)
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key!r}: {exc}") from None
    return values
