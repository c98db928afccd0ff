"""Flat key/value run configuration.

Config files hold one ``section.key = value`` assignment per line, with ``#``
comments and blank lines ignored.  Values are coerced to int, float, or bool
where possible and kept as strings otherwise.  Command line ``--set key=value``
overrides win over file values.
"""

import os

from .errors import ConfigNotFoundError, UsageError


def coerce_value(text):
    """Best-effort typed value from a config string."""
    text = text.strip()
    low = text.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    return text


def parse_config_text(text, source="<config>"):
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if not key:
            raise UsageError(f"{source}:{lineno}: empty key")
        values[key] = coerce_value(value)
    return values


def load_config(path):
    if not os.path.exists(path):
        raise ConfigNotFoundError(f"config file not found: {path}")
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read(), source=path)


def apply_overrides(config, assignments):
    """Apply ``key=value`` strings on top of a config dict (in place)."""
    for item in assignments or ():
        if "=" not in item:
            raise UsageError(f"--set expects key=value, got {item!r}")
        key, _, value = item.partition("=")
        key = key.strip()
        if not key:
            raise UsageError(f"--set expects key=value, got {item!r}")
        config[key] = coerce_value(value)
    return config


def get(config, key, default=None):
    return config.get(key, default)


def section(config, prefix):
    """All keys under ``prefix.`` with the prefix stripped."""
    head = prefix + "."
    return {k[len(head):]: v for k, v in config.items() if k.startswith(head)}
