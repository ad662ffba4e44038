"""Flat key = value configuration files with section-prefixed keys.

Precedence when resolving an option: command-line value, then config-file
value, then the built-in default.  Every command echoes its fully resolved
configuration next to its outputs.
"""

from pathlib import Path


def parse_config_file(path) -> dict:
    """Parse ``section.key = value`` lines; '#' starts a comment."""
    values = {}
    text = Path(path).read_text()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        values[key.strip()] = value.strip()
    return values


def coerce(value: str, like):
    """Cast a config-file string to the type of the default value."""
    if isinstance(like, bool):
        lowered = value.lower()
        if lowered in ("1", "true", "yes", "on"):
            return True
        if lowered in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"cannot interpret {value!r} as a boolean")
    if isinstance(like, int):
        return int(value)
    if isinstance(like, float):
        return float(value)
    return value


def resolve(key, cli_value, file_values, default):
    """CLI beats file beats default; file strings are coerced."""
    if cli_value is not None:
        return cli_value
    if key in file_values:
        return coerce(file_values[key], default)
    return default


def echo_resolved(out_dir, resolved: dict) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "config_resolved.txt"
    lines = [f"{key} = {resolved[key]}" for key in sorted(resolved)]
    path.write_text("\n".join(lines) + "\n")
    return path
