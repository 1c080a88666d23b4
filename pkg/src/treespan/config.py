"""Plain-text key=value config files and resolved-config snapshots.

Every command accepts defaults from such a file and writes back the fully
resolved parameter set next to its outputs, so any run can be reproduced
from the snapshot alone.
"""

from __future__ import annotations

from pathlib import Path


def load_config(path) -> dict:
    """Parse key=value lines; blank lines and # comments are ignored."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, _, value = line.partition("=")
            key = key.strip()
            if not key:
                raise ValueError(f"{path}:{lineno}: empty key")
            out[key] = value.strip()
    return out


def config_text(mapping: dict) -> str:
    """Render a mapping as sorted key=value lines."""
    lines = []
    for key in sorted(mapping):
        value = mapping[key]
        if value is None:
            value = ""
        elif isinstance(value, bool):
            value = "true" if value else "false"
        elif isinstance(value, (list, tuple)):
            value = ",".join(str(v) for v in value)
        lines.append(f"{key}={value}")
    return "\n".join(lines) + "\n"


def write_snapshot(path, mapping: dict) -> str:
    """Write the resolved-config snapshot and return its path."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(config_text(mapping))
    return str(path)
