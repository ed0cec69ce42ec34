"""Reading and writing protocol files and CSV traces.

A protocol file is a JSON object::

    {
      "omega0": 1.0,
      "n_oscillators": 8,
      "temperature": 0.0,
      "c_max": 0.05,
      "segments": [{"duration": 0.5, "coupling": 0.05}, ...],
      "metadata": {...}            # optional, written by the optimizer
    }

Floats are written with Python's shortest round-trip repr (at most 17
significant digits), so parsing and re-writing a canonical file reproduces it
byte for byte.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .chain import ChainConfig, ChainError, ControlSchedule

REQUIRED_KEYS = ("omega0", "n_oscillators", "temperature", "c_max", "segments")


class ProtocolFormatError(ValueError):
    pass


def protocol_to_dict(config: ChainConfig, schedule: ControlSchedule, metadata: dict | None = None) -> dict:
    out = {
        "omega0": config.omega0,
        "n_oscillators": config.n_oscillators,
        "temperature": config.temperature,
        "c_max": schedule.c_max,
        "segments": [{"duration": d, "coupling": c} for d, c in schedule.segments],
    }
    if metadata:
        out["metadata"] = metadata
    return out


def dumps_protocol(config: ChainConfig, schedule: ControlSchedule, metadata: dict | None = None) -> str:
    return json.dumps(protocol_to_dict(config, schedule, metadata), indent=2) + "\n"


def write_protocol(path, config, schedule, metadata=None) -> None:
    Path(path).write_text(dumps_protocol(config, schedule, metadata))


def _number(value, where: str, integer: bool = False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ProtocolFormatError(f"{where}: expected a number, got {value!r}")
    if integer and int(value) != value:
        raise ProtocolFormatError(f"{where}: expected an integer, got {value!r}")
    return value


def loads_protocol(text: str, source: str = "<string>"):
    """Parse protocol text into ``(ChainConfig, ControlSchedule, metadata)``."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProtocolFormatError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ProtocolFormatError(f"{source}: top level must be an object")
    missing = [k for k in REQUIRED_KEYS if k not in data]
    if missing:
        raise ProtocolFormatError(f"{source}: missing field(s) {', '.join(missing)}")
    segments = data["segments"]
    if not isinstance(segments, list) or not segments:
        raise ProtocolFormatError(f"{source}: 'segments' must be a non-empty list")
    pairs = []
    for i, seg in enumerate(segments):
        where = f"{source}: segments[{i}]"
        if not isinstance(seg, dict) or set(seg) != {"duration", "coupling"}:
            raise ProtocolFormatError(f"{where}: expected {{duration, coupling}}, got {seg!r}")
        d = _number(seg["duration"], where + ".duration")
        c = _number(seg["coupling"], where + ".coupling")
        if not d > 0:
            raise ProtocolFormatError(f"{where}.duration: must be > 0, got {d!r}")
        pairs.append((d, c))
    try:
        config = ChainConfig(
            n_oscillators=_number(data["n_oscillators"], f"{source}: n_oscillators", integer=True),
            omega0=_number(data["omega0"], f"{source}: omega0"),
            temperature=_number(data["temperature"], f"{source}: temperature"),
        )
        schedule = ControlSchedule(tuple(pairs), _number(data["c_max"], f"{source}: c_max"))
    except ChainError as exc:
        raise ProtocolFormatError(f"{source}: {exc}") from None
    return config, schedule, data.get("metadata")


def parse_protocol_file(path):
    """Read a protocol file; returns ``(ChainConfig, ControlSchedule, metadata)``."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ProtocolFormatError(f"{path}: {exc.strerror}") from None
    return loads_protocol(text, str(path))


def format_float(x: float) -> str:
    return f"{x:.12g}"


def write_csv(path, header: dict, columns: list[str], rows) -> None:
    """CSV with a ``#`` comment block echoing ``header`` as indented JSON."""
    lines = ["# " + line for line in json.dumps(header, indent=2, sort_keys=True).splitlines()]
    lines.append(",".join(columns))
    for row in np.atleast_2d(rows):
        lines.append(",".join(format_float(float(v)) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def read_csv(path):
    """Inverse of :func:`write_csv`; returns ``(header, columns, array)``."""
    comment, body = [], []
    for line in Path(path).read_text().splitlines():
        (comment if line.startswith("#") else body).append(line)
    header = json.loads("\n".join(line[2:] for line in comment)) if comment else {}
    columns = body[0].split(",")
    rows = np.array([[float(v) for v in line.split(",")] for line in body[1:]])
    return header, columns, rows.reshape(-1, len(columns))
