"""Config parsing and CSV/JSON serialization.

Config grammar: one ``key = value`` per line, ``#`` starts a comment, blank lines
are ignored. Keys are case-sensitive; values are decimal numbers or plain words.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .rod_model import CardanPath, ElasticConstants

CONSTANT_KEYS = ("c12", "c13", "c23", "k", "L")


class ConfigError(ValueError):
    pass


def parse_config(text: str) -> dict[str, str]:
    entries: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or not value:
            raise ConfigError(f"line {lineno}: empty key or value")
        if key in entries:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        entries[key] = value
    return entries


def read_config(path) -> dict[str, str]:
    return parse_config(Path(path).read_text())


def to_float(key: str, value) -> float:
    try:
        x = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: not a number: {value!r}") from None
    if not math.isfinite(x):
        raise ConfigError(f"{key}: must be finite, got {value!r}")
    return x


def constants_from_mapping(entries: dict, defaults: ElasticConstants | None = None) -> ElasticConstants:
    values = defaults.as_dict() if defaults is not None else {}
    for key in CONSTANT_KEYS:
        if key in entries and entries[key] is not None:
            values[key] = to_float(key, entries[key])
    missing = [key for key in CONSTANT_KEYS if key not in values]
    if missing:
        raise ConfigError(f"missing constants: {', '.join(missing)}")
    try:
        return ElasticConstants(**values)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def read_constants(path) -> ElasticConstants:
    return constants_from_mapping(read_config(path))


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_csv(path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(v if isinstance(v, str) else _fmt(v) for v in row) + "\n")


def write_path_csv(path, cardan: CardanPath) -> None:
    rows = np.column_stack([cardan.nodes, cardan.values])
    write_csv(path, ["t", "phi1", "phi2", "phi3"], rows)


def read_path_csv(path) -> CardanPath:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] != 4:
        raise ValueError(f"{path}: expected columns t,phi1,phi2,phi3")
    t = data[:, 0]
    n = len(t) - 1
    if n < 1 or not np.allclose(np.diff(t), t[-1] / n, rtol=1e-9, atol=1e-12) or t[0] != 0.0:
        raise ValueError(f"{path}: nodes must form a uniform grid starting at 0")
    return CardanPath(data[:, 1:], float(t[-1]))


def write_polyline_csv(path, cardan_or_nodes, points: np.ndarray) -> None:
    t = cardan_or_nodes.nodes if hasattr(cardan_or_nodes, "nodes") else np.asarray(cardan_or_nodes)
    write_csv(path, ["t", "x", "y", "z"], np.column_stack([t, points]))


def dump_json(path, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
