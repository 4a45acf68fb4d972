"""Stable CSV and JSON-manifest output.

Every data file gets a sibling "<stem>.manifest.json" recording the
experiment name, parameter grid, backend, and seed, so reruns can be
reproduced byte for byte.  Floats are rendered with 17 significant
digits, lines end with '\\n', and manifest keys are sorted.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, Sequence, Tuple

import numpy as np

SCHEMA_VERSION = "1"


def format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    s = str(v)
    if "," in s or "\n" in s:
        raise ValueError(f"CSV field {s!r} needs quoting; use a delimiter-free encoding")
    return s


def write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    lines = [",".join(header)]
    for row in rows:
        if len(row) != len(header):
            raise ValueError(f"row width {len(row)} != header width {len(header)}")
        lines.append(",".join(format_value(v) for v in row))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def manifest_path_for(data_path: str) -> str:
    stem, _ = os.path.splitext(data_path)
    return stem + ".manifest.json"


@dataclass(frozen=True)
class ExperimentManifest:
    experiment: str
    grid: Dict[str, Any]
    backend: str
    seed: int
    outputs: Tuple[str, ...]
    schema_version: str = SCHEMA_VERSION

    def to_dict(self) -> Dict[str, Any]:
        return {
            "experiment": self.experiment,
            "grid": _plain(self.grid),
            "backend": self.backend,
            "seed": int(self.seed),
            "outputs": list(self.outputs),
            "schema_version": self.schema_version,
        }


def _plain(obj):
    """Recursively coerce numpy scalars/arrays so json can serialize them."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    return obj


def write_manifest(manifest: ExperimentManifest, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(json.dumps(manifest.to_dict(), indent=2, sort_keys=True) + "\n")


def write_json(path: str, payload: Dict[str, Any]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(json.dumps(_plain(payload), indent=2, sort_keys=True) + "\n")
