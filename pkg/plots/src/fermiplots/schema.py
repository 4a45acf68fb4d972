"""Input contracts: one expected column set per experiment CSV.

The column tuples mirror what the simulation CLI writes. A sibling
manifest (``<stem>.manifest.json``), when present, must carry a supported
schema_version; the CSVs themselves are matched by column set.
"""
import csv
import json
import os
from typing import Dict, List, Sequence, Tuple

SUPPORTED_SCHEMA_VERSION = "1"

EE_SWEEP = ("mode", "L", "n_m", "entropy_nats", "entropy_log2_units",
            "probability", "trials_excluded", "seed", "state")
IMPERFECT_BELL = ("epsilon", "n_m", "entropy_nats", "predicted", "residual",
                  "L", "seed")
IMPERFECT_COPY = ("L", "dm", "entropy_log2_units", "fidelity", "m0", "seed")
PROB_SCALING = ("L", "m0", "log_P_minor", "log_P_spectrum", "eisler_epsilon")
PROB_SCALING_FITS = ("m0", "slope", "intercept", "r_squared", "n_points")


class SchemaMismatch(ValueError):
    """Input columns or schema version differ from the contract."""


class EmptyDataError(ValueError):
    """A CSV validated against the contract but has no data rows."""


def column_diff(expected: Sequence[str], found: Sequence[str]) -> str:
    missing = [c for c in expected if c not in found]
    unexpected = [c for c in found if c not in expected]
    parts = []
    if missing:
        parts.append("missing columns: " + ", ".join(missing))
    if unexpected:
        parts.append("unexpected columns: " + ", ".join(unexpected))
    return "; ".join(parts)


def check_manifest(csv_path: str) -> None:
    stem, _ = os.path.splitext(csv_path)
    path = stem + ".manifest.json"
    if not os.path.exists(path):
        return
    with open(path, encoding="utf-8") as fh:
        manifest = json.load(fh)
    version = str(manifest.get("schema_version", SUPPORTED_SCHEMA_VERSION))
    if version != SUPPORTED_SCHEMA_VERSION:
        raise SchemaMismatch(
            f"{csv_path}: manifest schema_version {version!r} is not the "
            f"supported {SUPPORTED_SCHEMA_VERSION!r}")


def read_header(csv_path: str) -> Tuple[str, ...]:
    with open(csv_path, newline="", encoding="utf-8") as fh:
        return tuple(csv.DictReader(fh).fieldnames or ())


def read_rows(csv_path: str, expected: Sequence[str]) -> List[Dict[str, str]]:
    """Rows as string dicts, after column-set and manifest validation."""
    check_manifest(csv_path)
    with open(csv_path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        found = tuple(reader.fieldnames or ())
        if set(found) != set(expected):
            raise SchemaMismatch(f"{csv_path}: {column_diff(expected, found)}")
        rows = list(reader)
    if not rows:
        raise EmptyDataError(f"{csv_path}: no data rows")
    return rows
