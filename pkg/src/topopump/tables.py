"""CSV result tables and run manifests.

Tables are RFC-4180-style with a header row, preceded by '#'-prefixed
provenance comment lines.  Floats are serialized with 17 significant
digits so every double round-trips exactly; rerunning a command with the
same seed reproduces each table byte for byte (manifests carry the
timestamp instead).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError


def format_number(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


@dataclass
class ResultTable:
    """Column names (with units in brackets) and homogeneous rows."""

    columns: list[str]
    rows: list[tuple] = field(default_factory=list)

    def append(self, *values) -> None:
        if len(values) != len(self.columns):
            raise ValueError(f"expected {len(self.columns)} values, got {len(values)}")
        self.rows.append(tuple(values))

    def extend(self, rows) -> None:
        for row in rows:
            self.append(*row)

    def format_rows(self) -> list[str]:
        return [",".join(format_number(v) if not isinstance(v, str) else v for v in row)
                for row in self.rows]

    def write(self, path: Path | str, provenance: dict[str, str]) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        lines = [f"# {key} = {provenance[key]}" for key in sorted(provenance)]
        lines.append(",".join(self.columns))
        lines.extend(self.format_rows())
        path.write_text("\n".join(lines) + "\n")


def read_table(path: Path | str) -> tuple[list[str], np.ndarray, dict[str, str]]:
    """Read a table written by ResultTable.write; returns (columns, data, provenance)."""
    path = Path(path)
    provenance: dict[str, str] = {}
    header: list[str] | None = None
    rows = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body:
                key, _, value = body.partition("=")
                provenance[key.strip()] = value.strip()
            continue
        if header is None:
            header = [c.strip() for c in line.split(",")]
            continue
        parts = line.split(",")
        if len(parts) != len(header):
            raise ConfigError(f"{path}:{lineno}: expected {len(header)} fields, got {len(parts)}")
        rows.append(parts)
    if header is None:
        raise ConfigError(f"{path}: no header row found")
    data = np.empty((len(rows), len(header)), dtype=float)
    for i, parts in enumerate(rows):
        for j, cell in enumerate(parts):
            try:
                data[i, j] = float(cell)
            except ValueError:
                data[i, j] = np.nan
    return header, data, provenance


def column(header: list[str], data: np.ndarray, name: str) -> np.ndarray:
    """Column by name, ignoring a bracketed unit suffix."""
    for j, col in enumerate(header):
        if col == name or col.split("[")[0] == name:
            return data[:, j]
    raise ConfigError(f"column {name!r} not found in {header}")


def config_hash(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def write_manifest(path: Path | str, entries: dict[str, str]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"{key} = {value}" for key, value in entries.items()]
    path.write_text("\n".join(lines) + "\n")
