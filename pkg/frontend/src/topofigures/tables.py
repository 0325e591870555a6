"""Reader for the simulator's CSV table format.

Tables are comma-separated with one header row, preceded by '#'-prefixed
provenance comments.  This package never recomputes physics: it only
displays what the tables contain.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np


class TableError(ValueError):
    """Missing file, missing column, or an empty/malformed table."""


class Table:
    def __init__(self, columns: list[str], data: np.ndarray, path: Path):
        self.columns = columns
        self.data = data
        self.path = path

    def col(self, name: str) -> np.ndarray:
        for j, col in enumerate(self.columns):
            if col == name or col.split("[")[0] == name:
                return self.data[:, j]
        raise TableError(f"{self.path}: required column {name!r} not found in {self.columns}")


def read_table(path: Path | str) -> Table:
    path = Path(path)
    if not path.exists():
        raise TableError(f"missing input table {path}")
    header: list[str] | None = None
    rows: list[list[float]] = []
    for line in path.read_text().splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        if header is None:
            header = [c.strip() for c in line.split(",")]
            continue
        rows.append([_number(cell) for cell in line.split(",")])
    if header is None:
        raise TableError(f"{path}: no header row")
    if not rows:
        raise TableError(f"{path}: table is empty")
    return Table(header, np.array(rows, dtype=float), path)


def _number(cell: str) -> float:
    try:
        return float(cell)
    except ValueError:
        return np.nan
