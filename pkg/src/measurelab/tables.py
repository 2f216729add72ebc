"""Rectangular result tables and their CSV form."""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field
from typing import Union

import numpy as np

Cell = Union[float, int, str, bool]


@dataclass
class ResultTable:
    name: str
    columns: list[str]
    rows: list[list[Cell]] = field(default_factory=list)

    def add_row(self, *cells: Cell) -> None:
        if len(cells) != len(self.columns):
            raise ValueError(
                f"table {self.name!r} has {len(self.columns)} columns, row has {len(cells)}"
            )
        self.rows.append(list(cells))

    def column(self, name: str) -> list[Cell]:
        k = self.columns.index(name)
        return [r[k] for r in self.rows]


def format_cell(value: Cell) -> str:
    # bool before float: bool is an int subclass
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def emit_csv(table: ResultTable, path: Union[str, os.PathLike]) -> None:
    """Write ``table`` as UTF-8 CSV; floats carry 17 significant digits."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(table.columns)
        for row in table.rows:
            writer.writerow([format_cell(c) for c in row])


def read_csv(path: Union[str, os.PathLike]) -> tuple[list[str], list[list[str]]]:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]
