"""Delimiter-separated tables with unit-bearing headers.

Headers are ``name[unit]``; ``[1]`` marks a dimensionless column.  Lines
starting with ``#`` are comments.
"""

from __future__ import annotations

import csv
import io
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError
from .fitting import GainDataset

_HEADER = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*\[([^\]]*)\]\s*$")

AXIS_COLUMNS = {"density": ("n_density", "cm^-3"), "rabi": ("omega_over_2pi", "GHz")}
GAIN_COLUMNS = {"g_p": "1", "g_s": "1", "weight": "1"}


def format_value(x) -> str:
    if isinstance(x, str):
        return x
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.15g}"


@dataclass
class OutputTable:
    columns: list[str]
    units: list[str]
    rows: list[tuple] = field(default_factory=list)
    comments: list[str] = field(default_factory=list)

    def __post_init__(self):
        if len(self.columns) != len(self.units):
            raise ValueError("one unit per column")

    def add(self, *values):
        if len(values) != len(self.columns):
            raise ValueError(f"expected {len(self.columns)} values, got {len(values)}")
        self.rows.append(tuple(values))

    def column(self, name: str) -> list:
        i = self.columns.index(name)
        return [row[i] for row in self.rows]

    def to_text(self) -> str:
        buf = io.StringIO()
        for line in self.comments:
            buf.write(f"# {line}".rstrip() + "\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow([f"{c}[{u}]" for c, u in zip(self.columns, self.units)])
        for row in self.rows:
            writer.writerow([format_value(v) for v in row])
        return buf.getvalue()

    def write(self, path):
        Path(path).write_text(self.to_text(), encoding="utf-8", newline="")


def _parse_header(cells, lineno):
    names, units = [], []
    for cell in cells:
        m = _HEADER.match(cell)
        if not m:
            raise DataError(f"header cell {cell!r} is not of the form name[unit]", lineno)
        names.append(m.group(1))
        units.append(m.group(2).strip())
    return names, units


def _rows(path):
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        yield lineno, next(csv.reader([line]))


def read_table(path) -> OutputTable:
    rows = _rows(path)
    try:
        lineno, header = next(rows)
    except StopIteration:
        raise DataError(f"{path}: empty table") from None
    names, units = _parse_header(header, lineno)
    table = OutputTable(names, units)
    for lineno, cells in rows:
        if len(cells) != len(names):
            raise DataError(f"expected {len(names)} fields, found {len(cells)}", lineno)
        values = []
        for c in cells:
            try:
                values.append(float(c))
            except ValueError:
                values.append(c)
        table.add(*values)
    return table


def read_dataset(path) -> GainDataset:
    """Load a gain dataset; any malformed row rejects the whole file."""
    rows = _rows(path)
    try:
        lineno, header = next(rows)
    except StopIteration:
        raise DataError(f"{path}: no header row") from None
    names, units = _parse_header(header, lineno)

    axis = None
    by_axis = {col: (ax, unit) for ax, (col, unit) in AXIS_COLUMNS.items()}
    for name, unit in zip(names, units):
        if name in by_axis:
            if axis is not None:
                raise DataError("more than one axis column", lineno)
            axis, expected = by_axis[name]
        elif name in GAIN_COLUMNS:
            expected = GAIN_COLUMNS[name]
        else:
            raise DataError(f"unknown column {name!r}", lineno)
        if unit != expected:
            raise DataError(f"column {name!r} has unit [{unit}], expected [{expected}]", lineno)
    if axis is None:
        raise DataError(f"missing axis column (one of {[c for c, _ in AXIS_COLUMNS.values()]})", lineno)
    for required in ("g_p", "g_s"):
        if required not in names:
            raise DataError(f"missing column {required!r}", lineno)
    if len(set(names)) != len(names):
        raise DataError("duplicate column", lineno)

    data = {name: [] for name in names}
    for lineno, cells in rows:
        if len(cells) != len(names):
            raise DataError(f"expected {len(names)} fields, found {len(cells)}", lineno)
        for name, cell in zip(names, cells):
            try:
                value = float(cell)
            except ValueError:
                raise DataError(f"non-numeric value {cell!r} in column {name!r}", lineno) from None
            if not math.isfinite(value):
                raise DataError(f"non-finite value in column {name!r}", lineno)
            data[name].append(value)

    axis_col = AXIS_COLUMNS[axis][0]
    return GainDataset(
        axis=axis,
        param=np.array(data[axis_col]),
        g_p=np.array(data["g_p"]),
        g_s=np.array(data["g_s"]),
        weights=np.array(data["weight"]) if "weight" in data else None,
    )


def write_dataset(ds: GainDataset, path, comments=()):
    col, unit = AXIS_COLUMNS[ds.axis]
    columns, units = [col, "g_p", "g_s"], [unit, "1", "1"]
    if ds.weights is not None:
        columns.append("weight")
        units.append("1")
    table = OutputTable(columns, units, comments=list(comments))
    for i in range(len(ds)):
        # repr is the shortest string that reads back to the same float
        row = [repr(float(ds.param[i])), repr(float(ds.g_p[i])), repr(float(ds.g_s[i]))]
        if ds.weights is not None:
            row.append(repr(float(ds.weights[i])))
        table.add(*row)
    table.write(path)
