"""Delimited-table and JSON writers with reproducible formatting.

Floats are rendered with %.17g so a written table round-trips bit-exactly;
JSON output is key-sorted with a trailing newline so reruns produce identical
bytes.
"""

from __future__ import annotations

import json
import os
from typing import Iterable, Sequence


def ensure_dir(path) -> str:
    os.makedirs(path, exist_ok=True)
    return str(path)


def _fmt(cell) -> str:
    if isinstance(cell, bool):
        return "1" if cell else "0"
    if isinstance(cell, float):
        return "%.17g" % cell
    return str(cell)


def write_table(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(c) for c in row))
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def read_table(path):
    """Returns (header, rows); every cell is parsed to float when possible."""
    with open(path, newline="") as fh:
        lines = [ln for ln in fh.read().split("\n") if ln]
    header = lines[0].split(",")
    rows = []
    for ln in lines[1:]:
        row = []
        for cell in ln.split(","):
            try:
                row.append(float(cell))
            except ValueError:
                row.append(cell)
        rows.append(row)
    return header, rows


def write_json(path, obj) -> None:
    with open(path, "w", newline="") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
