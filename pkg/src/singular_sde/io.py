"""CSV output with a JSON metadata comment line.

Layout::

    # {"config": ..., "subcommand": ...}
    col_a,col_b
    0.5,1.25
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np


def format_float(x) -> str:
    return "%.17g" % float(x)


def write_csv(path, header, rows, metadata: dict | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = np.atleast_2d(np.asarray(rows, dtype=float)) if len(rows) else np.empty((0, len(header)))
    if rows.shape[1] != len(header):
        raise ValueError("row width does not match the header")
    with path.open("w", newline="") as fh:
        fh.write("# " + json.dumps(metadata or {}, sort_keys=True) + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_float(v) for v in row])
    return path


def read_csv(path):
    """Return ``(metadata, header, data)`` from a file written by :func:`write_csv`."""
    path = Path(path)
    with path.open(newline="") as fh:
        first = fh.readline()
        if not first.startswith("# "):
            raise ValueError(f"{path} lacks the metadata line")
        meta = json.loads(first[2:])
        reader = csv.reader(fh)
        header = next(reader)
        data = np.array([[float(v) for v in row] for row in reader if row])
    if data.size == 0:
        data = np.empty((0, len(header)))
    return meta, header, data
