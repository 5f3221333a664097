"""CSV tables written at 17 significant digits so values round-trip exactly."""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np


def _fmt(x):
    return f"{float(x):.17g}"


def write_table(path, columns, rows):
    """Write a header line and rows of reals."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = np.asarray(rows, dtype=float).reshape(-1, len(columns))
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(x) for x in r])
    return path


def read_table(path):
    with Path(path).open(newline="") as fh:
        r = csv.reader(fh)
        columns = next(r)
        data = np.array([[float(x) for x in row] for row in r], dtype=float)
    return columns, data.reshape(-1, len(columns))


def complex_columns(prefix, q):
    return [f"Re({prefix}_{i + 1})" for i in range(q)] + [f"Im({prefix}_{i + 1})" for i in range(q)]


def split_complex(z):
    z = np.asarray(z, dtype=complex)
    return np.concatenate([z.real, z.imag], axis=-1)


def write_solution(path, times, y):
    """Columns ``t, Re(y_1..y_q), Im(y_1..y_q)``."""
    y = np.asarray(y, dtype=complex)
    q = y.shape[1]
    data = np.column_stack([np.asarray(times, dtype=float), split_complex(y)])
    return write_table(path, ["t"] + complex_columns("y", q), data)


def write_grid(path, n, t, c):
    """Columns ``n, t_n, Re(c_1..c_q), Im(c_1..c_q)``."""
    c = np.asarray(c, dtype=complex)
    q = c.shape[1]
    data = np.column_stack([n, t, split_complex(c)])
    return write_table(path, ["n", "t_n"] + complex_columns("c", q), data)
