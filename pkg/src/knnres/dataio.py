"""CSV point-set exchange, run manifests, and history export.

CSV is the sole interchange format: floats are written with 17 significant
digits so a save/load round trip is value-exact. A run manifest is a JSON
record (config, input hashes, seed, code version, outputs, metrics) that
fully reproduces a run when replayed.
"""

import csv
import hashlib
import json
from pathlib import Path

import numpy as np

from .core import PointSet
from .errors import InvalidDataError


def load_pointset(path, delimiter=",", has_header=False, column_subset=None) -> PointSet:
    """Read a rectangular numeric table into a PointSet.

    column_subset selects columns by header name (needs has_header) or by
    zero-based index. Ragged rows and non-numeric cells raise
    InvalidDataError naming the offending line.
    """
    path = Path(path)
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh, delimiter=delimiter) if r]
    if not rows:
        raise InvalidDataError(f"{path}: empty file")
    names = None
    if has_header:
        names = [c.strip() for c in rows[0]]
        rows = rows[1:]
        if not rows:
            raise InvalidDataError(f"{path}: header but no data rows")
    width = len(rows[0])
    data = np.empty((len(rows), width))
    for i, row in enumerate(rows):
        line_no = i + (2 if has_header else 1)
        if len(row) != width:
            raise InvalidDataError(
                f"{path}: ragged row at line {line_no} "
                f"({len(row)} cells, expected {width})"
            )
        for j, cell in enumerate(row):
            try:
                data[i, j] = float(cell)
            except ValueError:
                raise InvalidDataError(
                    f"{path}: non-numeric cell at line {line_no}, column {j + 1}: {cell!r}"
                ) from None
    if column_subset is not None:
        idx = []
        for c in column_subset:
            if isinstance(c, str):
                if names is None or c not in names:
                    raise InvalidDataError(f"{path}: no column named {c!r}")
                idx.append(names.index(c))
            else:
                idx.append(int(c))
        data = data[:, idx]
        names = [names[i] for i in idx] if names else None
    return PointSet(data, columns=tuple(names) if names else None)


def save_pointset(ps: PointSet, path, header=None):
    """Write a PointSet as CSV with round-trip-exact decimal floats."""
    path = Path(path)
    cols = header if header is not None else ps.columns
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        if cols:
            writer.writerow(cols)
        for row in ps.data:
            writer.writerow([f"{v:.17g}" for v in row])


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def save_report_csv(report, path):
    """Dump a LossReport's per-step rows to CSV."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(report.FIELDS)
        for i in range(len(report)):
            writer.writerow([getattr(report, f)[i] for f in report.FIELDS])


def save_manifest(manifest: dict, path):
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_manifest(path) -> dict:
    with open(path) as fh:
        return json.load(fh)
