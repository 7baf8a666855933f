"""CSV files with a commented provenance header and full double precision."""
import csv
from pathlib import Path

import numpy as np


def fmt(x):
    if isinstance(x, (str, bool)) or x is None:
        return "" if x is None else str(x)
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def write_csv(path, columns, rows, header=()):
    """Write ``rows`` under a block of ``# ...`` comment lines.

    ``header`` is an iterable of ``(key, value)`` pairs echoed verbatim.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        for key, value in header:
            fh.write(f"# {key} = {value}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([fmt(v) for v in row])
    return path


def read_csv(path):
    """Return ``(header_dict, columns, rows)``; numeric cells are parsed as float."""
    header, lines = {}, []
    with Path(path).open() as fh:
        for line in fh:
            if line.startswith("#"):
                key, _, value = line[1:].partition("=")
                header[key.strip()] = value.strip()
            else:
                lines.append(line)
    reader = csv.reader(lines)
    columns = next(reader)
    rows = [[_parse(c) for c in r] for r in reader]
    return header, columns, rows


def _parse(cell):
    try:
        return float(cell)
    except ValueError:
        return cell
