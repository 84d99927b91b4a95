"""CSV time-series files.

Header ``t,mean,stderr,n_realizations``, rows in ascending ``t``, numbers with
17 significant digits, LF line endings.
"""

from __future__ import annotations

import csv
import logging
from pathlib import Path
from typing import Mapping

import numpy as np

from qmpemba.circuit import TimeSeries
from qmpemba.errors import InvalidArgumentError

__all__ = ["CSV_HEADER", "format_number", "write_series_csv", "emit_csv", "read_csv"]

logger = logging.getLogger(__name__)

CSV_HEADER = ("t", "mean", "stderr", "n_realizations")


def format_number(x: float) -> str:
    return f"{float(x):.17g}"


def write_series_csv(series: TimeSeries, path: str | Path) -> Path:
    path = Path(path)
    order = np.argsort(series.times, kind="stable")
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for k in order:
            writer.writerow((format_number(series.times[k]),
                             format_number(series.mean[k]),
                             format_number(series.stderr[k]),
                             str(int(series.n_realizations))))
    return path


def emit_csv(series: Mapping[str, TimeSeries], directory: str | Path) -> list[Path]:
    """Write ``<name>.csv`` for each entry into *directory* (created if missing)."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name in sorted(series):
        written.append(write_series_csv(series[name], out / f"{name}.csv"))
    logger.info("wrote %d CSV file(s) to %s", len(written), out)
    return written


def read_csv(path: str | Path) -> TimeSeries:
    path = Path(path)
    with path.open(encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != CSV_HEADER:
        raise InvalidArgumentError(f"{path}: expected header {','.join(CSV_HEADER)}")
    body = rows[1:]
    try:
        data = np.array([[float(v) for v in row] for row in body], dtype=np.float64)
    except ValueError as exc:
        raise InvalidArgumentError(f"{path}: malformed row ({exc})") from exc
    if data.size == 0:
        return TimeSeries(np.empty(0), np.empty(0), np.empty(0), 1, path.stem)
    if data.ndim != 2 or data.shape[1] != 4:
        raise InvalidArgumentError(f"{path}: every row needs 4 columns")
    return TimeSeries(data[:, 0], data[:, 1], data[:, 2], int(data[0, 3]), path.stem)
