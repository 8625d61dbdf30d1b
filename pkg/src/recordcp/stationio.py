"""Station data ingestion, yearly aggregation and matrix CSV round-trips.

Two input formats are understood:

* ``csv``: header ``date,value`` (optionally ``,quality``), ISO dates,
  empty / ``NA`` values are missing.
* ``ecad``: ECA&D station files.  Free-text preamble, then a header line such
  as ``STAID, SOUID, DATE, TX, Q_TX`` and comma-separated rows with
  YYYYMMDD dates, values in tenths of a unit and a quality flag
  (0 valid, 1 suspect, 9 missing).
"""

from __future__ import annotations

import csv
import datetime as dt
import enum
import io
import logging
import math
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, EmptyInput, IncompleteYear, InsufficientYears, ParseError
from .records import SeriesMatrix

log = logging.getLogger(__name__)

ECAD_MISSING = -9999
QUALITY_FLAGS = (0, 1, 9)


@dataclass(frozen=True)
class StationRecord:
    date: dt.date
    value: float | None
    quality: int = 0

    @property
    def missing(self) -> bool:
        return self.quality == 9


class Pipeline(str, enum.Enum):
    RAW = "raw"
    ANNUAL_MAX = "annual-max"
    ANNUAL_MEAN = "annual-mean"
    DAILY = "daily"

    @classmethod
    def parse(cls, value) -> Pipeline:
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "-")
        key = {"annualmax": "annual-max", "annualmean": "annual-mean", "dailymatrix": "daily",
               "daily-matrix": "daily"}.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise ConfigurationError(f"unknown pipeline {value!r}") from None


def _record(date: dt.date, value: float | None, quality: int, line: int) -> StationRecord:
    if quality not in QUALITY_FLAGS:
        raise ParseError(f"unknown quality flag {quality}", line)
    if value is None or quality == 9:
        return StationRecord(date, None, 9)
    if not math.isfinite(value):
        raise ParseError("non-finite value", line)
    return StationRecord(date, value, quality)


def _parse_ecad(lines, suspect: str):
    header = None
    for lineno, raw in enumerate(lines, start=1):
        text = raw.strip()
        if not text:
            continue
        fields = [f.strip() for f in text.split(",")]
        if header is None:
            upper = [f.upper() for f in fields]
            if "DATE" in upper and any(f.startswith("Q_") for f in upper):
                header = upper
                date_col = upper.index("DATE")
                q_col = next(i for i, f in enumerate(upper) if f.startswith("Q_"))
                value_col = upper.index(upper[q_col][2:]) if upper[q_col][2:] in upper else date_col + 1
                continue
            if not (len(fields) >= 3 and fields[-3].isdigit() and len(fields[-3]) == 8):
                continue  # preamble
            date_col, value_col, q_col = len(fields) - 3, len(fields) - 2, len(fields) - 1
            header = []
        if len(fields) <= max(date_col, value_col, q_col):
            raise ParseError(f"expected at least {max(date_col, value_col, q_col) + 1} fields", lineno)
        try:
            date = dt.datetime.strptime(fields[date_col], "%Y%m%d").date()
        except ValueError:
            raise ParseError(f"bad date {fields[date_col]!r}", lineno) from None
        try:
            raw_value = int(fields[value_col])
            quality = int(fields[q_col])
        except ValueError:
            raise ParseError("value and quality must be integers", lineno) from None
        value = None if raw_value == ECAD_MISSING else raw_value / 10.0
        yield _suspect(_record(date, value, quality, lineno), suspect, lineno)


def _parse_csv(lines, suspect: str):
    reader = csv.reader(lines)
    try:
        head = [h.strip().lower() for h in next(reader)]
    except StopIteration:
        return
    if "date" not in head or "value" not in head:
        raise ParseError("csv header must contain 'date' and 'value'", 1)
    di, vi = head.index("date"), head.index("value")
    qi = head.index("quality") if "quality" in head else None
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        try:
            date = dt.date.fromisoformat(row[di].strip())
        except (ValueError, IndexError):
            raise ParseError(f"bad date {row[di] if di < len(row) else ''!r}", lineno) from None
        text = row[vi].strip() if vi < len(row) else ""
        try:
            value = None if text.upper() in ("", "NA", "NAN") else float(text)
            quality = int(row[qi]) if qi is not None and qi < len(row) and row[qi].strip() else 0
        except ValueError:
            raise ParseError(f"bad value {text!r}", lineno) from None
        yield _suspect(_record(date, value, quality, lineno), suspect, lineno)


def _suspect(rec: StationRecord, policy: str, lineno: int) -> StationRecord:
    if rec.quality != 1:
        return rec
    if policy == "keep":
        log.warning("line %d: suspect value kept (%s)", lineno, rec.date)
        return rec
    if policy == "missing":
        return StationRecord(rec.date, None, 9)
    raise ConfigurationError(f"unknown suspect-value policy {policy!r}")


def iter_records(source, format: str = "csv", *, suspect: str = "keep"):
    """Yield StationRecords from a path or an iterable of lines."""
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8", errors="replace") as fh:
            yield from iter_records(fh.readlines(), format, suspect=suspect)
        return
    if format == "ecad":
        yield from _parse_ecad(source, suspect)
    elif format == "csv":
        yield from _parse_csv(source, suspect)
    else:
        raise ConfigurationError(f"unknown input format {format!r}")


def ingest(source, format: str = "csv", *, suspect: str = "keep") -> list[StationRecord]:
    records = list(iter_records(source, format, suspect=suspect))
    if not records:
        raise EmptyInput("no data rows found")
    return records


def day_of_year(date: dt.date) -> int | None:
    """Position 1..365 in a non-leap calendar; None for Feb 29."""
    if date.month == 2 and date.day == 29:
        return None
    return dt.date(2001, date.month, date.day).timetuple().tm_yday


def _days_in_year(year: int) -> int:
    return 366 if (year % 4 == 0 and year % 100 != 0) or year % 400 == 0 else 365


def aggregate(records, pipeline, *, policy: str = "available", max_missing: int = 0) -> SeriesMatrix:
    """Turn a record stream into the SeriesMatrix the tests run on.

    ``policy="available"`` aggregates over whatever days are present (a year
    with no data becomes a missing row); ``"strict"`` raises IncompleteYear
    for any year with more than ``max_missing`` missing days.  Rows are
    indexed by calendar year, except for the raw pipeline.
    """
    pipeline = Pipeline.parse(pipeline)
    records = list(records)
    if not records:
        raise EmptyInput("no records to aggregate")
    if policy not in ("available", "strict"):
        raise ConfigurationError(f"unknown completeness policy {policy!r}")

    if pipeline is Pipeline.RAW:
        values = np.array([np.nan if r.value is None else r.value for r in records])
        years = [r.date.year for r in records]
        index = np.array(years) if len(set(years)) == len(years) else np.arange(1, len(values) + 1)
        return SeriesMatrix(values, index=index)

    by_year: dict[int, dict[dt.date, float]] = defaultdict(dict)
    for r in records:
        if r.value is not None:
            by_year[r.date.year][r.date] = r.value
    if not by_year:
        raise EmptyInput("every record is missing")
    first, last = min(by_year), max(by_year)
    years = np.arange(first, last + 1)
    if len(years) < 2:
        raise InsufficientYears(f"need at least 2 years, got {len(years)}")

    daily = pipeline is Pipeline.DAILY
    for y in years:
        expected = 365 if daily else _days_in_year(y)
        present = sum(1 for d in by_year.get(y, ()) if not (daily and day_of_year(d) is None))
        if policy == "strict" and expected - present > max_missing:
            raise IncompleteYear(f"year {y} misses {expected - present} day(s)")

    if daily:
        values = np.full((len(years), 365), np.nan)
        for i, y in enumerate(years):
            for d, v in by_year.get(y, {}).items():
                pos = day_of_year(d)
                if pos is not None:
                    values[i, pos - 1] = v
        return SeriesMatrix(values, index=years, columns=np.arange(1, 366))

    reduce = max if pipeline is Pipeline.ANNUAL_MAX else (lambda v: math.fsum(v) / len(v))
    values = np.array([reduce(list(by_year[y].values())) if by_year.get(y) else np.nan for y in years])
    return SeriesMatrix(values, index=years)


def write_matrix_csv(matrix: SeriesMatrix, target=None) -> str:
    """Write index + columns as CSV; floats use repr so re-reading is exact."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    cols = matrix.columns if matrix.columns is not None else np.arange(1, matrix.M + 1)
    writer.writerow(["index", *[str(c) for c in cols]])
    index = matrix.index if matrix.index is not None else np.arange(1, matrix.T + 1)
    for i in range(matrix.T):
        row = ["" if matrix.missing[i, m] else repr(float(matrix.values[i, m])) for m in range(matrix.M)]
        writer.writerow([str(index[i]), *row])
    text = buf.getvalue()
    if target is not None:
        Path(target).write_text(text)
    return text


def read_matrix_csv(source) -> SeriesMatrix:
    """Read a matrix from a path or from CSV text (anything containing a newline)."""
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source):
        source = Path(source).read_text()
    rows = list(csv.reader(io.StringIO(source)))
    if len(rows) < 2:
        raise EmptyInput("matrix file has no data rows")
    header = rows[0]
    try:
        columns = np.array([int(c) for c in header[1:]])
    except ValueError:
        columns = np.array(header[1:])
    index, values = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} fields, got {len(row)}", lineno)
        try:
            index.append(int(row[0]))
            values.append([float(v) if v.strip() else np.nan for v in row[1:]])
        except ValueError:
            raise ParseError("non-numeric entry", lineno) from None
    return SeriesMatrix(np.array(values), index=np.array(index), columns=columns)
