import datetime as dt

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from recordcp.errors import ConfigurationError, EmptyInput, IncompleteYear, InsufficientYears, ParseError
from recordcp.records import SeriesMatrix
from recordcp.stationio import (
    Pipeline,
    StationRecord,
    aggregate,
    day_of_year,
    ingest,
    iter_records,
    read_matrix_csv,
    write_matrix_csv,
)

ECAD = """\
EUROPEAN CLIMATE ASSESSMENT & DATASET (ECA&D), file created on 01-01-2020
THESE DATA CAN BE USED FREELY
FILE FORMAT (MISSING VALUE CODE IS -9999):
01-06 SOUID: Source identifier

STAID, SOUID,    DATE,   TX, Q_TX
  229,   100,19400101,  152,    0
  229,   100,19400102,  -31,    1
  229,   100,19400103,-9999,    9
"""


def _daily_records(years, value=lambda d: 10.0):
    out = []
    for y in years:
        d = dt.date(y, 1, 1)
        while d.year == y:
            out.append(StationRecord(d, value(d), 0))
            d += dt.timedelta(days=1)
    return out


def test_ecad_example_line():
    recs = ingest(ECAD.splitlines(True), "ecad")
    assert recs[0] == StationRecord(dt.date(1940, 1, 1), 15.2, 0)
    assert recs[1].value == -3.1 and recs[1].quality == 1
    assert recs[2].value is None and recs[2].missing


def test_ecad_without_header():
    recs = ingest(["  229,   100,19400101,  152,    0"], "ecad")
    assert recs == [StationRecord(dt.date(1940, 1, 1), 15.2, 0)]


def test_suspect_policies(caplog):
    recs = ingest(ECAD.splitlines(True), "ecad", suspect="keep")
    assert recs[1].value == -3.1 and "suspect" in caplog.text
    recs = ingest(ECAD.splitlines(True), "ecad", suspect="missing")
    assert recs[1].value is None and recs[1].quality == 9
    with pytest.raises(ConfigurationError):
        ingest(ECAD.splitlines(True), "ecad", suspect="drop-everything")


def test_csv_example_line():
    assert ingest(["date,value\n", "1990-07-01,38.4\n"]) == [StationRecord(dt.date(1990, 7, 1), 38.4, 0)]
    recs = ingest(["date,value,quality", "1990-07-01,NA,0", "1990-07-02,1.5,1"])
    assert recs[0].missing and recs[1].quality == 1


@pytest.mark.parametrize("lines, fmt, line", [
    (["date,value", "1990-07-01,1.0", "1940-13-01,2.0"], "csv", 3),
    (["date,value", "1990-07-01,abc"], "csv", 2),
    (["date,value,quality", "1990-07-01,1.0,5"], "csv", 2),
    (["DATE,TX,Q_TX", "19401301,152,0"], "ecad", 2),
    (["DATE,TX,Q_TX", "19400101,15.2,0"], "ecad", 2),
])
def test_parse_errors_carry_line_numbers(lines, fmt, line):
    with pytest.raises(ParseError) as err:
        ingest(lines, fmt)
    assert err.value.line == line
    assert f"line {line}" in str(err.value)


def test_empty_and_bad_header():
    with pytest.raises(EmptyInput):
        ingest(["date,value"])
    with pytest.raises(EmptyInput):
        ingest(["just a preamble"], "ecad")
    with pytest.raises(ParseError):
        ingest(["when,what", "1990-01-01,1"])
    with pytest.raises(ConfigurationError):
        list(iter_records([], "xml"))


def test_ingest_from_path(tmp_path):
    p = tmp_path / "tx.txt"
    p.write_text(ECAD)
    assert len(ingest(p, "ecad")) == 3


def test_annual_mean_of_constant():
    m = aggregate(_daily_records([2001, 2002]), "annual-mean")
    assert m.values[:, 0].tolist() == [10.0, 10.0]
    assert m.index.tolist() == [2001, 2002]


def test_annual_max_with_missing_day():
    recs = _daily_records([2001, 2002], value=lambda d: float(d.timetuple().tm_yday))
    recs = [r if r.date != dt.date(2001, 12, 31) else StationRecord(r.date, None, 9) for r in recs]
    m = aggregate(recs, "annual-max", policy="available")
    assert m.values[:, 0].tolist() == [364.0, 365.0]
    with pytest.raises(IncompleteYear):
        aggregate(recs, "annual-max", policy="strict")
    assert aggregate(recs, "annual-max", policy="strict", max_missing=1).values[0, 0] == 364.0


def test_daily_matrix_shape_and_leap_day():
    years = range(1940, 2020)
    recs = _daily_records(years, value=lambda d: d.year + d.timetuple().tm_yday / 1000)
    m = aggregate(recs, "daily", policy="strict")
    assert (m.T, m.M) == (80, 365)
    assert m.columns.tolist() == list(range(1, 366))
    # day 60 is March 1 in every year, leap or not
    assert m.values[1944 - 1940, 59] == pytest.approx(1944 + 61 / 1000)
    assert m.values[1941 - 1940, 59] == pytest.approx(1941 + 60 / 1000)


def test_missing_year_becomes_missing_row():
    recs = _daily_records([2001, 2003])
    m = aggregate(recs, "annual-max")
    assert m.index.tolist() == [2001, 2002, 2003]
    assert m.missing[:, 0].tolist() == [False, True, False]


def test_aggregate_errors():
    with pytest.raises(InsufficientYears):
        aggregate(_daily_records([2001]), "annual-max")
    with pytest.raises(EmptyInput):
        aggregate([], "annual-max")
    with pytest.raises(ConfigurationError):
        aggregate(_daily_records([2001, 2002]), "annual-max", policy="lenient")
    with pytest.raises(ConfigurationError):
        Pipeline.parse("weekly")
    assert Pipeline.parse("AnnualMax") is Pipeline.ANNUAL_MAX


def test_raw_pipeline():
    recs = [StationRecord(dt.date(1950 + i, 6, 1), float(i), 0) for i in range(5)]
    m = aggregate(recs, "raw")
    assert m.values[:, 0].tolist() == [0, 1, 2, 3, 4] and m.index.tolist() == list(range(1950, 1955))


def test_day_of_year():
    assert day_of_year(dt.date(2001, 1, 1)) == 1
    assert day_of_year(dt.date(2000, 12, 31)) == 365
    assert day_of_year(dt.date(2000, 2, 29)) is None
    assert day_of_year(dt.date(2000, 3, 1)) == day_of_year(dt.date(2001, 3, 1)) == 60


finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@settings(max_examples=100, deadline=None)
@given(hnp.arrays(np.float64, st.tuples(st.integers(2, 12), st.integers(1, 6)), elements=finite),
       st.integers(1800, 2100))
def test_matrix_csv_round_trip_is_bit_exact(values, start):
    m = SeriesMatrix(values, index=np.arange(start, start + values.shape[0]), columns=np.arange(1, values.shape[1] + 1))
    back = read_matrix_csv(write_matrix_csv(m))
    assert np.array_equal(back.values.view(np.int64), m.values.view(np.int64))
    assert back.index.tolist() == m.index.tolist() and back.columns.tolist() == m.columns.tolist()


def test_round_trip_with_missing_and_file(tmp_path):
    v = np.array([[1.5, np.nan], [0.1 + 0.2, -0.0]])
    m = SeriesMatrix(v, index=np.array([1990, 1991]), columns=np.array([1, 8]))
    path = tmp_path / "m.csv"
    write_matrix_csv(m, path)
    back = read_matrix_csv(path)
    assert back.missing.tolist() == m.missing.tolist()
    assert back.values[1, 0] == 0.1 + 0.2 and np.signbit(back.values[1, 1])
    with pytest.raises(ParseError):
        read_matrix_csv("index,1\n1990,1.0,2.0\n")
