import io

import numpy as np
import pytest
from conftest import hmd_rows, hmd_text, make_data
from hypothesis import given, settings
from hypothesis import strategies as st

from lexisbayes.exceptions import AggregationError, CoverageGapError, HmdFormatError
from lexisbayes.ingest import (
    HmdRow,
    aggregate,
    format_hmd_table,
    parse_hmd_table,
    to_hmd_tables,
    to_mortality_data,
)
from lexisbayes.lattice import validate_data


def _parse(text):
    return parse_hmd_table(io.StringIO(text))


def test_open_age_row():
    table = _parse(hmd_text([]) + "  1900  110+  1.23  0.87  2.10\n")
    assert table.rows == [HmdRow(1900, "110+", 1.23, 0.87, 2.10)]
    assert table.rows[0].age == 110


def test_missing_marker():
    row = _parse(hmd_text([]) + "  1900  45  .  12  12\n").rows[0]
    assert row.female is None and row.male == 12.0 and row.total == 12.0


def test_round_trip(hmd_pair):
    d, _, _, _ = hmd_pair
    table = parse_hmd_table(d)
    assert len(table) == 15
    again = _parse(format_hmd_table(table))
    assert again == table
    assert again.preamble == table.preamble
    assert format_hmd_table(again) == format_hmd_table(table)


def test_two_by_three_fixture_round_trip():
    rows = [(1950, "0", 10.5, None, 10.5), (1950, "1", 1.0, 2.0, 3.0), (1950, "2+", 0.0, 0.0, 0.0),
            (1951, "0", 9.25, 8.0, 17.25), (1951, "1", None, None, None), (1951, "2+", 4.0, 5.0, 9.0)]
    table = _parse(hmd_text(rows))
    assert [tuple(r) for r in table.rows] == rows
    assert _parse(format_hmd_table(table)) == table


def test_parsed_totals_match_fixture(hmd_pair):
    d, _, deaths, _ = hmd_pair
    table = parse_hmd_table(d)
    assert sum(r.total for r in table.rows) == pytest.approx(sum(r[4] for r in deaths))


@pytest.mark.parametrize("columns", ["  Year  Age  Female  Male\n", "  Year  Age  Male  Total\n"])
def test_missing_column(columns):
    with pytest.raises(HmdFormatError, match="missing column"):
        _parse(hmd_text([], columns=columns))


def test_malformed_row_reports_line():
    with pytest.raises(HmdFormatError) as err:
        _parse(hmd_text([(1900, "0", 1.0, 1.0, 2.0)]) + "  1900  1  x  1  2\n")
    assert err.value.line_number == 5


def test_wrong_field_count():
    with pytest.raises(HmdFormatError):
        _parse(hmd_text([]) + "  1900  1  2\n")


def test_duplicate_row():
    with pytest.raises(HmdFormatError, match="duplicate"):
        _parse(hmd_text([(1900, "0", 1.0, 1.0, 2.0), (1900, "0", 1.0, 1.0, 2.0)]))


def test_no_header():
    with pytest.raises(HmdFormatError):
        _parse("just text\n1900 0 1 1 2\n")


def test_to_mortality_data(hmd_pair):
    d, e, deaths, exposures = hmd_pair
    data = to_mortality_data(parse_hmd_table(d), parse_hmd_table(e), "female", (1900, 1902), (0, 4))
    assert data.shape == (3, 5)
    assert data.lattice.year_origin == 1900
    assert validate_data(data).is_valid
    assert data.deaths[1, 4] == round(deaths[5 + 4][2])
    assert data.exposures[2, 0] == exposures[10][2]


def test_total_is_female_plus_male(hmd_pair):
    d, e, _, _ = hmd_pair
    D, E = parse_hmd_table(d), parse_hmd_table(e)
    f, m, t = (to_mortality_data(D, E, s) for s in ("female", "male", "total"))
    assert np.allclose(f.exposures + m.exposures, t.exposures, atol=0.011)


def test_default_ranges_cover_file(hmd_pair):
    d, e, _, _ = hmd_pair
    data = to_mortality_data(parse_hmd_table(d), parse_hmd_table(e))
    assert data.shape == (3, 5) and data.lattice.ages[-1] == 4


def test_coverage_gap_for_absent_year(hmd_pair):
    d, e, _, _ = hmd_pair
    with pytest.raises(CoverageGapError) as err:
        to_mortality_data(parse_hmd_table(d), parse_hmd_table(e), "total", (1899, 1902), (0, 4))
    assert (1899, 0) in err.value.missing


def test_coverage_gap_for_missing_cells():
    # Belgium-style hole: a block of years with '.' entries
    rows = hmd_rows([1913, 1914, 1915], ["0", "1", "2+"], 3, 100.0)
    rows = [(y, a, None, None, None) if y == 1914 else (y, a, f, m, t) for y, a, f, m, t in rows]
    table = _parse(hmd_text(rows))
    with pytest.raises(CoverageGapError) as err:
        to_mortality_data(table, table, "male")
    assert sorted(err.value.missing) == [(1914, 0), (1914, 1), (1914, 2)]


@pytest.mark.parametrize("top, n_ages", [(110, 111), (111, 112)])
def test_sweden_sized_table(top, n_ages):
    # HMD files label 0..109 plus "110+"; a separate 111+ class gives the 112-age layout
    labels = [str(a) for a in range(top)] + [f"{top}+"]
    years = range(1751, 2015)
    body = "".join(f"{y} {a} 1.0 1.0 2.0\n" for y in years for a in labels)
    exp = "".join(f"{y} {a} 50.0 50.0 100.0\n" for y in years for a in labels)
    cols = "Year Age Female Male Total\n"
    data = to_mortality_data(_parse(cols + body), _parse(cols + exp), "total", (1751, 2014), (0, top))
    assert data.shape == (264, n_ages)
    assert data.lattice.n_knots == 264 * n_ages


def test_fractional_deaths_rounded(hmd_pair):
    d, e, _, _ = hmd_pair
    data = to_mortality_data(parse_hmd_table(d), parse_hmd_table(e), "total")
    assert np.array_equal(data.deaths, np.rint(data.deaths))


def test_invalid_sex(hmd_pair):
    d, e, _, _ = hmd_pair
    with pytest.raises(ValueError):
        to_mortality_data(parse_hmd_table(d), parse_hmd_table(e), "both")


def _dataset(years, first_year, seed, ages=4):
    rng = np.random.default_rng(seed)
    n = rng.uniform(100, 1000, size=(years, ages)).round()
    return make_data(rng.poisson(0.01 * n), n, first_year, 0)


def test_aggregate_doubles():
    ds = _dataset(5, 1990, 0)
    agg = aggregate([ds, ds])
    assert np.array_equal(agg.deaths, 2 * ds.deaths)
    assert np.array_equal(agg.exposures, 2 * ds.exposures)


def test_aggregate_intersects_years():
    norway = _dataset(2014 - 1846 + 1, 1846, 1)
    finland = _dataset(2014 - 1878 + 1, 1878, 2)
    agg = aggregate([norway, finland])
    assert (agg.lattice.years[0], agg.lattice.years[-1]) == (1878, 2014)
    assert np.array_equal(agg.deaths[0], norway.deaths[1878 - 1846] + finland.deaths[0])


def test_aggregate_errors():
    with pytest.raises(AggregationError):
        aggregate([_dataset(3, 1900, 0), _dataset(3, 1950, 1)])
    with pytest.raises(AggregationError):
        aggregate([_dataset(3, 1900, 0)])
    with pytest.raises(AggregationError):
        aggregate([_dataset(3, 1900, 0, ages=4), _dataset(3, 1900, 1, ages=5)])


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_aggregate_commutative_associative(seed):
    a, b, c = (_dataset(4, 2000, seed + i) for i in range(3))
    left = aggregate([aggregate([a, b]), c])
    right = aggregate([a, aggregate([c, b])])
    assert np.array_equal(left.deaths, right.deaths)
    assert np.array_equal(left.exposures, right.exposures)
    assert np.array_equal(aggregate([a, b]).deaths, aggregate([b, a]).deaths)


def test_hmd_tables_round_trip_through_data():
    ds = _dataset(3, 2001, 4)
    deaths, exposures = to_hmd_tables({"total": ds})
    back = to_mortality_data(_parse(format_hmd_table(deaths)), _parse(format_hmd_table(exposures)), "total")
    assert np.array_equal(back.deaths, ds.deaths) and np.array_equal(back.exposures, ds.exposures)
    assert deaths.rows[0].female is None
