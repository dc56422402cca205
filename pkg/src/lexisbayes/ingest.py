"""Human Mortality Database 1x1 tables: parsing, alignment and aggregation.

HMD period files (``Deaths_1x1.txt``, ``Exposures_1x1.txt``) start with free
header lines, followed by a column header ``Year Age Female Male Total`` and
whitespace separated rows. Missing values are written as ``.`` and the open
age class as ``110+``.
"""
from __future__ import annotations

import io
import logging
import os
import re
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .exceptions import (
    AggregationError,
    CoverageGapError,
    DataValidationError,
    HmdFormatError,
)
from .lattice import MortalityData, build_lattice, validate_data

logger = logging.getLogger(__name__)

SEXES = ("female", "male", "total")
REQUIRED_COLUMNS = ("Year", "Age", "Female", "Male", "Total")
_AGE_RE = re.compile(r"^\d+\+?$")


class HmdRow(NamedTuple):
    year: int
    age_label: str
    female: float | None
    male: float | None
    total: float | None

    @property
    def age(self) -> int:
        return age_index(self.age_label)

    def value(self, sex):
        return getattr(self, sex)


def age_index(label: str) -> int:
    """``"45"`` -> 45, ``"110+"`` -> 110."""
    return int(label.rstrip("+"))


@dataclass
class HmdTable:
    rows: list = field(default_factory=list)
    preamble: list = field(default_factory=list)

    def __post_init__(self):
        self._index = {}
        for r in self.rows:
            key = (r.year, r.age_label)
            if key in self._index:
                raise HmdFormatError(f"duplicate row for year {r.year}, age {r.age_label}")
            self._index[key] = r

    def __len__(self):
        return len(self.rows)

    def __eq__(self, other):
        if not isinstance(other, HmdTable):
            return NotImplemented
        return self.rows == other.rows

    @property
    def years(self) -> list:
        return sorted({r.year for r in self.rows})

    @property
    def age_labels(self) -> list:
        return sorted({r.age_label for r in self.rows}, key=age_index)

    def get(self, year, age):
        """Row for ``year`` and integer ``age`` (the top age matches its ``+`` label)."""
        row = self._index.get((year, str(age)))
        if row is None:
            row = self._index.get((year, f"{age}+"))
        return row

    def incomplete_years(self) -> list:
        """Years whose age labels differ from the union over all years."""
        labels = set(self.age_labels)
        per_year = {}
        for r in self.rows:
            per_year.setdefault(r.year, set()).add(r.age_label)
        return [y for y in sorted(per_year) if per_year[y] != labels]


def _parse_value(token, line_number):
    if token == ".":
        return None
    try:
        return float(token)
    except ValueError:
        raise HmdFormatError(f"bad numeric value {token!r}", line_number) from None


def parse_hmd_table(source) -> HmdTable:
    """Parse an HMD 1x1 table from a path or a text stream."""
    if isinstance(source, (str, os.PathLike)):
        with open(source, encoding="utf-8") as fh:
            return parse_hmd_table(fh)

    preamble = []
    columns = None
    rows = []
    for line_number, raw in enumerate(source, start=1):
        line = raw.strip()
        tokens = line.split()
        if columns is None:
            if "Year" in tokens and "Age" in tokens:
                missing = [c for c in REQUIRED_COLUMNS if c not in tokens]
                if missing:
                    raise HmdFormatError(f"missing column(s) {', '.join(missing)}", line_number)
                columns = {name: tokens.index(name) for name in REQUIRED_COLUMNS}
                width = len(tokens)
            elif line:
                preamble.append(line)
            continue
        if not tokens:
            continue
        if len(tokens) != width:
            raise HmdFormatError(f"expected {width} fields, found {len(tokens)}", line_number)
        year_tok = tokens[columns["Year"]]
        age_tok = tokens[columns["Age"]]
        if not year_tok.lstrip("-").isdigit():
            raise HmdFormatError(f"bad year {year_tok!r}", line_number)
        if not _AGE_RE.match(age_tok):
            raise HmdFormatError(f"bad age label {age_tok!r}", line_number)
        rows.append(HmdRow(
            int(year_tok), age_tok,
            _parse_value(tokens[columns["Female"]], line_number),
            _parse_value(tokens[columns["Male"]], line_number),
            _parse_value(tokens[columns["Total"]], line_number),
        ))
    if columns is None:
        raise HmdFormatError("no 'Year Age Female Male Total' column header found")
    return HmdTable(rows, preamble)


def _fmt(v):
    return "." if v is None else repr(float(v))


def format_hmd_table(table: HmdTable) -> str:
    """Serialise a table in HMD layout; floats use their shortest round-trip repr."""
    out = io.StringIO()
    for line in table.preamble:
        out.write(line + "\n")
    out.write("\n")
    out.write(f"{'Year':>7}{'Age':>13}{'Female':>24}{'Male':>24}{'Total':>24}\n")
    for r in table.rows:
        out.write(f"{r.year:>7}{r.age_label:>13}{_fmt(r.female):>24}{_fmt(r.male):>24}{_fmt(r.total):>24}\n")
    return out.getvalue()


def write_hmd_table(path, table: HmdTable):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_hmd_table(table))


def _check_sex(sex):
    if sex not in SEXES:
        raise ValueError(f"sex must be one of {SEXES}, got {sex!r}")


def _default_ages(table):
    ages = [age_index(a) for a in table.age_labels]
    return (min(ages), max(ages))


def to_mortality_data(deaths: HmdTable, exposures: HmdTable, sex="total", years=None, ages=None,
                      label=None) -> MortalityData:
    """Align deaths and exposures for one sex on an inclusive year/age rectangle.

    Deaths are rounded to the nearest integer; knots with zero exposure get
    zero deaths. Raises :class:`CoverageGapError` listing every (year, age)
    cell missing from either table.
    """
    _check_sex(sex)
    if years is None:
        common = sorted(set(deaths.years) & set(exposures.years))
        if not common:
            raise CoverageGapError([])
        years = (common[0], common[-1])
    if ages is None:
        ages = _default_ages(exposures)
    y0, y1 = int(years[0]), int(years[1])
    a0, a1 = int(ages[0]), int(ages[1])
    if y1 < y0 or a1 < a0:
        raise ValueError(f"empty range years={years} ages={ages}")
    lattice = build_lattice(y1 - y0 + 1, a1 - a0 + 1, y0, a0)
    d = np.zeros(lattice.shape)
    n = np.zeros(lattice.shape)
    missing = []
    for t, year in enumerate(range(y0, y1 + 1)):
        for j, age in enumerate(range(a0, a1 + 1)):
            rd, rn = deaths.get(year, age), exposures.get(year, age)
            vd = None if rd is None else rd.value(sex)
            vn = None if rn is None else rn.value(sex)
            if vd is None or vn is None:
                missing.append((year, age))
                continue
            d[t, j], n[t, j] = vd, vn
    if missing:
        raise CoverageGapError(missing)

    rounded = np.rint(d)
    fractional = int(np.count_nonzero(np.abs(rounded - d) > 1e-6))
    if fractional:
        logger.debug("rounded %d fractional death counts to integers", fractional)
    forced = (n == 0) & (rounded != 0)
    if forced.any():
        logger.info("set deaths to 0 at %d zero-exposure knots", int(forced.sum()))
        rounded[forced] = 0.0
    if label is None:
        label = sex
    data = MortalityData(lattice, rounded, n, label)
    report = validate_data(data)
    if not report.is_valid:
        raise DataValidationError(f"HMD data invalid: {report.summary()}", report)
    return data


def aggregate(datasets, label=None) -> MortalityData:
    """Sum several populations over their shared years (identical age domains required)."""
    datasets = list(datasets)
    if len(datasets) < 2:
        raise AggregationError("aggregation needs at least two datasets")
    first = datasets[0].lattice
    for ds in datasets[1:]:
        if (ds.lattice.age_origin, ds.lattice.n_ages) != (first.age_origin, first.n_ages):
            raise AggregationError(
                f"age domain mismatch: {ds.label!r} covers ages {ds.lattice.age_origin}.."
                f"{ds.lattice.age_origin + ds.lattice.n_ages - 1}, expected {first.age_origin}.."
                f"{first.age_origin + first.n_ages - 1}"
            )
    lo = max(ds.lattice.year_origin for ds in datasets)
    hi = min(ds.lattice.year_origin + ds.lattice.n_years - 1 for ds in datasets)
    if hi < lo:
        raise AggregationError("datasets share no calendar year")
    deaths = np.zeros((hi - lo + 1, first.n_ages))
    exposures = np.zeros_like(deaths)
    for ds in datasets:
        start = lo - ds.lattice.year_origin
        deaths += ds.deaths[start:start + deaths.shape[0]]
        exposures += ds.exposures[start:start + deaths.shape[0]]
    lattice = build_lattice(hi - lo + 1, first.n_ages, lo, first.age_origin, min_extent=1)
    if label is None:
        label = " + ".join(ds.label or f"dataset{i}" for i, ds in enumerate(datasets))
    return MortalityData(lattice, deaths, exposures, label)


def to_hmd_tables(datasets_by_sex: dict, preamble=()):
    """Build (deaths, exposures) HMD tables from up to three per-sex datasets.

    All datasets must share one lattice. Absent sexes are written as missing.
    The top age gets a ``+`` label.
    """
    if not datasets_by_sex:
        raise ValueError("no datasets given")
    for sex in datasets_by_sex:
        _check_sex(sex)
    lattices = {ds.lattice for ds in datasets_by_sex.values()}
    if len(lattices) != 1:
        raise ValueError("datasets must share a lattice")
    lattice = lattices.pop()
    top = lattice.age_origin + lattice.n_ages - 1
    tables = []
    for attr in ("deaths", "exposures"):
        rows = []
        for t, year in enumerate(lattice.years):
            for j, age in enumerate(lattice.ages):
                vals = {}
                for sex in SEXES:
                    ds = datasets_by_sex.get(sex)
                    vals[sex] = None if ds is None else float(getattr(ds, attr)[t, j])
                label = f"{age}+" if age == top else str(age)
                rows.append(HmdRow(int(year), label, vals["female"], vals["male"], vals["total"]))
        tables.append(HmdTable(rows, list(preamble)))
    return tuple(tables)
