import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from lexisbayes.lattice import MortalityData, build_lattice  # noqa: E402

HMD_HEADER = "Sweden, Deaths (period 1x1)\tLast modified: 01 Jan 2020;  Methods Protocol: v6 (2017)\n\n"
HMD_COLUMNS = "  Year          Age             Female            Male           Total\n"


def hmd_text(rows, header=HMD_HEADER, columns=HMD_COLUMNS):
    """Render ``(year, age_label, female, male, total)`` tuples in HMD 1x1 layout."""
    def cell(v):
        return "." if v is None else f"{v:.2f}"
    body = "".join(f"  {y}  {a:>11}  {cell(f):>15}  {cell(m):>14}  {cell(t):>14}\n" for y, a, f, m, t in rows)
    return header + columns + body


def hmd_rows(years, labels, seed, scale):
    rng = np.random.default_rng(seed)
    rows = []
    for y in years:
        for a in labels:
            f = round(float(rng.uniform(0, scale)), 2)
            m = round(float(rng.uniform(0, scale)), 2)
            rows.append((y, a, f, m, round(f + m, 2)))
    return rows


@pytest.fixture
def hmd_pair(tmp_path):
    """Deaths/exposures files for 1900-1902, ages 0..3 and '4+'."""
    labels = ["0", "1", "2", "3", "4+"]
    years = [1900, 1901, 1902]
    deaths = hmd_rows(years, labels, 1, 40.0)
    exposures = hmd_rows(years, labels, 2, 5000.0)
    d = tmp_path / "Deaths_1x1.txt"
    e = tmp_path / "Exposures_1x1.txt"
    d.write_text(hmd_text(deaths))
    e.write_text(hmd_text(exposures))
    return d, e, deaths, exposures


def make_data(deaths, exposures, year_origin=0, age_origin=0, min_extent=1):
    deaths = np.asarray(deaths, dtype=float)
    lat = build_lattice(deaths.shape[0], deaths.shape[1], year_origin, age_origin, min_extent=min_extent)
    return MortalityData(lat, deaths, np.asarray(exposures, dtype=float))


# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE_RESULTS = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        passed, detail = ACCEPTANCE_RESULTS[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")
