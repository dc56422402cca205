import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from test_sampler import _fake_output

from lexisbayes.diagnostics import (
    acceptance_summary,
    convergence_report,
    psrf,
    write_trace_csv,
)
from lexisbayes.exceptions import DegenerateTraceError


def _psrf_by_hand(chains):
    chains = [list(map(float, c)) for c in chains]
    m, K = len(chains), len(chains[0])
    means = [sum(c) / K for c in chains]
    grand = sum(means) / m
    B = K / (m - 1) * sum((mu - grand) ** 2 for mu in means)
    W = sum(sum((v - mu) ** 2 for v in c) / (K - 1) for c, mu in zip(chains, means)) / m
    return math.sqrt(((K - 1) / K * W + B / K) / W)


def test_identical_chains():
    trace = np.sin(np.arange(50))
    assert psrf([trace, trace, trace]) == pytest.approx(math.sqrt(49 / 50), rel=1e-12)


def test_same_distribution_near_one():
    rng = np.random.default_rng(0)
    assert psrf(rng.normal(size=(4, 20_000))) == pytest.approx(1.0, abs=0.01)


def test_separated_chains():
    rng = np.random.default_rng(1)
    traces = [rng.normal(0, 0.1, 100), rng.normal(100, 0.1, 100)]
    value = psrf(traces)
    assert value == pytest.approx(_psrf_by_hand(traces), rel=1e-12)
    assert value > 100


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 5), st.integers(10, 60), st.floats(-1e3, 1e3),
       st.floats(1e-2, 1e2))
def test_invariances(seed, m, K, shift, scale):
    rng = np.random.default_rng(seed)
    traces = rng.normal(size=(m, K)) + rng.normal(size=(m, 1))
    base = psrf(traces)
    assert base == pytest.approx(_psrf_by_hand(traces), rel=1e-9)
    assert psrf(traces + shift) == pytest.approx(base, rel=1e-6)
    assert psrf(traces * scale) == pytest.approx(base, rel=1e-9)
    assert psrf(traces[rng.permutation(m)]) == pytest.approx(base, rel=1e-12)


def test_psrf_preconditions():
    with pytest.raises(ValueError):
        psrf([np.arange(20.0)])
    with pytest.raises(ValueError):
        psrf([np.arange(5.0), np.arange(5.0)])
    with pytest.raises(DegenerateTraceError):
        psrf([np.ones(20), np.arange(20.0)])


def test_acceptance_all_accepted():
    s = acceptance_summary(np.full((3, 3), 50), np.full((3, 3), 50), 50)
    assert s.global_x == 1.0 and s.global_z == 1.0 and s.flagged


def test_acceptance_quarter():
    s = acceptance_summary(np.full((3, 3), 25), np.full((3, 3), 25), 100)
    assert s.global_x == 0.25 and not s.flagged
    assert s.min_x == s.max_x == s.median_z == 0.25


def test_acceptance_mixed_is_pooled():
    acc = np.array([[0, 10], [30, 100]])
    s = acceptance_summary(acc, acc, 100)
    assert s.global_x == pytest.approx(140 / 400)
    assert s.min_x == 0.0 and s.max_x == 1.0


def test_convergence_report_single_chain_has_no_psrf():
    rep = convergence_report([_fake_output(np.zeros((2, 2)), np.zeros((2, 2)), np.arange(20.0), np.arange(20.0))])
    assert rep.psrf_gamma_x is None and rep.converged is None
    assert rep.as_dict()["n_chains"] == 1


def test_convergence_report_two_chains():
    rng = np.random.default_rng(4)
    outs = [_fake_output(np.zeros((2, 2)), np.zeros((2, 2)), rng.normal(5, 1, 500), rng.normal(9, 1, 500))
            for _ in range(2)]
    rep = convergence_report(outs)
    assert rep.psrf_gamma_x < 1.1 and rep.psrf_gamma_z < 1.1 and rep.converged is True


def test_trace_csv(tmp_path):
    path = tmp_path / "t.csv"
    write_trace_csv(path, [np.array([1.0, 2.0]), np.array([0.5, 0.25])], ["gamma_x", "gamma_z"])
    lines = path.read_text().splitlines()
    assert lines[0].split(",")[-2:] == ["gamma_x", "gamma_z"]
    assert len(lines) == 3
