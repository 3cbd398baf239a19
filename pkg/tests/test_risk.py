import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from riskspc.risk import RiskOperator, aggregate, aggregate_rows, rank_pair

AVG, PES, OPT = RiskOperator.AVERAGE, RiskOperator.PESSIMISTIC, RiskOperator.OPTIMISTIC
costs = st.lists(st.floats(0, 1e6, allow_nan=False), min_size=1, max_size=64)


def test_worked_example():
    assert aggregate([1, 8, 9], PES) == 9
    assert aggregate([1, 8, 9], OPT) == 1
    assert aggregate([1, 8, 9], AVG) == 6
    for op in RiskOperator:
        assert aggregate([4, 4, 4], op) == 4
        assert aggregate([2.5], op) == 2.5


def test_rank_pair():
    a, b = [1, 8, 9], [4, 4, 4]
    assert rank_pair(a, b, PES) == "B"
    assert rank_pair(a, b, OPT) == "A"
    assert rank_pair(a, b, AVG) == "B"
    assert rank_pair(b, b, PES) == "A"
    with pytest.raises(ValueError):
        rank_pair([1], [1, 2], AVG)


def test_rejects_bad_input():
    with pytest.raises(ValueError):
        aggregate([], AVG)
    with pytest.raises(ValueError):
        aggregate([1.0, np.nan], OPT)
    with pytest.raises(ValueError):
        aggregate([1.0, np.inf], PES)
    with pytest.raises(ValueError):
        aggregate([[1.0]], PES)


def test_parse():
    assert RiskOperator.parse("Optimistic") is OPT
    assert RiskOperator.parse(PES) is PES
    assert str(AVG) == "average"
    with pytest.raises(ValueError):
        RiskOperator.parse("cvar")


@settings(max_examples=200)
@given(costs)
def test_ordering(c):
    assert aggregate(c, OPT) <= aggregate(c, AVG) <= aggregate(c, PES)


@settings(max_examples=100)
@given(costs, st.randoms())
def test_permutation_invariance(c, rnd):
    p = list(c)
    rnd.shuffle(p)
    assert aggregate(p, OPT) == aggregate(c, OPT)
    assert aggregate(p, PES) == aggregate(c, PES)
    assert aggregate(p, AVG) == pytest.approx(aggregate(c, AVG), rel=1e-12)


@settings(max_examples=100)
@given(costs, st.data())
def test_monotone(c, data):
    i = data.draw(st.integers(0, len(c) - 1))
    bump = data.draw(st.floats(0, 1e3))
    d = list(c)
    d[i] += bump
    for op in (OPT, PES):
        assert aggregate(d, op) >= aggregate(c, op)
    assert aggregate(d, AVG) >= aggregate(c, AVG) - 1e-9 * max(1.0, max(c))


def test_rows_match_scalar_aggregate():
    m = np.random.default_rng(0).uniform(0, 10, (16, 5))
    for op in RiskOperator:
        rows = aggregate_rows(m, op)
        assert all(rows[k] == aggregate(m[k], op) for k in range(16))
