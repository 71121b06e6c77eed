import numpy as np
import pytest
from hypothesis import given, strategies as st

from ruledistill.core import DataSet, EmptyDataError, FeatureSchema, Instance
from ruledistill.heuristics import HeuristicCounts, majority_class, wra, wra_set


def test_wra_hand_example():
    c = HeuristicCounts(E=10, E_hat=5, P=6, P_hat=4, N=4, N_hat=1)
    assert wra(c) == pytest.approx(0.1, abs=1e-15)


def test_wra_set_hand_example():
    schema = FeatureSchema.grid(("A", "B"))
    sets = [{"A"}, {"A", "B"}, {"B"}, {"A"}] + [{"A"}] * 3 + [{"B"}] * 3
    data = DataSet(schema, tuple(Instance((float(i), 0.0), s) for i, s in enumerate(sets)))
    covered = np.arange(10) < 4
    c = HeuristicCounts.of("A", covered, data)
    assert (c.E, c.E_hat, c.P, c.P_hat) == (10, 4, 6, 3)
    assert wra_set(c) == pytest.approx(0.06, abs=1e-15)


def test_zero_coverage_scores_zero_and_empty_data_raises():
    assert wra_set(HeuristicCounts(E=5, E_hat=0, P=2, P_hat=0)) == 0.0
    assert wra(HeuristicCounts(E=5, E_hat=0, P=2, P_hat=0, N=3, N_hat=0)) == 0.0
    with pytest.raises(EmptyDataError):
        wra_set(HeuristicCounts(E=0, E_hat=0, P=0, P_hat=0))
    with pytest.raises(EmptyDataError):
        wra(HeuristicCounts(E=0, E_hat=0, P=0, P_hat=0))


def test_covering_everything_scores_zero():
    assert wra_set(HeuristicCounts(E=8, E_hat=8, P=5, P_hat=5)) == 0.0
    assert wra(HeuristicCounts(E=8, E_hat=8, P=5, P_hat=5, N=3, N_hat=3)) == 0.0


def test_counts_are_validated():
    with pytest.raises(ValueError):
        HeuristicCounts(E=3, E_hat=4, P=1, P_hat=1)
    with pytest.raises(ValueError):
        HeuristicCounts(E=5, E_hat=2, P=1, P_hat=2)


@st.composite
def counts(draw):
    E = draw(st.integers(1, 60))
    P = draw(st.integers(0, E))
    E_hat = draw(st.integers(0, E))
    lo = max(0, E_hat - (E - P))
    P_hat = draw(st.integers(lo, min(E_hat, P)))
    return HeuristicCounts(E=E, E_hat=E_hat, P=P, P_hat=P_hat, N=E - P, N_hat=E_hat - P_hat)


@given(counts())
def test_wra_set_bounds(c):
    assert -0.25 - 1e-12 <= wra_set(c) <= 0.25 + 1e-12


@given(counts())
def test_single_label_counts_make_both_scores_agree(c):
    assert abs(wra_set(c) - wra(c)) <= 1e-12


@given(counts(), st.integers(2, 5))
def test_wra_set_invariant_under_duplication(c, k):
    big = HeuristicCounts(E=k * c.E, E_hat=k * c.E_hat, P=k * c.P, P_hat=k * c.P_hat)
    assert abs(wra_set(big) - wra_set(c)) <= 1e-12


def test_majority_ties_go_to_global_frequency_then_schema_order():
    schema = FeatureSchema.grid(("A", "B", "C"))
    mk = lambda sets: DataSet(schema, tuple(Instance((0.0, 0.0), s) for s in sets))
    covered = mk([{"A"}, {"B"}])
    assert majority_class(covered, mk([{"B"}, {"B"}, {"A"}])) == "B"
    assert majority_class(covered) == "A"
    assert majority_class(mk([{"A", "C"}, {"C"}])) == "C"
    with pytest.raises(EmptyDataError):
        majority_class(mk([]))
