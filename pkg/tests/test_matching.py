import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings

from market import (
    Matching,
    PriceVector,
    ValuationMatrix,
    is_market_clearing,
    preferred_graph,
    social_welfare,
)
from matching import (
    CapExceeded,
    MatchingSet,
    OracleCapExceeded,
    brute_force_max_matchings,
    enumerate_perfect_matchings,
    solve_auction,
)
from strategies import valuation_matrices


def all_perfect_matchings(graph):
    return MatchingSet.of(
        Matching.from_assignment(perm)
        for perm in itertools.permutations(range(graph.n))
        if all(graph.has_edge(i, j) for i, j in enumerate(perm))
    )


# ── MatchingSet ───────────────────────────────────────────────────────────────

def test_matching_set_is_canonical():
    a = Matching.from_assignment([0, 1])
    b = Matching.from_assignment([1, 0])
    assert MatchingSet.of([b, a, b]) == MatchingSet.of([a, b])
    assert len(MatchingSet.of([b, a, b])) == 2
    assert MatchingSet.of([a]).issubset(MatchingSet.of([a, b]))
    assert not MatchingSet.of([a, b]).issubset(MatchingSet.of([b]))


# ── Auction ───────────────────────────────────────────────────────────────────

def test_auction_single_buyer():
    prices, matching, trace = solve_auction(ValuationMatrix.of([[5]]))
    assert prices == PriceVector.of([0])
    assert matching == Matching.of([(0, 0)])
    assert len(trace) == 0


def test_auction_zero_prices_already_clear():
    prices, matching, trace = solve_auction(ValuationMatrix.of([[1, 0], [0, 1]]))
    assert prices == PriceVector.zeros(2)
    assert matching == Matching.of([(0, 0), (1, 1)])
    assert len(trace) == 0


def test_auction_example(example):
    result = solve_auction(example)
    assert is_market_clearing(example, result.prices)
    assert result.matching == Matching.of([(0, 0), (1, 2), (2, 1)])
    assert social_welfare(example, result.matching) == 23
    assert min(result.prices) == 0
    for rnd in result.trace.rounds:
        assert len(rnd.neighborhood) < len(rnd.constricted)
        assert set(rnd.raised) == set(rnd.neighborhood)


def test_auction_fractional_valuations():
    v = ValuationMatrix.of([["1/2", "1/3"], ["1/2", "1/6"]])
    result = solve_auction(v)
    assert result.scale == 6
    assert is_market_clearing(v, result.prices)
    assert all(isinstance(p, Fraction) for p in result.prices)
    assert social_welfare(v, result.matching) == Fraction(5, 6)


@settings(max_examples=80, deadline=None)
@given(valuation_matrices(max_n=5))
def test_auction_always_clears(v):
    result = solve_auction(v)
    assert is_market_clearing(v, result.prices)
    assert result.matching.contained_in(preferred_graph(v, result.prices))
    assert min(result.prices) == 0
    _, best = brute_force_max_matchings(v)
    assert social_welfare(v, result.matching) == best


# ── Oracle ────────────────────────────────────────────────────────────────────

def test_oracle_single():
    found, best = brute_force_max_matchings(ValuationMatrix.of([[5]]))
    assert found == MatchingSet.of([Matching.of([(0, 0)])])
    assert best == 5


def test_oracle_symmetric():
    found, best = brute_force_max_matchings(ValuationMatrix.of([[1, 1], [1, 1]]))
    assert len(found) == 2
    assert best == 2


def test_oracle_example(example):
    found, best = brute_force_max_matchings(example)
    assert found == MatchingSet.of([Matching.of([(0, 0), (1, 2), (2, 1)])])
    assert best == 23
    welfare = sorted(social_welfare(example, Matching.from_assignment(p)) for p in itertools.permutations(range(3)))
    assert welfare == [14, 15, 16, 17, 21, 23]


def test_oracle_cap():
    v = ValuationMatrix.of([[0] * 4] * 4)
    with pytest.raises(OracleCapExceeded):
        brute_force_max_matchings(v, cap=3)


@settings(max_examples=60, deadline=None)
@given(valuation_matrices(max_n=5))
def test_oracle_consistency(v):
    found, best = brute_force_max_matchings(v)
    assert found
    assert all(social_welfare(v, m) == best for m in found)
    assert all(
        social_welfare(v, Matching.from_assignment(p)) <= best
        for p in itertools.permutations(range(v.n))
    )


# ── Enumeration ───────────────────────────────────────────────────────────────

def test_enumerate_identity():
    graph = preferred_graph(ValuationMatrix.of([[1, 0], [0, 1]]), PriceVector.zeros(2))
    assert enumerate_perfect_matchings(graph) == MatchingSet.of([Matching.of([(0, 0), (1, 1)])])


def test_enumerate_complete_graph():
    graph = preferred_graph(ValuationMatrix.of([[3] * 3] * 3), PriceVector.zeros(3))
    found = enumerate_perfect_matchings(graph)
    assert len(found) == 6


def test_enumerate_example(example):
    graph = preferred_graph(example, PriceVector.of([3, 1, 0]))
    assert enumerate_perfect_matchings(graph) == MatchingSet.of([Matching.of([(0, 0), (1, 2), (2, 1)])])


def test_enumerate_cap():
    graph = preferred_graph(ValuationMatrix.of([[1] * 4] * 4), PriceVector.zeros(4))
    found = enumerate_perfect_matchings(graph, cap=5)
    assert isinstance(found, CapExceeded)
    assert found.cap == 5
    assert len(found.partial) == 5
    assert found.partial.issubset(all_perfect_matchings(graph))


def test_enumerate_without_perfect_matching():
    graph = preferred_graph(ValuationMatrix.of([[2, 0], [2, 0]]), PriceVector.zeros(2))
    assert enumerate_perfect_matchings(graph) == MatchingSet()


@settings(max_examples=100, deadline=None)
@given(valuation_matrices(max_n=6, high=4))
def test_enumeration_matches_permutation_filter(v):
    # auction prices give dense graphs with many ties on small value ranges
    graph = preferred_graph(v, solve_auction(v).prices)
    assert enumerate_perfect_matchings(graph) == all_perfect_matchings(graph)


@settings(max_examples=100, deadline=None)
@given(valuation_matrices(max_n=5))
def test_clearing_prices_induce_only_maximum(v):
    prices = solve_auction(v).prices
    induced = enumerate_perfect_matchings(preferred_graph(v, prices))
    maximum, best = brute_force_max_matchings(v)
    assert induced
    assert induced.issubset(maximum)
    assert all(social_welfare(v, m) == best for m in induced)
