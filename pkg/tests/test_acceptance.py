"""Seeded end-to-end runs of the structural checks on 200 small random markets."""

import itertools
import math
import random
from fractions import Fraction

import pytest

from market import Matching, PriceVector, is_market_clearing, preferred_graph, social_welfare
from matching import brute_force_max_matchings, solve_auction
from pricing import (
    NotMaximum,
    convex_combine,
    diagonal_shift,
    elementwise_max,
    elementwise_min,
    prices_from_matching,
    rotate,
)
from verify import induced_matchings, random_market

INSTANCES = 200
DUPLICATED_EVERY = 4    # every 4th instance copies one buyer's row onto another
SEED = 20240601


@pytest.fixture(scope="module")
def instances():
    rng = random.Random(SEED)
    cases = []
    for k in range(INSTANCES):
        if k % DUPLICATED_EVERY == 0:
            v = random_market(rng, n=rng.randint(2, 7), duplicate_row=True)
        else:
            v = random_market(rng)
        maximum, best = brute_force_max_matchings(v)
        cases.append((v, solve_auction(v).prices, maximum, best))
    return cases


def matching_prices(v, maximum, limit=2):
    vectors = []
    for m in itertools.islice(maximum, limit):
        priced = prices_from_matching(v, m)
        assert isinstance(priced, PriceVector)
        vectors.append(priced)
    return vectors


def test_sizes_cover_range(instances):
    sizes = {v.n for v, _, _, _ in instances}
    assert sizes == set(range(1, 8))


def test_auction_prices_induce_only_maximum(instances):
    for v, p, maximum, best in instances:
        assert is_market_clearing(v, p)
        induced = induced_matchings(v, p)
        assert induced
        assert induced.issubset(maximum)
        assert all(social_welfare(v, m) == best for m in induced)


def test_auction_prices_induce_every_maximum(instances):
    several = 0
    for v, p, maximum, _ in instances:
        assert induced_matchings(v, p) == maximum
        several += len(maximum) >= 2
    assert several >= 30


def test_clearing_vectors_agree_on_induced_matchings(instances, example):
    pairs_tried = 0
    graphs_differ = 0
    for v, p, maximum, best in instances:
        if len(maximum) < 2:
            continue
        vectors = [p, *matching_prices(v, maximum)]
        induced = [induced_matchings(v, r) for r in vectors]
        for r, found in zip(vectors, induced):
            assert is_market_clearing(v, r)
            assert found == maximum
            assert all(social_welfare(v, m) == best for m in found)
        for a, b in itertools.combinations(range(len(vectors)), 2):
            pairs_tried += 1
            assert induced[a] == induced[b]
            graphs_differ += preferred_graph(v, vectors[a]) != preferred_graph(v, vectors[b])

    p, q = PriceVector.of([3, 1, 0]), PriceVector.of([5, 1, 0])
    assert induced_matchings(example, p) == induced_matchings(example, q)
    graphs_differ += preferred_graph(example, p) != preferred_graph(example, q)

    assert pairs_tried >= 90
    assert graphs_differ >= 1


def test_transforms_keep_prices_clearing(instances):
    rng = random.Random(SEED + 1)
    for v, p, maximum, best in instances[:100]:
        bound = max(int(v.max_abs()), 1)
        q = matching_prices(v, maximum, limit=1)[0]
        q = diagonal_shift(q, Fraction(rng.randint(-bound, bound), rng.randint(1, 5)))
        transformed = [elementwise_max(p, q), elementwise_min(p, q)]
        for _ in range(10):
            t = Fraction(rng.randint(-6 * bound, 6 * bound), rng.randint(1, 6))
            alpha = Fraction(rng.randint(0, 12), 12)
            transformed += [diagonal_shift(p, t), diagonal_shift(q, t), convex_combine(p, q, alpha)]
        for r in transformed:
            assert is_market_clearing(v, r)
        for m in induced_matchings(v, transformed[0]):
            assert social_welfare(v, m) == best


def test_non_maximum_matchings_are_refuted(instances):
    rng = random.Random(SEED + 2)
    refuted = 0
    for v, _, maximum, best in instances:
        if len(maximum) == math.factorial(v.n):
            continue
        while True:
            perm = list(range(v.n))
            rng.shuffle(perm)
            matching = Matching.from_assignment(perm)
            if matching not in maximum:
                break
        outcome = prices_from_matching(v, matching)
        assert isinstance(outcome, NotMaximum)
        rotated = rotate(matching, outcome.cycle)
        assert rotated == outcome.improved
        assert social_welfare(v, rotated) > social_welfare(v, matching)
        assert social_welfare(v, rotated) <= best
        refuted += 1
        if refuted == 100:
            break
    assert refuted == 100
