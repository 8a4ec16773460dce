"""
pricing.py - Clearing prices from a matching (difference constraints) and price transforms
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property
from fractions import Fraction
from typing import Union

import networkx as nx

from market import (
    DimensionMismatch,
    MarketError,
    Matching,
    PriceVector,
    RationalLike,
    ValuationMatrix,
    social_welfare,
    to_rational,
)

log = logging.getLogger("marketclear.pricing")

SOURCE = 0


class NotPerfect(MarketError):
    def __init__(self, size: int, n: int) -> None:
        super().__init__(f"matching covers {size} of {n} buyers, a perfect matching is required")
        self.size = size
        self.n = n


class AlphaOutOfRange(MarketError):
    def __init__(self, alpha: Fraction) -> None:
        super().__init__(f"alpha={alpha} is outside [0, 1]")
        self.alpha = alpha


# ── Constraint digraph ────────────────────────────────────────────────────────

@dataclass(frozen=True)
class ConstraintDigraph:
    """Difference-constraint graph of a perfect matching.

    Node 0 is the source; node k (1..n) stands for buyer k-1 together with
    the product that buyer holds, ``held[k-1]``. After relabeling products so the
    matching is the diagonal, edge (j -> i) has length v'_ii - v'_ij.
    """

    n: int
    edges: tuple[tuple[int, int, Fraction], ...]
    held: tuple[int, ...]

    @cached_property
    def graph(self) -> nx.DiGraph:
        digraph = nx.DiGraph()
        digraph.add_nodes_from(range(self.n + 1))
        digraph.add_weighted_edges_from(self.edges)
        return digraph

    def length(self, tail: int, head: int) -> Fraction:
        return self.graph[tail][head]["weight"]


@dataclass(frozen=True)
class ShortestPaths:
    distances: tuple[Fraction, ...]     # L(1..n), source excluded
    predecessors: tuple[int, ...]


@dataclass(frozen=True)
class NegativeCycle:
    """Nodes j_1 -> j_2 -> ... -> j_m -> j_1 of the digraph."""

    nodes: tuple[int, ...]
    length: Fraction


ShortestPathResult = Union[ShortestPaths, NegativeCycle]


@dataclass(frozen=True)
class NotMaximum:
    """Certificate that a perfect matching does not maximize welfare.

    ``cycle`` lists buyers (0-based); along it each buyer takes the product
    previously held by the one before it. ``improved`` is the matching
    after that rotation and ``gain`` its welfare increase, -``length``.
    """

    cycle: tuple[int, ...]
    length: Fraction
    improved: Matching
    gain: Fraction
    permutation: tuple[int, ...]


def constraint_digraph(valuations: ValuationMatrix, matching: Matching) -> ConstraintDigraph:
    n = valuations.n
    matching.check_bounds(n)
    if not matching.is_perfect(n):
        raise NotPerfect(len(matching), n)
    held = tuple(product for _, product in matching)
    edges: list[tuple[int, int, Fraction]] = [(SOURCE, i + 1, Fraction(0)) for i in range(n)]
    for i in range(n):
        own = valuations[i, held[i]]
        for j in range(n):
            if i != j:
                edges.append((j + 1, i + 1, own - valuations[i, held[j]]))
    return ConstraintDigraph(n, tuple(edges), held)


def shortest_paths_or_cycle(digraph: ConstraintDigraph) -> ShortestPathResult:
    """Bellman-Ford from node 0, or a negative cycle with its exact length.

    Every node is reachable from the source, so every cycle of the digraph
    is seen by the search.
    """
    try:
        dist, paths = nx.single_source_bellman_ford(digraph.graph, SOURCE)
    except nx.NetworkXUnbounded:
        pass
    else:
        nodes = range(1, digraph.n + 1)
        return ShortestPaths(
            distances=tuple(Fraction(dist[k]) for k in nodes),
            predecessors=tuple(paths[k][-2] for k in nodes),
        )

    walk = nx.find_negative_cycle(digraph.graph, SOURCE)
    nodes = tuple(walk[:-1])    # the walk repeats its first node at the end
    length = sum(
        (digraph.length(nodes[k], nodes[(k + 1) % len(nodes)]) for k in range(len(nodes))),
        Fraction(0),
    )
    if length >= 0:
        raise AssertionError(f"extracted cycle {nodes} has nonnegative length {length}")
    return NegativeCycle(nodes, length)


def rotate(matching: Matching, cycle: tuple[int, ...]) -> Matching:
    """Each buyer on ``cycle`` takes the product held by the buyer before it."""
    held = matching.assignment()
    moved = dict(held)
    for k, buyer in enumerate(cycle):
        moved[buyer] = held[cycle[k - 1]]
    return Matching(tuple(moved.items()))


def prices_from_matching(
    valuations: ValuationMatrix, matching: Matching
) -> PriceVector | NotMaximum:
    """Clearing prices under which ``matching`` is induced, or proof it is not maximum.

    Solves v_{i,M(i)} - p_{M(i)} >= v_ik - p_k for all i, k as difference
    constraints by shortest paths from a source joined to every node with
    length 0; p_{M(i)} = L(i).
    """
    digraph = constraint_digraph(valuations, matching)
    result = shortest_paths_or_cycle(digraph)

    if isinstance(result, NegativeCycle):
        buyers = tuple(node - 1 for node in result.nodes)
        improved = rotate(matching, buyers)
        gain = social_welfare(valuations, improved) - social_welfare(valuations, matching)
        if gain != -result.length:
            raise AssertionError(f"rotation gain {gain} does not match cycle length {result.length}")
        log.debug("matching %s is not maximum, cycle %s gains %s", matching, [b + 1 for b in buyers], gain)
        return NotMaximum(buyers, result.length, improved, gain, digraph.held)

    prices = [Fraction(0)] * valuations.n
    for buyer, product in enumerate(digraph.held):
        prices[product] = result.distances[buyer]
    return PriceVector(tuple(prices))


def solve_by_cycle_canceling(
    valuations: ValuationMatrix, start: Matching | None = None
) -> tuple[PriceVector, Matching, int]:
    """Improve a perfect matching along negative cycles until it is priced.

    Returns the clearing prices, the final (maximum) matching and the
    number of rotations applied.
    """
    current = start if start is not None else Matching.from_assignment(range(valuations.n))
    steps = 0
    while True:
        outcome = prices_from_matching(valuations, current)
        if isinstance(outcome, PriceVector):
            log.info("cycle canceling finished after %d rotations", steps)
            return outcome, current, steps
        current = outcome.improved
        steps += 1


# ── Price transforms ───────────────────────────────────────────────────────────

def _require_same_length(p: PriceVector, q: PriceVector) -> None:
    if len(p) != len(q):
        raise DimensionMismatch(len(p), len(q))


def diagonal_shift(prices: PriceVector, t: RationalLike) -> PriceVector:
    step = to_rational(t)
    return PriceVector(tuple(x + step for x in prices))


def convex_combine(p: PriceVector, q: PriceVector, alpha: RationalLike) -> PriceVector:
    a = to_rational(alpha)
    if not 0 <= a <= 1:
        raise AlphaOutOfRange(a)
    _require_same_length(p, q)
    return PriceVector(tuple(a * x + (1 - a) * y for x, y in zip(p, q)))


def elementwise_max(p: PriceVector, q: PriceVector) -> PriceVector:
    _require_same_length(p, q)
    return PriceVector(tuple(max(x, y) for x, y in zip(p, q)))


def elementwise_min(p: PriceVector, q: PriceVector) -> PriceVector:
    _require_same_length(p, q)
    return PriceVector(tuple(min(x, y) for x, y in zip(p, q)))


def normalize(prices: PriceVector) -> PriceVector:
    """Shift so the cheapest product costs 0."""
    return diagonal_shift(prices, -min(prices))
