"""
matching.py - Maximum-weight perfect matchings: auction, brute-force oracle, enumeration
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator

from market import (
    MarketError,
    Matching,
    PreferredProductGraph,
    PriceVector,
    ValuationMatrix,
    find_perfect_matching,
    preferred_graph,
)

log = logging.getLogger("marketclear.matching")

DEFAULT_ORACLE_CAP = 8
DEFAULT_ENUMERATION_CAP = 10_000


class OracleCapExceeded(MarketError):
    def __init__(self, n: int, cap: int) -> None:
        super().__init__(f"market size {n} is above the brute-force limit {cap} ({n}! permutations)")
        self.n = n
        self.cap = cap


# ── Types ─────────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class MatchingSet:
    """Canonically ordered set of perfect matchings of one market.

    Pairs inside a matching are sorted by buyer and the matchings are
    sorted lexicographically, so two sets compare equal exactly when they
    hold the same matchings.
    """

    matchings: tuple[Matching, ...] = ()

    def __post_init__(self) -> None:
        members = tuple(sorted(set(self.matchings)))
        if len({len(m) for m in members}) > 1:
            raise MarketError("matching set mixes matchings of different sizes")
        object.__setattr__(self, "matchings", members)

    @classmethod
    def of(cls, matchings: Iterable[Matching]) -> "MatchingSet":
        return cls(tuple(matchings))

    def __len__(self) -> int:
        return len(self.matchings)

    def __iter__(self) -> Iterator[Matching]:
        return iter(self.matchings)

    def __contains__(self, matching: object) -> bool:
        return matching in self.matchings

    def issubset(self, other: "MatchingSet") -> bool:
        return set(self.matchings) <= set(other.matchings)

    def difference(self, other: "MatchingSet") -> "MatchingSet":
        return MatchingSet(tuple(m for m in self.matchings if m not in other))


@dataclass(frozen=True)
class CapExceeded:
    """More than ``cap`` perfect matchings exist; ``partial`` holds the first ``cap``."""

    cap: int
    partial: MatchingSet


@dataclass(frozen=True)
class AuctionRound:
    constricted: frozenset[int]
    neighborhood: frozenset[int]
    raised: tuple[int, ...]
    prices: PriceVector          # snapshot after the raise, original units
    normalized: bool = False     # all prices were positive and got shifted down


@dataclass(frozen=True)
class AuctionTrace:
    rounds: tuple[AuctionRound, ...] = ()

    def __len__(self) -> int:
        return len(self.rounds)


@dataclass(frozen=True)
class AuctionResult:
    prices: PriceVector
    matching: Matching
    trace: AuctionTrace
    scale: int

    def __iter__(self):
        # allows ``prices, matching, trace = solve_auction(v)``
        return iter((self.prices, self.matching, self.trace))


# ── Ascending auction ─────────────────────────────────────────────────────────

def solve_auction(valuations: ValuationMatrix) -> AuctionResult:
    """Raise prices on over-demanded products until the market clears.

    Valuations are scaled to integers by the LCM of their denominators so
    every raise is one whole unit. Each round looks for a perfect matching
    of the preferred-product graph; on failure every product in the
    neighborhood of the constricted set gets one unit more expensive.
    Whenever all prices are positive they are shifted down so the
    cheapest product costs 0 again.
    """
    n = valuations.n
    scale = math.lcm(*(v.denominator for row in valuations.rows() for v in row))
    scaled = ValuationMatrix(tuple(tuple(v * scale for v in row) for row in valuations.rows()))
    prices = [0] * n
    rounds: list[AuctionRound] = []

    while True:
        found = find_perfect_matching(preferred_graph(scaled, PriceVector.of(prices)))
        if isinstance(found, Matching):
            break
        raised = tuple(sorted(found.neighborhood))
        for j in raised:
            prices[j] += 1
        lowest = min(prices)
        if lowest > 0:
            prices = [p - lowest for p in prices]
        rounds.append(
            AuctionRound(
                constricted=found.constricted,
                neighborhood=found.neighborhood,
                raised=raised,
                prices=PriceVector(tuple(Fraction(p, scale) for p in prices)),
                normalized=lowest > 0,
            )
        )
        log.debug("auction round %d: raised %s", len(rounds), [j + 1 for j in raised])

    result = PriceVector(tuple(Fraction(p, scale) for p in prices))
    log.info("auction cleared n=%d after %d rounds", n, len(rounds))
    return AuctionResult(result, found, AuctionTrace(tuple(rounds)), scale)


# ── Brute-force oracle ────────────────────────────────────────────────────────

def brute_force_max_matchings(
    valuations: ValuationMatrix, cap: int = DEFAULT_ORACLE_CAP
) -> tuple[MatchingSet, Fraction]:
    """Every welfare-maximizing perfect matching, found over all n! permutations."""
    n = valuations.n
    if n > cap:
        raise OracleCapExceeded(n, cap)

    best: Fraction | None = None
    winners: list[Matching] = []
    for perm in itertools.permutations(range(n)):
        welfare = sum((valuations[i, j] for i, j in enumerate(perm)), Fraction(0))
        if best is None or welfare > best:
            best = welfare
            winners = [Matching.from_assignment(perm)]
        elif welfare == best:
            winners.append(Matching.from_assignment(perm))
    assert best is not None
    return MatchingSet.of(winners), best


# ── Enumeration ───────────────────────────────────────────────────────────────

class _CapReached(Exception):
    pass


def enumerate_perfect_matchings(
    graph: PreferredProductGraph, cap: int = DEFAULT_ENUMERATION_CAP
) -> MatchingSet | CapExceeded:
    """All perfect matchings of ``graph`` (the set PM(p)).

    Backtracks over buyers with the fewest remaining choices first. Buyers
    left with a single product are assigned straight away before any
    branching; a buyer with none prunes the branch.
    """
    if cap < 1:
        raise ValueError("cap must be at least 1")
    n = graph.n
    rank = {b: r for r, b in enumerate(sorted(range(n), key=lambda b: (len(graph.preferred[b]), b)))}
    found: list[Matching] = []

    def extend(assigned: dict[int, int], used: frozenset[int]) -> None:
        assigned = dict(assigned)
        taken = set(used)
        while True:
            open_buyers = [b for b in range(n) if b not in assigned]
            if not open_buyers:
                found.append(Matching(tuple(assigned.items())))
                if len(found) > cap:
                    raise _CapReached
                return
            options = {b: graph.preferred[b] - taken for b in open_buyers}
            if any(not choices for choices in options.values()):
                return
            forced = [b for b in open_buyers if len(options[b]) == 1]
            if not forced:
                break
            for b in forced:
                (product,) = options[b]
                if product in taken:
                    return
                assigned[b] = product
                taken.add(product)

        buyer = min(open_buyers, key=lambda b: (len(options[b]), rank[b]))
        for product in sorted(options[buyer]):
            extend({**assigned, buyer: product}, frozenset(taken | {product}))

    try:
        extend({}, frozenset())
    except _CapReached:
        log.warning("more than %d perfect matchings, enumeration stopped", cap)
        return CapExceeded(cap, MatchingSet.of(found[:cap]))
    return MatchingSet.of(found)

