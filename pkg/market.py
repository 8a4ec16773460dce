"""
market.py - Exact market model: valuations, prices, matchings, preferred products
"""

from __future__ import annotations

import hashlib
import logging
from collections import deque
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from fractions import Fraction
from typing import Iterable, Iterator, Sequence, Union

import networkx as nx
from networkx.algorithms.bipartite import hopcroft_karp_matching

log = logging.getLogger("marketclear.market")

# Every valuation, price and payoff is a reduced fraction.
Rational = Fraction

RationalLike = Union[int, Fraction, Decimal, str]


# ── Errors ────────────────────────────────────────────────────────────────────

class MarketError(Exception):
    """Root of every error raised by marketclear."""


class InvalidMarket(MarketError):
    """Valuation matrix is empty, not square or has a negative entry."""


class DimensionMismatch(MarketError):
    def __init__(self, expected: int, got: int, what: str = "price vector") -> None:
        super().__init__(f"{what} has length {got}, market size is {expected}")
        self.expected = expected
        self.got = got


class IndexOutOfRange(MarketError):
    def __init__(self, kind: str, index: int, n: int) -> None:
        # 1-based in the message, 0-based in the attribute
        super().__init__(f"{kind} {index + 1} is outside 1..{n}")
        self.kind = kind
        self.index = index
        self.n = n


class RationalParseError(MarketError):
    """Value is not an exactly representable rational."""


class InvalidMatching(MarketError):
    """A buyer or a product appears twice."""


# ── Rationals ─────────────────────────────────────────────────────────────────

def to_rational(value: RationalLike) -> Fraction:
    """Convert ``value`` to a Fraction without any loss.

    Accepts ints, Fractions, Decimals and strings holding an integer, a
    fraction ``"a/b"`` or a finite decimal. Floats are refused: most of
    them are not the number the user typed.
    """
    if isinstance(value, bool) or isinstance(value, float):
        raise RationalParseError(f"{value!r}: floating point values are not accepted")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, Decimal):
        if not value.is_finite():
            raise RationalParseError(f"{value!r}: not a finite number")
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        if "/" in text:
            num, _, den = text.partition("/")
            try:
                numerator, denominator = int(num), int(den)
            except ValueError:
                raise RationalParseError(f"{value!r}: malformed fraction") from None
            if denominator == 0:
                raise RationalParseError(f"{value!r}: zero denominator")
            return Fraction(numerator, denominator)
        try:
            dec = Decimal(text)
        except InvalidOperation:
            raise RationalParseError(f"{value!r}: not a number") from None
        if not dec.is_finite():
            raise RationalParseError(f"{value!r}: not a finite number")
        return Fraction(dec)
    raise RationalParseError(f"{value!r}: unsupported type {type(value).__name__}")


# ── Domain types ──────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class ValuationMatrix:
    """Square matrix of nonnegative valuations, ``values[i][j]`` = v_ij.

    Buyers are rows, products are columns; both are 0-based here.
    """

    values: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self) -> None:
        rows = tuple(tuple(to_rational(v) for v in row) for row in self.values)
        n = len(rows)
        if n == 0:
            raise InvalidMarket("market needs at least one buyer")
        for i, row in enumerate(rows):
            if len(row) != n:
                raise InvalidMarket(
                    f"row {i + 1} has {len(row)} entries, expected {n} (square markets only)"
                )
            for j, v in enumerate(row):
                if v < 0:
                    raise InvalidMarket(f"valuation of buyer {i + 1} for product {j + 1} is negative")
        object.__setattr__(self, "values", rows)

    @classmethod
    def of(cls, rows: Iterable[Iterable[RationalLike]]) -> "ValuationMatrix":
        return cls(tuple(tuple(row) for row in rows))

    @property
    def n(self) -> int:
        return len(self.values)

    def __getitem__(self, key: tuple[int, int]) -> Fraction:
        i, j = key
        return self.values[i][j]

    def rows(self) -> Iterator[tuple[Fraction, ...]]:
        return iter(self.values)

    def max_abs(self) -> Fraction:
        return max(abs(v) for row in self.values for v in row)

    def digest(self) -> str:
        """Stable SHA-256 of the canonical text form."""
        text = ";".join(",".join(str(v) for v in row) for row in self.values)
        return hashlib.sha256(text.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class PriceVector:
    """One price per product. Any sign is allowed."""

    prices: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "prices", tuple(to_rational(p) for p in self.prices))

    @classmethod
    def of(cls, values: Iterable[RationalLike]) -> "PriceVector":
        return cls(tuple(values))

    @classmethod
    def zeros(cls, n: int) -> "PriceVector":
        return cls(tuple(Fraction(0) for _ in range(n)))

    def __len__(self) -> int:
        return len(self.prices)

    def __iter__(self) -> Iterator[Fraction]:
        return iter(self.prices)

    def __getitem__(self, j: int) -> Fraction:
        return self.prices[j]

    def __str__(self) -> str:
        return "(" + ", ".join(str(p) for p in self.prices) + ")"


@dataclass(frozen=True, order=True)
class Matching:
    """Injective partial map buyers -> products, kept as pairs sorted by buyer."""

    pairs: tuple[tuple[int, int], ...] = ()

    def __post_init__(self) -> None:
        pairs = tuple(sorted((int(b), int(p)) for b, p in self.pairs))
        buyers = [b for b, _ in pairs]
        products = [p for _, p in pairs]
        if len(set(buyers)) != len(buyers):
            raise InvalidMatching(f"matching assigns a buyer twice: {_one_based(pairs)}")
        if len(set(products)) != len(products):
            raise InvalidMatching(f"matching sells a product twice: {_one_based(pairs)}")
        object.__setattr__(self, "pairs", pairs)

    @classmethod
    def of(cls, pairs: Iterable[Sequence[int]]) -> "Matching":
        return cls(tuple((b, p) for b, p in pairs))

    @classmethod
    def from_assignment(cls, products: Sequence[int]) -> "Matching":
        """``products[i]`` is the product bought by buyer ``i``."""
        return cls(tuple(enumerate(products)))

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self) -> Iterator[tuple[int, int]]:
        return iter(self.pairs)

    def __contains__(self, pair: object) -> bool:
        return pair in self.pairs

    def assignment(self) -> dict[int, int]:
        return dict(self.pairs)

    def is_perfect(self, n: int) -> bool:
        return len(self.pairs) == n

    def check_bounds(self, n: int) -> None:
        for b, p in self.pairs:
            if not 0 <= b < n:
                raise IndexOutOfRange("buyer", b, n)
            if not 0 <= p < n:
                raise IndexOutOfRange("product", p, n)

    def contained_in(self, graph: "PreferredProductGraph") -> bool:
        return all(graph.has_edge(b, p) for b, p in self.pairs)

    def __str__(self) -> str:
        return _one_based(self.pairs)


@dataclass(frozen=True)
class PreferredProductGraph:
    """G(p): for each buyer, every product that maximizes the buyer's payoff."""

    n: int
    preferred: tuple[frozenset[int], ...]

    def has_edge(self, buyer: int, product: int) -> bool:
        return product in self.preferred[buyer]

    def neighborhood(self, buyers: Iterable[int]) -> frozenset[int]:
        out: set[int] = set()
        for b in buyers:
            out |= self.preferred[b]
        return frozenset(out)

    def edges(self) -> frozenset[tuple[int, int]]:
        return frozenset((b, p) for b, prods in enumerate(self.preferred) for p in prods)

    def to_networkx(self) -> nx.Graph:
        """Buyers are nodes 0..n-1, product j is node n + j."""
        bipartite = nx.Graph()
        bipartite.add_nodes_from(range(self.n), bipartite=0)
        bipartite.add_nodes_from(range(self.n, 2 * self.n), bipartite=1)
        bipartite.add_edges_from((b, self.n + p) for b, p in self.edges())
        return bipartite


@dataclass(frozen=True)
class BuyerPayoff:
    """u_i = max_j (v_ij - p_j)."""

    u: tuple[Fraction, ...]

    def __getitem__(self, i: int) -> Fraction:
        return self.u[i]

    def __len__(self) -> int:
        return len(self.u)


@dataclass(frozen=True)
class NoPerfectMatching:
    """Hall violator: |neighborhood| < |constricted|."""

    constricted: frozenset[int]
    neighborhood: frozenset[int]
    partial: Matching = field(default_factory=Matching)


# ── Operations ────────────────────────────────────────────────────────────────

def social_welfare(valuations: ValuationMatrix, matching: Matching) -> Fraction:
    matching.check_bounds(valuations.n)
    return sum((valuations[b, p] for b, p in matching), Fraction(0))


def _payoff_rows(valuations: ValuationMatrix, prices: PriceVector) -> list[list[Fraction]]:
    if len(prices) != valuations.n:
        raise DimensionMismatch(valuations.n, len(prices))
    return [[v - p for v, p in zip(row, prices)] for row in valuations.rows()]


def buyer_payoffs(valuations: ValuationMatrix, prices: PriceVector) -> BuyerPayoff:
    return BuyerPayoff(tuple(max(row) for row in _payoff_rows(valuations, prices)))


def preferred_graph(valuations: ValuationMatrix, prices: PriceVector) -> PreferredProductGraph:
    """Build G(p). Ties keep every maximizer."""
    preferred = []
    for row in _payoff_rows(valuations, prices):
        best = max(row)
        preferred.append(frozenset(j for j, payoff in enumerate(row) if payoff == best))
    return PreferredProductGraph(valuations.n, tuple(preferred))


def find_perfect_matching(graph: PreferredProductGraph) -> Matching | NoPerfectMatching:
    """Perfect matching of ``graph`` or a constricted buyer set.

    A maximum matching comes from Hopcroft-Karp. When it leaves buyers
    unmatched, the buyers reachable from them by alternating paths form the
    constricted set: their products are exactly the visited ones, each held
    by another visited buyer. Starting from every unmatched buyer makes the
    set independent of which maximum matching was found.
    """
    n = graph.n
    bipartite = graph.to_networkx()
    mate = hopcroft_karp_matching(bipartite, top_nodes=range(n))
    held = {b: mate[b] - n for b in range(n) if b in mate}
    partial = Matching(tuple(held.items()))
    if len(held) == n:
        return partial

    holder = {p: b for b, p in held.items()}
    unmatched = [b for b in range(n) if b not in held]
    buyers, products = set(unmatched), set()
    queue = deque(unmatched)
    while queue:
        buyer = queue.popleft()
        for product in graph.preferred[buyer] - products:
            products.add(product)
            # a free product here would mean an augmenting path
            nxt = holder[product]
            if nxt not in buyers:
                buyers.add(nxt)
                queue.append(nxt)
    log.debug("constricted buyers %s, products %s",
              sorted(b + 1 for b in buyers), sorted(p + 1 for p in products))
    return NoPerfectMatching(frozenset(buyers), frozenset(products), partial)


def is_market_clearing(valuations: ValuationMatrix, prices: PriceVector) -> bool:
    return isinstance(find_perfect_matching(preferred_graph(valuations, prices)), Matching)


# ── Helpers ───────────────────────────────────────────────────────────────────

def _one_based(pairs: Iterable[tuple[int, int]]) -> str:
    return "{" + ", ".join(f"({b + 1},{p + 1})" for b, p in pairs) + "}"
