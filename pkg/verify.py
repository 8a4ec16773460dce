"""
verify.py - Instance-level checkers for the structural properties of clearing prices

Every checker compares what a clearing price vector induces against the
brute-force oracle and returns a VerificationReport. A failed check always
carries a payload that ``replay`` can confirm with market.py alone.
"""

from __future__ import annotations

import itertools
import json
import logging
import math
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterable, Sequence

from market import (
    MarketError,
    Matching,
    PriceVector,
    ValuationMatrix,
    find_perfect_matching,
    is_market_clearing,
    preferred_graph,
    social_welfare,
)
from market_file import dump_matching, dump_prices, load_matching, load_prices
from matching import (
    DEFAULT_ORACLE_CAP,
    MatchingSet,
    OracleCapExceeded,
    brute_force_max_matchings,
    enumerate_perfect_matchings,
    solve_auction,
)
from pricing import (
    convex_combine,
    diagonal_shift,
    elementwise_max,
    elementwise_min,
    prices_from_matching,
)

log = logging.getLogger("marketclear.verify")

INDUCED_ARE_MAXIMUM = "induced-are-maximum"
SAME_INDUCED = "same-induced-matchings"
CLOSURE = "closure"
INDUCES_ALL_MAXIMUM = "induces-all-maximum"
WELFARE_OPTIMAL = "induced-welfare-optimal"

VALUATION_HIGH = 20
MAX_RANDOM_SIZE = 7


class NotClearing(MarketError):
    def __init__(self, which: str, prices: PriceVector, constricted: Iterable[int]) -> None:
        buyers = sorted(b + 1 for b in constricted)
        super().__init__(f"{which}={prices} is not market-clearing (constricted buyers {buyers})")
        self.which = which
        self.prices = prices
        self.constricted = frozenset(constricted)


# ── Report ────────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class Check:
    claim: str
    passed: bool
    counterexample: dict[str, Any] = field(default_factory=dict)
    details: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "claim": self.claim,
            "passed": self.passed,
            "counterexample": self.counterexample,
            "details": self.details,
        }


@dataclass
class VerificationReport:
    """Results of the checks run on one market instance."""

    n: int
    digest: str
    seed: int | None = None
    checks: list[Check] = field(default_factory=list)

    @classmethod
    def for_market(cls, valuations: ValuationMatrix, seed: int | None = None) -> "VerificationReport":
        return cls(valuations.n, valuations.digest(), seed)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def add(self, check: Check) -> None:
        self.checks.append(check)
        if not check.passed:
            log.error("check %s failed on n=%d market %s", check.claim, self.n, self.digest[:12])

    def extend(self, other: "VerificationReport") -> None:
        for check in other.checks:
            self.add(check)

    def to_dict(self) -> dict[str, Any]:
        return {
            "instance": {"n": self.n, "valuation_hash": self.digest, "seed": self.seed},
            "passed": self.passed,
            "checks": [c.to_dict() for c in self.checks],
        }

    def to_json_line(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, separators=(",", ":"))


# ── Shared helpers ────────────────────────────────────────────────────────────

def _require_clearing(valuations: ValuationMatrix, prices: PriceVector, which: str = "p") -> None:
    found = find_perfect_matching(preferred_graph(valuations, prices))
    if not isinstance(found, Matching):
        raise NotClearing(which, prices, found.constricted)


def _require_size(valuations: ValuationMatrix, oracle_cap: int) -> None:
    if valuations.n > oracle_cap:
        raise OracleCapExceeded(valuations.n, oracle_cap)


def induced_matchings(valuations: ValuationMatrix, prices: PriceVector) -> MatchingSet:
    """PM(p), without a cap: a graph on n buyers has at most n! perfect matchings."""
    found = enumerate_perfect_matchings(preferred_graph(valuations, prices), math.factorial(valuations.n))
    assert isinstance(found, MatchingSet)
    return found


def _missing_edge(matching: Matching, valuations: ValuationMatrix, prices: PriceVector) -> tuple[int, int] | None:
    graph = preferred_graph(valuations, prices)
    for buyer, product in matching:
        if not graph.has_edge(buyer, product):
            return buyer, product
    return None


# ── Alternating cycles ────────────────────────────────────────────────────────

@dataclass(frozen=True)
class AlternatingStep:
    buyer: int
    first: int    # product held in the first matching
    second: int   # product held in the second matching


def alternating_cycle(first: Matching, second: Matching, buyer: int) -> tuple[AlternatingStep, ...]:
    """Follow ``second`` from ``buyer`` until it returns to the product held in ``first``.

    Starting at (i1, j1) in ``first``: i1 holds j2 in ``second``, j2 is
    held by i2 in ``first``, and so on until some i_k holds j1 in ``second``.
    """
    held_first = first.assignment()
    held_second = second.assignment()
    holder_first = {p: b for b, p in held_first.items()}
    start = held_first[buyer]
    steps = []
    current = buyer
    while True:
        steps.append(AlternatingStep(current, held_first[current], held_second[current]))
        nxt = held_second[current]
        if nxt == start:
            return tuple(steps)
        current = holder_first[nxt]


def price_difference_chain(
    p: PriceVector, q: PriceVector, steps: Sequence[AlternatingStep]
) -> list[dict[str, Any]]:
    """Evaluate q_{j(k+1)} - q_{j(k)} <= p_{j(k+1)} - p_{j(k)} along an alternating cycle.

    The first inequality is strict. Both sides telescope to 0 around the
    cycle, so the chain can never hold in full; the entries that fail show
    where an induced matching stops being induced.
    """
    chain = []
    for k, step in enumerate(steps):
        lhs = q[step.second] - q[step.first]
        rhs = p[step.second] - p[step.first]
        holds = lhs < rhs if k == 0 else lhs <= rhs
        chain.append({
            "buyer": step.buyer,
            "from": step.first,
            "to": step.second,
            "lhs": str(lhs),
            "rhs": str(rhs),
            "strict": k == 0,
            "holds": holds,
        })
    return chain


# ── Checkers ──────────────────────────────────────────────────────────────────

def check_induced_are_maximum(
    valuations: ValuationMatrix, prices: PriceVector, oracle_cap: int = DEFAULT_ORACLE_CAP
) -> VerificationReport:
    """Clearing prices induce at least one matching and only maximum ones."""
    _require_size(valuations, oracle_cap)
    _require_clearing(valuations, prices)
    induced = induced_matchings(valuations, prices)
    maximum, best = brute_force_max_matchings(valuations, oracle_cap)

    report = VerificationReport.for_market(valuations)
    details = {"induced": len(induced), "maximum": len(maximum), "welfare": str(best)}
    outside = induced.difference(maximum)
    if not induced:
        report.add(Check(INDUCED_ARE_MAXIMUM, False, {"prices": dump_prices(prices), "induced": []}, details))
    elif outside:
        worse = next(iter(outside))
        report.add(Check(INDUCED_ARE_MAXIMUM, False, {
            "prices": dump_prices(prices),
            "matching": dump_matching(worse),
            "better": dump_matching(next(iter(maximum))),
        }, details))
    else:
        report.add(Check(INDUCED_ARE_MAXIMUM, True, details=details))
    return report


def check_same_induced(
    valuations: ValuationMatrix,
    p: PriceVector,
    q: PriceVector,
    oracle_cap: int = DEFAULT_ORACLE_CAP,
) -> VerificationReport:
    """Two clearing vectors induce exactly the same perfect matchings."""
    _require_size(valuations, oracle_cap)
    _require_clearing(valuations, p, "p")
    _require_clearing(valuations, q, "q")
    induced_p = induced_matchings(valuations, p)
    induced_q = induced_matchings(valuations, q)
    graphs_differ = preferred_graph(valuations, p).edges() != preferred_graph(valuations, q).edges()

    report = VerificationReport.for_market(valuations)
    details = {"induced": len(induced_p), "graphs_differ": graphs_differ}
    if induced_p == induced_q:
        report.add(Check(SAME_INDUCED, True, details=details))
        return report

    # Orient so ``own`` induces ``lonely`` and ``other`` does not.
    if induced_p.difference(induced_q):
        own, other, lonely, witness = p, q, next(iter(induced_p.difference(induced_q))), induced_q
    else:
        own, other, lonely, witness = q, p, next(iter(induced_q.difference(induced_p))), induced_p
    edge = _missing_edge(lonely, valuations, other)
    assert edge is not None
    steps = alternating_cycle(lonely, next(iter(witness)), edge[0])
    report.add(Check(SAME_INDUCED, False, {
        "prices": dump_prices(own),
        "other_prices": dump_prices(other),
        "matching": dump_matching(lonely),
        "missing_edge": list(edge),
        "chain": price_difference_chain(own, other, steps),
    }, details))
    return report


def _random_shift(rng: random.Random, bound: Fraction) -> Fraction:
    denominator = rng.randint(1, 12)
    reach = math.floor(bound * denominator)
    return Fraction(rng.randint(-reach, reach), denominator)


def _random_alpha(rng: random.Random) -> Fraction:
    denominator = rng.randint(1, 12)
    return Fraction(rng.randint(0, denominator), denominator)


def check_closure(
    valuations: ValuationMatrix,
    p: PriceVector,
    q: PriceVector,
    samples: int = 25,
    seed: int = 42,
) -> VerificationReport:
    """Shifts, convex combinations, element-wise max and min of clearing vectors clear.

    Shift amounts t are drawn from [-max|v|, max|v|] and weights alpha
    from [0, 1], both as small-denominator rationals from a generator
    seeded with ``seed``.
    """
    _require_clearing(valuations, p, "p")
    _require_clearing(valuations, q, "q")
    rng = random.Random(seed)
    bound = valuations.max_abs() or Fraction(1)

    candidates: dict[str, list[tuple[str, PriceVector]]] = {
        "diagonal-shift": [],
        "convex-combination": [],
        "elementwise-max": [("", elementwise_max(p, q))],
        "elementwise-min": [("", elementwise_min(p, q))],
    }
    for _ in range(samples):
        t = _random_shift(rng, bound)
        alpha = _random_alpha(rng)
        candidates["diagonal-shift"].append((f"t={t}", diagonal_shift(p, t)))
        candidates["diagonal-shift"].append((f"t={t}", diagonal_shift(q, t)))
        candidates["convex-combination"].append((f"alpha={alpha}", convex_combine(p, q, alpha)))

    report = VerificationReport.for_market(valuations, seed)
    for transform, results in candidates.items():
        failure: dict[str, Any] = {}
        for parameter, r in results:
            found = find_perfect_matching(preferred_graph(valuations, r))
            if not isinstance(found, Matching):
                failure = {
                    "transform": transform,
                    "parameter": parameter,
                    "prices": dump_prices(r),
                    "constricted": sorted(found.constricted),
                }
                break
        report.add(Check(f"{CLOSURE}/{transform}", not failure, failure, {"tried": len(results)}))
    return report


def check_induces_all_maximum(
    valuations: ValuationMatrix, prices: PriceVector, oracle_cap: int = DEFAULT_ORACLE_CAP
) -> VerificationReport:
    """Clearing prices induce every maximum matching: PM(p) equals M*."""
    _require_size(valuations, oracle_cap)
    _require_clearing(valuations, prices)
    induced = induced_matchings(valuations, prices)
    maximum, best = brute_force_max_matchings(valuations, oracle_cap)

    report = VerificationReport.for_market(valuations)
    details = {"induced": len(induced), "maximum": len(maximum), "welfare": str(best)}
    missed = maximum.difference(induced)
    extra = induced.difference(maximum)
    if not missed and not extra:
        report.add(Check(INDUCES_ALL_MAXIMUM, True, details=details))
        return report

    payload: dict[str, Any] = {"prices": dump_prices(prices)}
    if missed:
        lost = next(iter(missed))
        payload["matching"] = dump_matching(lost)
        payload["missing_edge"] = list(_missing_edge(lost, valuations, prices) or ())
        if induced:
            payload["induced"] = dump_matching(next(iter(induced)))
    else:
        payload["extra"] = dump_matching(next(iter(extra)))
        payload["better"] = dump_matching(next(iter(maximum)))
    report.add(Check(INDUCES_ALL_MAXIMUM, False, payload, details))
    return report


def check_welfare_optimal(
    valuations: ValuationMatrix, prices: PriceVector, oracle_cap: int = DEFAULT_ORACLE_CAP
) -> VerificationReport:
    """Every induced perfect matching reaches the oracle's maximum welfare."""
    _require_size(valuations, oracle_cap)
    _require_clearing(valuations, prices)
    maximum, best = brute_force_max_matchings(valuations, oracle_cap)

    report = VerificationReport.for_market(valuations)
    for matching in induced_matchings(valuations, prices):
        welfare = social_welfare(valuations, matching)
        if welfare != best:
            report.add(Check(WELFARE_OPTIMAL, False, {
                "prices": dump_prices(prices),
                "matching": dump_matching(matching),
                "welfare": str(welfare),
                "better": dump_matching(next(iter(maximum))),
            }, {"welfare": str(best)}))
            return report
    report.add(Check(WELFARE_OPTIMAL, True, details={"welfare": str(best)}))
    return report


# ── Replay ────────────────────────────────────────────────────────────────────

def replay(valuations: ValuationMatrix, check: Check) -> bool:
    """True when a failed check's payload is a genuine violation.

    Uses nothing but preferred graphs, the clearing test and welfare sums.
    """
    if check.passed:
        return False
    data = check.counterexample
    claim = check.claim.split("/")[0]
    prices = load_prices(data["prices"]) if "prices" in data else None

    def induced(matching: Matching, p: PriceVector) -> bool:
        return matching.is_perfect(valuations.n) and matching.contained_in(preferred_graph(valuations, p))

    if claim == CLOSURE:
        return prices is not None and not is_market_clearing(valuations, prices)
    if claim in (INDUCED_ARE_MAXIMUM, WELFARE_OPTIMAL):
        if "matching" not in data:
            return prices is not None and not is_market_clearing(valuations, prices)
        worse = load_matching(data["matching"])
        better = load_matching(data["better"])
        return induced(worse, prices) and social_welfare(valuations, better) > social_welfare(valuations, worse)
    if claim == SAME_INDUCED:
        other = load_prices(data["other_prices"])
        lonely = load_matching(data["matching"])
        return (
            is_market_clearing(valuations, prices)
            and is_market_clearing(valuations, other)
            and induced(lonely, prices)
            and not induced(lonely, other)
        )
    if claim == INDUCES_ALL_MAXIMUM:
        if "extra" in data:
            extra = load_matching(data["extra"])
            better = load_matching(data["better"])
            return induced(extra, prices) and social_welfare(valuations, better) > social_welfare(valuations, extra)
        lost = load_matching(data["matching"])
        if not is_market_clearing(valuations, prices) or induced(lost, prices):
            return False
        found = find_perfect_matching(preferred_graph(valuations, prices))
        return social_welfare(valuations, lost) >= social_welfare(valuations, found)  # type: ignore[arg-type]
    raise ValueError(f"unknown claim {check.claim!r}")


# ── Instances ─────────────────────────────────────────────────────────────────

def random_market(
    rng: random.Random,
    n: int | None = None,
    duplicate_row: bool = False,
    high: int = VALUATION_HIGH,
) -> ValuationMatrix:
    """Integer valuations uniform in [0, high]; the small range makes ties common.

    With ``duplicate_row`` one buyer's row is copied onto another, which
    guarantees at least two maximum matchings when n >= 2.
    """
    size = n if n is not None else rng.randint(1, MAX_RANDOM_SIZE)
    rows = [[rng.randint(0, high) for _ in range(size)] for _ in range(size)]
    if duplicate_row and size >= 2:
        source, target = rng.sample(range(size), 2)
        rows[target] = list(rows[source])
    return ValuationMatrix.of(rows)


def clearing_vectors(
    valuations: ValuationMatrix, oracle_cap: int = DEFAULT_ORACLE_CAP, limit: int = 3
) -> list[tuple[str, PriceVector]]:
    """Clearing vectors from the auction and from pricing up to ``limit`` maximum matchings."""
    vectors = [("auction", solve_auction(valuations).prices)]
    maximum, _ = brute_force_max_matchings(valuations, oracle_cap)
    for k, matching in enumerate(itertools.islice(maximum, limit)):
        priced = prices_from_matching(valuations, matching)
        if not isinstance(priced, PriceVector):
            raise AssertionError(f"maximum matching {matching} was refused prices")
        vectors.append((f"matching-{k}", priced))
    return vectors


def run_checks(
    valuations: ValuationMatrix,
    seed: int = 42,
    samples: int = 25,
    oracle_cap: int = DEFAULT_ORACLE_CAP,
) -> VerificationReport:
    """All five checkers on one market, with several clearing vectors."""
    vectors = clearing_vectors(valuations, oracle_cap)
    auction = vectors[0][1]

    report = VerificationReport.for_market(valuations, seed)
    report.extend(check_induced_are_maximum(valuations, auction, oracle_cap))
    report.extend(check_welfare_optimal(valuations, auction, oracle_cap))
    report.extend(check_induces_all_maximum(valuations, auction, oracle_cap))
    for (_, p), (_, q) in itertools.combinations(vectors, 2):
        report.extend(check_same_induced(valuations, p, q, oracle_cap))
    report.extend(check_closure(valuations, auction, vectors[-1][1], samples, seed))
    log.debug("n=%d market %s: %d checks, passed=%s", valuations.n, report.digest[:12], len(report.checks), report.passed)
    return report


def run_random_suite(
    count: int,
    seed: int = 42,
    samples: int = 25,
    oracle_cap: int = DEFAULT_ORACLE_CAP,
    jobs: int = 1,
) -> list[VerificationReport]:
    """``run_checks`` on ``count`` seeded random markets, every other one with a duplicated row."""
    rng = random.Random(seed)
    markets = [random_market(rng, duplicate_row=k % 2 == 1) for k in range(count)]
    seeds = [seed + k for k in range(count)]
    args = (markets, seeds, [samples] * count, [oracle_cap] * count)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(run_checks, *args))
    return [run_checks(*a) for a in zip(*args)]
