"""
app.py - Application orchestrator
"""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Optional

from config import ConfigManager
from market import (
    MarketError,
    Matching,
    PriceVector,
    find_perfect_matching,
    preferred_graph,
    social_welfare,
)
from market_file import MarketFile, dump_matching, dump_prices, load_market
from matching import CapExceeded, enumerate_perfect_matchings, solve_auction
from pricing import NotMaximum, normalize, prices_from_matching, solve_by_cycle_canceling
from verify import run_checks, run_random_suite

log = logging.getLogger("marketclear.app")

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_SHAPE = 3
EXIT_NOT_MAXIMUM = 4
EXIT_CAP = 5
EXIT_CHECK_FAILED = 6

METHODS = ("auction", "cycles")


class MissingInput(MarketError):
    """The command needs prices or a matching that the market file does not hold."""


@dataclass
class CommandResult:
    exit_code: int = EXIT_OK
    payloads: list[dict[str, Any]] = field(default_factory=list)


class MarketClearApp:
    """Top-level application class that wires configuration to the solvers."""

    def __init__(self, config: ConfigManager | None = None) -> None:
        self.config = config or ConfigManager()

    # ── Inputs ────────────────────────────────────────────────────────────

    def load(self, path: str | Path, fmt: str | None = None) -> MarketFile:
        market = load_market(path, fmt)
        self.config.remember(path)
        return market

    # ── Commands ──────────────────────────────────────────────────────────

    def solve(self, market: MarketFile, method: str = "auction") -> CommandResult:
        valuations = market.valuations
        if method == "auction":
            result = solve_auction(valuations)
            prices, matching = result.prices, result.matching
            extra = {"rounds": len(result.trace)}
        elif method == "cycles":
            raw, matching, steps = solve_by_cycle_canceling(valuations)
            prices = normalize(raw)
            extra = {"rotations": steps}
        else:
            raise ValueError(f"unknown method {method!r}")
        payload = {
            "prices": dump_prices(prices),
            "matching": dump_matching(matching),
            "welfare": str(social_welfare(valuations, matching)),
            "method": method,
            **extra,
        }
        return CommandResult(EXIT_OK, [payload])

    def verify(self, market: MarketFile) -> CommandResult:
        if market.prices is None:
            raise MissingInput('market file has no "prices"')
        found = find_perfect_matching(preferred_graph(market.valuations, market.prices))
        if isinstance(found, Matching):
            payload = {"clearing": True, "witness": None, "matching": dump_matching(found)}
        else:
            payload = {
                "clearing": False,
                "witness": {
                    "constricted": sorted(found.constricted),
                    "neighborhood": sorted(found.neighborhood),
                },
            }
        return CommandResult(EXIT_OK, [payload])

    def prices(self, market: MarketFile, pairs: Iterable[tuple[int, int]] = ()) -> CommandResult:
        pairs = list(pairs)
        matching = Matching.of(pairs) if pairs else market.matching
        if matching is None:
            raise MissingInput("no matching given: use --pair BUYER:PRODUCT or a \"matching\" key")
        outcome = prices_from_matching(market.valuations, matching)
        if isinstance(outcome, NotMaximum):
            return CommandResult(EXIT_NOT_MAXIMUM, [{
                "not_maximum": {
                    "cycle": list(outcome.cycle),
                    "length": str(outcome.length),
                    "improved": dump_matching(outcome.improved),
                    "gain": str(outcome.gain),
                }
            }])
        return CommandResult(EXIT_OK, [{"prices": dump_prices(outcome)}])

    def enumerate(self, market: MarketFile, cap: int | None = None) -> CommandResult:
        cap = cap if cap is not None else self.config.get("cap")
        valuations = market.valuations
        prices: PriceVector = market.prices if market.prices is not None else solve_auction(valuations).prices
        graph = preferred_graph(valuations, prices)
        found = enumerate_perfect_matchings(graph, cap)
        if isinstance(found, CapExceeded):
            return CommandResult(EXIT_CAP, [{
                "cap_exceeded": cap,
                "matchings": [dump_matching(m) for m in found.partial],
            }])
        welfare = social_welfare(valuations, found.matchings[0]) if found else None
        return CommandResult(EXIT_OK, [{
            "prices": dump_prices(prices),
            "clearing": bool(found),
            "matchings": [dump_matching(m) for m in found],
            "welfare": None if welfare is None else str(welfare),
        }])

    def check(
        self,
        market: MarketFile | None = None,
        seed: int | None = None,
        samples: int | None = None,
        instances: int = 20,
        oracle_cap: int | None = None,
        jobs: int = 1,
    ) -> CommandResult:
        seed = seed if seed is not None else self.config.get("seed")
        samples = samples if samples is not None else self.config.get("samples")
        oracle_cap = oracle_cap if oracle_cap is not None else self.config.get("oracle_cap")
        if market is not None:
            reports = [run_checks(market.valuations, seed, samples, oracle_cap)]
        else:
            reports = run_random_suite(instances, seed, samples, oracle_cap, jobs)
        failed = sum(not r.passed for r in reports)
        if failed:
            log.error("%d of %d instances failed a check", failed, len(reports))
        else:
            log.info("all checks passed on %d instance(s)", len(reports))
        return CommandResult(
            EXIT_CHECK_FAILED if failed else EXIT_OK,
            [r.to_dict() for r in reports],
        )

    # ── Watch mode ────────────────────────────────────────────────────────

    def evaluate_file(self, path: str | Path, fmt: str | None = None, event: str = "initial") -> dict[str, Any]:
        """Solve and verify the file as it is now; parse problems become an ``error`` entry."""
        try:
            market = load_market(path, fmt)
            solved = self.solve(market).payloads[0]
            check = MarketFile(market.valuations, PriceVector.of(solved["prices"]))
            clearing = self.verify(check).payloads[0]["clearing"]
        except MarketError as exc:
            return {"event": event, "file": str(path), "error": str(exc)}
        return {
            "event": event,
            "file": str(path),
            "prices": solved["prices"],
            "matching": solved["matching"],
            "welfare": solved["welfare"],
            "clearing": clearing,
        }

    def watch(
        self,
        path: str | Path,
        emit: Callable[[dict[str, Any]], None],
        fmt: str | None = None,
        stop: Optional[threading.Event] = None,
    ) -> None:
        """Emit an evaluation now and after every save until interrupted."""
        from monitor import MarketFileMonitor

        self.config.remember(path)
        monitor = MarketFileMonitor(path)
        monitor.on_change = lambda changed, kind: emit(self.evaluate_file(changed, fmt, kind))
        emit(self.evaluate_file(path, fmt))
        monitor.start()
        stop = stop or threading.Event()
        try:
            while not stop.wait(0.5):
                pass
        except KeyboardInterrupt:
            log.info("watch interrupted")
        finally:
            monitor.stop()
