"""
market_file.py - Reading market files (CSV or JSON) and serializing results

Indices in files and in every serialized result are 0-based.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from decimal import Decimal
from pathlib import Path
from typing import Any, Optional, Sequence

from market import (
    MarketError,
    Matching,
    PriceVector,
    RationalParseError,
    ValuationMatrix,
    to_rational,
)

FORMATS = ("csv", "json")


class MarketFileError(MarketError):
    """The file cannot be read or does not have the expected layout."""


@dataclass(frozen=True)
class MarketFile:
    valuations: ValuationMatrix
    prices: Optional[PriceVector] = None
    matching: Optional[Matching] = None
    source: Optional[str] = None


# ── Parsing ───────────────────────────────────────────────────────────────────

def detect_format(path: str | Path, text: str) -> str:
    suffix = Path(path).suffix.lower()
    if suffix == ".csv":
        return "csv"
    if suffix == ".json":
        return "json"
    return "json" if text.lstrip().startswith(("{", "[")) else "csv"


def load_market(path: str | Path, fmt: str | None = None) -> MarketFile:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise MarketFileError(f"{path}: {exc.strerror or exc}") from exc
    return parse_market(text, fmt or detect_format(path, text), source=str(path))


def parse_market(text: str, fmt: str, source: str | None = None) -> MarketFile:
    label = source or "<market>"
    if fmt == "csv":
        return MarketFile(_parse_csv(text, label), source=source)
    if fmt == "json":
        return _parse_json(text, label, source)
    raise MarketFileError(f"unknown format {fmt!r}, expected one of {', '.join(FORMATS)}")


def _parse_csv(text: str, label: str) -> ValuationMatrix:
    rows = []
    for line_no, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        cells = [c.strip() for c in row]
        if not any(cells) or cells[0].startswith("#"):
            continue
        try:
            rows.append([to_rational(c) for c in cells])
        except RationalParseError as exc:
            raise MarketFileError(f"{label}: line {line_no}: {exc}") from exc
    return ValuationMatrix.of(rows)


def _reject_constant(name: str) -> Any:
    raise MarketFileError(f"{name} is not an exact number")


def _parse_json(text: str, label: str, source: str | None) -> MarketFile:
    try:
        # Decimal keeps "0.1" exact
        data = json.loads(text, parse_float=Decimal, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise MarketFileError(f"{label}: invalid JSON: {exc}") from exc

    if isinstance(data, list):
        data = {"valuations": data}
    if not isinstance(data, dict) or "valuations" not in data:
        raise MarketFileError(f'{label}: expected an object with a "valuations" key')

    try:
        rows = data["valuations"]
        if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
            raise MarketFileError(f'{label}: "valuations" must be an array of arrays')
        valuations = ValuationMatrix.of(rows)
        prices = load_prices(data["prices"]) if data.get("prices") is not None else None
        matching = load_matching(data["matching"]) if data.get("matching") is not None else None
    except RationalParseError as exc:
        raise MarketFileError(f"{label}: {exc}") from exc
    return MarketFile(valuations, prices, matching, source)


def parse_pair(text: str) -> tuple[int, int]:
    """``"b:p"`` -> (b, p), both 0-based."""
    buyer, sep, product = text.partition(":")
    try:
        if not sep:
            raise ValueError
        return int(buyer), int(product)
    except ValueError:
        raise MarketFileError(f"{text!r}: expected BUYER:PRODUCT, e.g. 0:2") from None


# ── Serialization ─────────────────────────────────────────────────────────────

def dump_prices(prices: PriceVector) -> list[str]:
    return [str(p) for p in prices]


def dump_matching(matching: Matching) -> list[list[int]]:
    return [[b, p] for b, p in matching]


def load_prices(values: Sequence[Any]) -> PriceVector:
    if not isinstance(values, list):
        raise MarketFileError('"prices" must be an array')
    return PriceVector.of(values)


def _index(value: Any) -> int:
    if isinstance(value, int) and not isinstance(value, bool):
        return value
    if isinstance(value, Decimal) and value.is_finite() and value == value.to_integral_value():
        return int(value)
    raise MarketFileError(f"{value!r} is not a buyer or product index")


def load_matching(pairs: Sequence[Any]) -> Matching:
    if not isinstance(pairs, list) or not all(isinstance(p, list) and len(p) == 2 for p in pairs):
        raise MarketFileError('"matching" must be an array of [buyer, product] pairs')
    return Matching.of((_index(b), _index(p)) for b, p in pairs)
