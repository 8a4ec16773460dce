"""
cli.py - Command-line front end: solve, verify, prices, enumerate, check, watch, config
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from typing import Any, Sequence

from app import (
    EXIT_CAP,
    EXIT_OK,
    EXIT_PARSE,
    EXIT_SHAPE,
    METHODS,
    MarketClearApp,
    MissingInput,
)
from config import DEFAULTS, ConfigManager
from market import (
    DimensionMismatch,
    IndexOutOfRange,
    InvalidMarket,
    InvalidMatching,
    MarketError,
    RationalParseError,
)
from market_file import FORMATS, MarketFileError, parse_pair
from matching import OracleCapExceeded
from pricing import AlphaOutOfRange, NotPerfect

log = logging.getLogger("marketclear.cli")

LOG_PREFIX = "[MarketClear]"

_EPILOG = (
    "Índices: compradores e produtos são numerados a partir de 0 em toda "
    "entrada e saída estruturada (arquivos, --pair, JSON). Mensagens de "
    "diagnóstico em stderr usam numeração a partir de 1.\n"
    "Códigos de saída: 0 ok, 2 erro de leitura, 3 dimensão/forma, "
    "4 emparelhamento não máximo, 5 limite excedido, 6 falha de verificação."
)

# most specific first
_EXIT_CODES: tuple[tuple[type[MarketError], int], ...] = (
    (MarketFileError, EXIT_PARSE),
    (RationalParseError, EXIT_PARSE),
    (OracleCapExceeded, EXIT_CAP),
    (InvalidMarket, EXIT_SHAPE),
    (DimensionMismatch, EXIT_SHAPE),
    (IndexOutOfRange, EXIT_SHAPE),
    (InvalidMatching, EXIT_SHAPE),
    (NotPerfect, EXIT_SHAPE),
    (AlphaOutOfRange, EXIT_SHAPE),
    (MissingInput, EXIT_SHAPE),
)


def exit_code_for(exc: MarketError) -> int:
    for kind, code in _EXIT_CODES:
        if isinstance(exc, kind):
            return code
    return EXIT_SHAPE


def configure_logging(verbose: bool = False) -> None:
    logger = logging.getLogger("marketclear")
    logger.setLevel(logging.DEBUG if verbose else logging.INFO)
    # sys.stderr may have been replaced (and the old one closed) since the last call
    for handler in [h for h in logger.handlers if getattr(h, "_marketclear", False)]:
        logger.removeHandler(handler)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(f"{LOG_PREFIX} %(levelname)s: %(message)s"))
    handler._marketclear = True  # type: ignore[attr-defined]
    logger.addHandler(handler)


def _emit(payload: dict[str, Any]) -> None:
    print(json.dumps(payload, ensure_ascii=False), flush=True)


# ── Parser ────────────────────────────────────────────────────────────────────

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true", help="diagnóstico detalhado em stderr")

    market = argparse.ArgumentParser(add_help=False)
    market.add_argument("--input", "-i", metavar="FILE", help="arquivo de mercado (CSV ou JSON)")
    market.add_argument("--format", "-f", choices=FORMATS, help="formato do arquivo (padrão: pela extensão)")

    parser = argparse.ArgumentParser(
        prog="marketclear",
        description="Preços de equilíbrio e emparelhamentos máximos em mercados de emparelhamento.",
        epilog=_EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMANDO")

    def add(name: str, help_text: str, *parents: argparse.ArgumentParser) -> argparse.ArgumentParser:
        return sub.add_parser(
            name, help=help_text, description=help_text, epilog=_EPILOG,
            parents=[common, *parents], formatter_class=argparse.RawDescriptionHelpFormatter,
        )

    p = add("solve", "calcula preços de equilíbrio e um emparelhamento máximo", market)
    p.add_argument("--method", choices=METHODS, default="auction",
                   help="leilão ascendente ou cancelamento de ciclos (padrão: auction)")

    add("verify", "verifica se os preços do arquivo equilibram o mercado", market)

    p = add("prices", "preços que induzem o emparelhamento dado, ou ciclo que o melhora", market)
    p.add_argument("--pair", action="append", default=[], metavar="B:P",
                   help="par comprador:produto (repetível; 0-based)")

    p = add("enumerate", "lista todos os emparelhamentos induzidos (todos os máximos)", market)
    p.add_argument("--cap", type=int, help=f"máximo de emparelhamentos (padrão: {DEFAULTS['cap']})")

    p = add("check", "executa todas as verificações no arquivo ou em instâncias aleatórias", market)
    p.add_argument("--seed", type=int, help=f"semente (padrão: {DEFAULTS['seed']})")
    p.add_argument("--samples", type=int, help=f"amostras de t e alfa (padrão: {DEFAULTS['samples']})")
    p.add_argument("--instances", type=int, default=20, help="instâncias aleatórias sem --input (padrão: 20)")
    p.add_argument("--oracle-cap", type=int, help=f"maior n para força bruta (padrão: {DEFAULTS['oracle_cap']})")
    p.add_argument("--jobs", type=int, default=1, help="processos paralelos (padrão: 1)")

    add("watch", "resolve o arquivo novamente a cada vez que ele é salvo", market)

    p = add("config", "mostra ou altera os padrões salvos")
    p.add_argument("action", choices=("show", "set"))
    p.add_argument("key", nargs="?", choices=tuple(DEFAULTS))
    p.add_argument("value", nargs="?")

    return parser


# ── Dispatch ──────────────────────────────────────────────────────────────────

def _run(app: MarketClearApp, args: argparse.Namespace) -> int:
    if args.command == "config":
        if args.action == "set":
            if args.key is None or args.value is None:
                log.error("usage: config set KEY VALUE")
                return EXIT_SHAPE
            try:
                app.config.set(args.key, args.value)
            except ValueError as exc:
                log.error("%s", exc)
                return EXIT_SHAPE
        _emit({"settings": app.config.settings, "recent": app.config.recent, "file": str(app.config.path)})
        return EXIT_OK

    needs_input = args.command != "check"
    if needs_input and not args.input:
        log.error("%s needs --input FILE", args.command)
        return EXIT_PARSE

    if args.command == "watch":
        app.watch(args.input, _emit, args.format)
        return EXIT_OK

    market = app.load(args.input, args.format) if args.input else None

    if args.command == "solve":
        result = app.solve(market, args.method)
    elif args.command == "verify":
        result = app.verify(market)
    elif args.command == "prices":
        result = app.prices(market, [parse_pair(text) for text in args.pair])
    elif args.command == "enumerate":
        if args.cap is not None and args.cap < 1:
            log.error("--cap must be at least 1")
            return EXIT_SHAPE
        result = app.enumerate(market, args.cap)
    else:
        for flag, value in (("--samples", args.samples), ("--instances", args.instances),
                            ("--oracle-cap", args.oracle_cap), ("--jobs", args.jobs)):
            if value is not None and value < 1:
                log.error("%s must be at least 1", flag)
                return EXIT_SHAPE
        result = app.check(market, args.seed, args.samples, args.instances, args.oracle_cap, args.jobs)

    for payload in result.payloads:
        _emit(payload)
    return result.exit_code


def main(argv: Sequence[str] | None = None, app: MarketClearApp | None = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)
    app = app or MarketClearApp(ConfigManager())
    try:
        return _run(app, args)
    except MarketError as exc:
        log.error("%s", exc)
        return exit_code_for(exc)
