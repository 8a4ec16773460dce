#!/usr/bin/env python3
"""
MarketClear - Preços de equilíbrio e emparelhamentos máximos em mercados de emparelhamento.

Uso:
    python main.py solve --input mercado.csv
    python main.py --help

Dependências:
    pip install -r requirements.txt
"""

import sys
import os

# the modules are flat files next to this script
_HERE = os.path.dirname(os.path.abspath(__file__))
if _HERE not in sys.path:
    sys.path.insert(0, _HERE)


def _check_dependencies(argv: list[str]) -> None:
    packages = ["networkx"]
    if "watch" in argv:
        packages.append("watchdog")
    missing = []
    for pkg in packages:
        try:
            __import__(pkg)
        except ImportError:
            missing.append(pkg)
    if missing:
        print(
            "Dependências faltando. Instale com:\n"
            f"    pip install {' '.join(missing)}\n",
            file=sys.stderr,
        )
        sys.exit(1)


def main() -> None:
    argv = sys.argv[1:]
    _check_dependencies(argv)

    from cli import main as run_cli
    sys.exit(run_cli(argv))


if __name__ == "__main__":
    main()
