import os
import sys

import pytest

# Same trick as main.py: the modules live at the repository root.
_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
if _ROOT not in sys.path:
    sys.path.insert(0, _ROOT)

from market import ValuationMatrix  # noqa: E402

EXAMPLE_ROWS = [[12, 4, 2], [8, 7, 6], [7, 5, 2]]


@pytest.fixture(autouse=True)
def isolated_config(tmp_path, monkeypatch):
    home = tmp_path / "marketclear-home"
    monkeypatch.setenv("MARKETCLEAR_HOME", str(home))
    return home


@pytest.fixture
def example():
    return ValuationMatrix.of(EXAMPLE_ROWS)
