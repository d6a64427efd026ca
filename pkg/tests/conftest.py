from functools import lru_cache
from pathlib import Path

import pytest

from pebc.checker import check_model, with_constants
from pebc.parser import load_model, parse_model

MODELS = Path(__file__).resolve().parents[1] / "src" / "pebc" / "models"
GEAR = MODELS / "gear.peb"
P2P = MODELS / "p2p.peb"


@lru_cache(maxsize=None)
def gear_model():
    return check_model(load_model(GEAR))


@lru_cache(maxsize=None)
def p2p_model(n=16, k=30):
    return check_model(with_constants(load_model(P2P), {"N": n, "K": k}))


def checked(text):
    return check_model(parse_model(text))


@pytest.fixture
def gear():
    return gear_model()


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
