import random
from pathlib import Path

import pytest

from uext.presentation import parse_presentation
from uext.structure import Structure, parse_frame

DATA = Path(__file__).parent / "data"

CORPUS = ["fan", "k", "loops", "empty_block", "chains", "finite", "twins", "exc"]
HUB_FREE = ["loops", "empty_block", "chains", "finite"]

ACCEPTANCE_LINES: dict[int, str] = {}


def load_presentation(name: str):
    return parse_presentation((DATA / f"{name}.abp").read_text())


def load_frame(name: str) -> Structure:
    return parse_frame((DATA / f"{name}.frame").read_text())


def random_structure(rng: random.Random, n: int, density: float = 0.35, hubs: int = 0) -> Structure:
    nodes = tuple(f"n{i}" for i in range(n))
    edges = frozenset((a, b) for a in nodes for b in nodes if rng.random() < density)
    return Structure(nodes, edges, frozenset(nodes[:hubs]))


@pytest.fixture
def rng():
    return random.Random(20261018)


def record_acceptance(number: int, ok: bool, detail: str) -> None:
    ACCEPTANCE_LINES[number] = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(ACCEPTANCE_LINES[number])


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[number])
