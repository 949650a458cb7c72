import itertools
import random

import pytest

from qacd.bn import parse_bif

# acceptance lines collected by tests/test_acceptance.py
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


def bif_text(layout: dict[str, tuple[list[str], list[list[float]]]], card: int = 2) -> str:
    """Tiny BIF writer for hand-built networks: name -> (parents, rows)."""
    lines = ["network test {", "}"]
    for name in layout:
        states = ", ".join(f"s{i}" for i in range(card))
        lines += [f"variable {name} {{", f"  type discrete [ {card} ] {{ {states} }};", "}"]
    for name, (parents, rows) in layout.items():
        if not parents:
            lines += [f"probability ( {name} ) {{", "  table " + ", ".join(map(str, rows[0])) + ";", "}"]
            continue
        lines.append(f"probability ( {name} | {', '.join(parents)} ) {{")
        for cfg, row in zip(itertools.product(range(card), repeat=len(parents)), rows):
            lab = ", ".join(f"s{c}" for c in cfg)
            lines.append(f"  ({lab}) " + ", ".join(map(str, row)) + ";")
        lines.append("}")
    return "\n".join(lines) + "\n"


@pytest.fixture
def chain_net():
    return parse_bif(bif_text({
        "A": ([], [[0.4, 0.6]]),
        "B": (["A"], [[0.9, 0.1], [0.15, 0.85]]),
        "C": (["B"], [[0.85, 0.15], [0.1, 0.9]]),
    }))


@pytest.fixture
def collider_net():
    return parse_bif(bif_text({
        "A": ([], [[0.5, 0.5]]),
        "B": (["A", "C"], [[0.95, 0.05], [0.5, 0.5], [0.5, 0.5], [0.05, 0.95]]),
        "C": ([], [[0.5, 0.5]]),
    }))


@pytest.fixture
def rng():
    return random.Random(1234)
