import sys
import random

import pytest
from hypothesis import strategies as st

from qstream.circuit import KIND, CircuitDag, Tag

ONE_Q = [Tag.H, Tag.S, Tag.SDG, Tag.X, Tag.Y, Tag.Z, Tag.T, Tag.TDG, Tag.I]
TWO_Q = [Tag.CX, Tag.CZ, Tag.SWAP]
CLIFF_1Q = [Tag.H, Tag.S, Tag.SDG, Tag.X, Tag.Y, Tag.Z]


@st.composite
def gate_lists(draw, max_qubits=4, max_gates=25, max_nonclifford=6, clifford_only=False):
    n = draw(st.integers(1, max_qubits))
    ng = draw(st.integers(0, max_gates))
    gates, nc = [], 0
    for _ in range(ng):
        if n >= 2 and draw(st.booleans()):
            tag = draw(st.sampled_from(TWO_Q))
            a = draw(st.integers(0, n - 1))
            b = draw(st.integers(0, n - 2))
            gates.append((KIND[tag], (a, b if b < a else b + 1)))
            continue
        pool = CLIFF_1Q if clifford_only or nc >= max_nonclifford else ONE_Q
        tag = draw(st.sampled_from(pool))
        nc += tag in (Tag.T, Tag.TDG)
        gates.append((KIND[tag], (draw(st.integers(0, n - 1)),)))
    return n, gates


@pytest.fixture
def rng():
    return random.Random(1234)


def dag_of(n, gates):
    return CircuitDag.from_gates(n, gates)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
