import random

import numpy as np
from hypothesis import given, settings

from conftest import gate_lists
from qstream.circuit import KIND, CircuitDag, Tag, build_edge_list, lower_toffoli
from qstream.generators import cuccaro_adder
from qstream.oracle import circuit_unitary, process_fidelity


def test_single_gate_has_no_edges():
    dag = CircuitDag.from_gates(1, [(KIND[Tag.H], (0,))])
    assert build_edge_list(dag).edges == []


def test_hand_traced_edge_list():
    dag = CircuitDag.from_gates(2, [(KIND[Tag.H], (0,)), (KIND[Tag.T], (0,)),
                                    (KIND[Tag.CX], (0, 1)), (KIND[Tag.T], (1,))])
    assert build_edge_list(dag).edges == [(0, 1), (1, 2), (2, 3)]


def _wire_oracle(dag):
    """Independent wire following: last writer per qubit."""
    last = {}
    edges = set()
    for node in dag.nodes:
        for q in node.qubits:
            if q in last:
                edges.add((last[q], node.id))
            last[q] = node.id
    return edges


def test_swap_heavy_chains_match_wire_oracle():
    rng = random.Random(7)
    dag = CircuitDag(3)
    for _ in range(300):
        tag = rng.choice([Tag.SWAP, Tag.SWAP, Tag.CX, Tag.H])
        dag.add(tag, rng.sample(range(3), KIND[tag].arity))
    el = build_edge_list(dag).edges
    assert set(el) == _wire_oracle(dag)
    assert len(el) == len(set(el))
    assert el == sorted(el, key=lambda e: (e[1], e[0]))


@given(gate_lists(max_qubits=5, max_gates=40))
@settings(max_examples=60, deadline=None)
def test_edge_list_property(case):
    n, gates = case
    dag = CircuitDag.from_gates(n, gates)
    assert set(build_edge_list(dag).edges) == _wire_oracle(dag)


def test_toffoli_lowering_is_exact():
    dag = CircuitDag(3)
    dag.add(Tag.TOFFOLI, (0, 1, 2))
    low = lower_toffoli(dag)
    assert len(low) == 15 and low.t_count() == 7
    u = circuit_unitary(dag.gates(), 3)
    v = circuit_unitary(low.gates(), 3)
    assert process_fidelity(u, v) > 1 - 1e-12


def test_lowering_without_toffoli_is_identity():
    dag = CircuitDag.from_gates(2, [(KIND[Tag.CX], (0, 1))])
    assert lower_toffoli(dag) is dag


def test_adder_t_count():
    dag = cuccaro_adder(4)
    assert dag.count(Tag.TOFFOLI) == 8
    assert lower_toffoli(dag).t_count() == 7 * 8


def test_dag_rejects_bad_gates():
    dag = CircuitDag(2)
    for qs in [(0, 0), (0, 2)]:
        try:
            dag.add(Tag.CX, qs)
        except (ValueError, IndexError):
            continue
        raise AssertionError(f"accepted {qs}")


def test_isomorphic_and_fragment():
    a = CircuitDag.from_gates(2, [(KIND[Tag.H], (0,)), (KIND[Tag.CX], (0, 1))])
    b = CircuitDag.from_gates(2, [(KIND[Tag.H], (0,)), (KIND[Tag.CX], (0, 1))])
    assert a.isomorphic(b)
    assert a.fragment([1, 0]) == [(KIND[Tag.H], (0,)), (KIND[Tag.CX], (0, 1))]
    assert np.array_equal(a.preds[1], [0, -1])
