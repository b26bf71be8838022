import random

import pytest
from hypothesis import given, settings, strategies as st

from qstream.circuit import KIND, CircuitDag, Tag, build_edge_list
from qstream.errors import ConfigurationError
from qstream.generators import random_clifford_t
from qstream.partition import (ResourceBounds, UnionFind, partition_stream, peak_memory_nodes,
                               quotient_edges, union)


def _four_gate():
    return CircuitDag.from_gates(2, [(KIND[Tag.H], (0,)), (KIND[Tag.T], (0,)),
                                     (KIND[Tag.CX], (0, 1)), (KIND[Tag.T], (1,))])


def test_union_respects_t_bound():
    dag = CircuitDag.from_gates(1, [(KIND[Tag.T], (0,)), (KIND[Tag.T], (0,))])
    uf = UnionFind(dag)
    assert union(uf, 0, 1, ResourceBounds(max_t_count=2))
    assert uf.agg(0)[0] == 2
    uf = UnionFind(dag)
    assert not union(uf, 0, 1, ResourceBounds(max_t_count=1))
    assert uf.find(0) != uf.find(1) and uf.agg(1) == (1, 1, 1)


def test_hand_traced_partition():
    dag = _four_gate()
    parts = list(partition_stream(build_edge_list(dag), dag,
                                  ResourceBounds(max_t_count=1, window_size=4)))
    assert [p.node_ids for p in parts] == [[0, 1, 2], [3]]
    assert parts[0].boundary_out == {1: 3} and parts[1].boundary_in == {1: 2}


def test_empty_and_singleton_windows():
    dag = CircuitDag(1)
    assert list(partition_stream(build_edge_list(dag), dag, ResourceBounds())) == []
    dag = random_clifford_t(random.Random(1), 3, 50)
    parts = list(partition_stream(build_edge_list(dag), dag, ResourceBounds(window_size=1)))
    assert [p.node_ids for p in parts] == [[i] for i in range(50)]


def test_lone_gate_over_bound():
    dag = CircuitDag.from_gates(3, [(KIND[Tag.CX], (0, 1))])
    with pytest.raises(ConfigurationError, match="gate 0"):
        list(partition_stream(build_edge_list(dag), dag, ResourceBounds(max_qubits=1)))
    with pytest.raises(ConfigurationError):
        ResourceBounds(max_t_count=0)


def test_peak_memory():
    assert peak_memory_nodes(ResourceBounds(window_size=1024)) == 1024
    dag = random_clifford_t(random.Random(2), 8, 20000)
    stats = {}
    b = ResourceBounds(window_size=1024)
    list(partition_stream(build_edge_list(dag), dag, b, stats=stats))
    assert stats["peak_live_nodes"] <= 2 * b.window_size and stats["windows"] == 20


def check_partitions(dag, parts, bounds):
    seen = sorted(i for p in parts for i in p.node_ids)
    assert seen == list(range(len(dag)))
    assert [p.id for p in parts] == list(range(len(parts)))
    for p in parts:
        assert p.t_count == sum(dag.nodes[i].kind.t_weight() for i in p.node_ids)
        assert p.t_count <= bounds.max_t_count
        assert p.gate_count == len(p.node_ids) <= bounds.max_gates
        qs = {q for i in p.node_ids for q in dag.nodes[i].qubits}
        assert qs == p.qubit_set and len(qs) <= bounds.max_qubits
    # emission order must already be a topological order of the quotient
    for a, b in quotient_edges(dag, parts):
        assert a < b


@given(st.integers(0, 10_000), st.integers(1, 8), st.integers(2, 5), st.integers(1, 30),
       st.integers(1, 300))
@settings(max_examples=60, deadline=None)
def test_random_partitions_valid(seed, max_t, max_q, max_g, window):
    dag = random_clifford_t(random.Random(seed), 6, 400)
    bounds = ResourceBounds(max_t, max_q, max_g, window)
    check_partitions(dag, list(partition_stream(build_edge_list(dag), dag, bounds)), bounds)


def test_to_json_shape():
    dag = _four_gate()
    p = next(partition_stream(build_edge_list(dag), dag, ResourceBounds(max_t_count=1)))
    j = p.to_json()
    assert set(j) == {"id", "node_ids", "t_count", "gate_count", "qubit_set", "boundaries"}
    assert j["boundaries"]["out"] == {"1": 3}
