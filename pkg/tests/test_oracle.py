import numpy as np
import pytest

from qstream.circuit import KIND, CircuitDag, Tag
from qstream.compiler import compile_chunk, identity_chunk
from qstream.errors import OracleError
from qstream.oracle import (basis_state, chunk_map, chunk_map_network, execute_chunk_postselected,
                            fidelity, process_check, process_equal, simulate_circuit,
                            simulate_gates)

H, T, S, CX = (KIND[t] for t in (Tag.H, Tag.T, Tag.S, Tag.CX))


def test_basic_gates():
    assert np.allclose(simulate_gates([(H, (0,))], 1), [2 ** -0.5, 2 ** -0.5])
    out = simulate_gates([(CX, (0, 1))], 2, basis_state([1, 0]))
    assert np.allclose(out, basis_state([1, 1]))


def test_t_chunk_on_plus():
    c = compile_chunk([(T, (0,))], 1)
    out = execute_chunk_postselected(c, np.array([1, 1]) / np.sqrt(2))
    want = np.array([1, np.exp(1j * np.pi / 4)]) / np.sqrt(2)
    assert fidelity(out, want) == pytest.approx(1, abs=1e-12)


def test_identity_chunk_keeps_state():
    psi = np.array([0.6, 0.8j])
    assert fidelity(execute_chunk_postselected(identity_chunk(1), psi), psi) == pytest.approx(1)


def test_process_equal_reflexive_and_t_t_s():
    dag = CircuitDag.from_gates(2, [(H, (0,)), (T, (0,)), (CX, (0, 1))])
    c = compile_chunk(dag.gates(), 2)
    assert process_equal(dag, [(c, [0, 1])], tol=1e-12)
    t = compile_chunk([(T, (0,))], 1)
    assert process_equal([(S, (0,))], [(t, [0]), (t, [0])], m=1)


def test_corrupted_chunk_detected():
    gates = [(H, (0,)), (T, (0,)), (CX, (0, 1)), (T, (1,)), (H, (1,))]
    c = compile_chunk(gates, 2)
    flips = 0
    for a in range(c.n_vertices):
        for b in range(a + 1, c.n_vertices):
            bad = compile_chunk(gates, 2)
            bad.adjacency[a, b] ^= True
            bad.adjacency[b, a] ^= True
            if not process_equal(gates, [(bad, [0, 1])], m=2):
                flips += 1
    assert flips > 0
    bad = compile_chunk(gates, 2)
    bad.adjacency[0, 2] ^= True
    bad.adjacency[2, 0] ^= True
    assert not process_equal(gates, [(bad, [0, 1])], m=2)


def test_network_contraction_agrees():
    gates = [(H, (0,)), (T, (0,)), (CX, (0, 1)), (T, (1,)), (H, (2,)), (CX, (2, 0))]
    c = compile_chunk(gates, 3)
    assert np.allclose(chunk_map(c), chunk_map_network(c))


def test_limits():
    with pytest.raises(OracleError):
        simulate_circuit(CircuitDag(15))
    with pytest.raises(OracleError):
        process_check(CircuitDag(8), [])
