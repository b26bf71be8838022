import numpy as np
import pytest

from qstream.cache import ChunkCache
from qstream.errors import ConfigurationError
from qstream.generators import (StriderConfig, adder_input_bits, block_partitions,
                                cuccaro_adder, lower_gates, read_adder_output, strided_partitions,
                                strided_plan, synthetic_repetitive)
from qstream.oracle import simulate_circuit, basis_state
from qstream.qasm import emit_qasm


def _run_adder(bits, a, b, carry_out=True):
    dag = cuccaro_adder(bits, carry_out)
    m = dag.num_qubits
    out = simulate_circuit(dag, basis_state(adder_input_bits(a, b, bits)))
    idx = int(np.argmax(np.abs(out)))
    assert abs(out[idx]) == pytest.approx(1)
    return read_adder_output([(idx >> (m - 1 - j)) & 1 for j in range(m)], bits)


@pytest.mark.parametrize("bits", [1, 2, 3, 4, 5])
def test_adder_exhaustive(bits):
    for a in range(2 ** bits):
        for b in range(2 ** bits):
            s, a_out, z = _run_adder(bits, a, b)
            assert (s, a_out, z) == ((a + b) % 2 ** bits, a, (a + b) >> bits)


def test_adder_counts():
    from qstream.circuit import Tag, lower_toffoli
    dag = cuccaro_adder(1)
    assert dag.count(Tag.TOFFOLI) == 2 and lower_toffoli(dag).t_count() == 14
    assert cuccaro_adder(7).num_qubits == 16
    with pytest.raises(ConfigurationError):
        cuccaro_adder(0)


@pytest.mark.parametrize("cfg", [StriderConfig(8, 4, 0, True), StriderConfig(10, 4, 2),
                                 StriderConfig(7, 2, 1, True), StriderConfig(5, 5)])
def test_plan_reconstructs_adder(cfg):
    plan = strided_plan(cfg)
    assert plan.gates() == lower_gates(cuccaro_adder(cfg.bits, cfg.carry_out).gates())
    assert len(plan.unique_chunks) <= 4


def test_plan_counts():
    plan = strided_plan(StriderConfig(2048, 64))
    assert len(plan.unique_chunks) == 2 and len(plan.chunk_keys) == 64
    plan = strided_plan(StriderConfig(128, 128))
    assert len(plan.unique_chunks) == 2 and len(plan.chunk_keys) == 2


def test_warm_plan_compiles_nothing():
    c = ChunkCache()
    strided_plan(StriderConfig(64, 8, 0), c)
    assert strided_plan(StriderConfig(256, 8, 0), c).compiled == 0


@pytest.mark.parametrize("args", [(0, 1, 0), (4, 8, 0), (8, 4, 4), (9, 4, 0), (8, 4, -1)])
def test_invalid_strider_configs(args):
    with pytest.raises(ConfigurationError):
        StriderConfig(*args)


def test_strided_partitions_align_with_blocks():
    cfg = StriderConfig(12, 4, 0, carry_out=True)
    dag, parts = strided_partitions(cfg)
    assert len(parts) == 2 * 3 + 1
    assert sum(len(p.node_ids) for p in parts) == len(dag)


def test_synthetic_deterministic_and_repetitive():
    a = emit_qasm(synthetic_repetitive(10, 12, 3, 4, seed=5))
    b = emit_qasm(synthetic_repetitive(10, 12, 3, 4, seed=5))
    assert a == b
    dag = synthetic_repetitive(10, 12, 3, 4, seed=5)
    parts = block_partitions(dag, 12)
    assert len(parts) == 10
    with pytest.raises(ConfigurationError):
        synthetic_repetitive(3, 5, 4, 2)
