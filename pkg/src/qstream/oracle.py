"""Dense statevector oracle for small circuits and post-selected chunk execution.

Qubit 0 is the most significant bit of a basis index.  Global phase is never
aligned; comparisons use |<a|b>|^2.
"""

from __future__ import annotations

import math

import numpy as np

from qstream import clifford1q
from qstream.circuit import CircuitDag, GateKind, Tag
from qstream.compiler import GraphChunk
from qstream.decomp import DecompositionTable, UnknownKeyError
from qstream.errors import OracleError

MAX_QUBITS = 14
MAX_CHOI_QUBITS = 7

_S2 = 1 / math.sqrt(2)
_MATS = {
    Tag.I: np.eye(2, dtype=complex),
    Tag.X: np.array([[0, 1], [1, 0]], dtype=complex),
    Tag.Y: np.array([[0, -1j], [1j, 0]], dtype=complex),
    Tag.Z: np.diag([1, -1]).astype(complex),
    Tag.H: np.array([[_S2, _S2], [_S2, -_S2]], dtype=complex),
    Tag.S: np.diag([1, 1j]),
    Tag.SDG: np.diag([1, -1j]),
    Tag.T: np.diag([1, np.exp(1j * math.pi / 4)]),
    Tag.TDG: np.diag([1, np.exp(-1j * math.pi / 4)]),
}


def _perm_matrix(f, nbits):
    d = 2 ** nbits
    m = np.zeros((d, d), dtype=complex)
    for i in range(d):
        m[f(i), i] = 1
    return m


_MATS[Tag.CX] = _perm_matrix(lambda i: i ^ 1 if i & 2 else i, 2)
_MATS[Tag.SWAP] = _perm_matrix(lambda i: ((i & 1) << 1) | (i >> 1), 2)
_MATS[Tag.CZ] = np.diag([1, 1, 1, -1]).astype(complex)
_MATS[Tag.TOFFOLI] = _perm_matrix(lambda i: i ^ 1 if (i & 6) == 6 else i, 3)


def rz(theta: float) -> np.ndarray:
    return np.diag([1, np.exp(1j * theta)])


def gate_matrix(kind: GateKind, table: DecompositionTable | None = None) -> np.ndarray:
    if kind.tag is Tag.RZ:
        if kind.theta is not None:
            return rz(kind.theta)
        if table is None:
            if kind.rz_key < 8:
                return rz(kind.rz_key * math.pi / 4)
            raise OracleError(f"Rz key {kind.rz_key} needs a decomposition table")
        try:
            return rz(table.theta(kind.rz_key))
        except UnknownKeyError as exc:
            raise OracleError(str(exc)) from None
    if kind.tag is Tag.MEASURE:
        raise OracleError("measurement is not a unitary gate")
    return _MATS[kind.tag]


def apply_matrix(state: np.ndarray, u: np.ndarray, qubits, m: int) -> np.ndarray:
    """Apply a 2^a x 2^a (not necessarily unitary) matrix to ``qubits``."""
    a = len(qubits)
    psi = state.reshape((2,) * m)
    psi = np.moveaxis(psi, list(qubits), list(range(a)))
    shape = psi.shape
    psi = (u @ psi.reshape(2 ** a, -1)).reshape(shape)
    return np.moveaxis(psi, list(range(a)), list(qubits)).reshape(-1)


def basis_state(bits, m: int | None = None) -> np.ndarray:
    """|b0 b1 ...> with qubit 0 first."""
    bits = list(bits)
    m = len(bits) if m is None else m
    idx = 0
    for b in bits:
        idx = (idx << 1) | int(b)
    v = np.zeros(2 ** m, dtype=complex)
    v[idx] = 1
    return v


def simulate_gates(gates, m: int, input_state=None, table=None) -> np.ndarray:
    if m > MAX_QUBITS:
        raise OracleError(f"{m} qubits exceeds the oracle limit of {MAX_QUBITS}")
    state = basis_state([0] * m) if input_state is None else np.array(input_state, dtype=complex)
    for kind, qs in gates:
        state = apply_matrix(state, gate_matrix(kind, table), qs, m)
    return state


def simulate_circuit(dag: CircuitDag, input_state=None, table=None) -> np.ndarray:
    return simulate_gates(dag.gates(), dag.num_qubits, input_state, table)


def circuit_unitary(gates, m: int, table=None) -> np.ndarray:
    d = 2 ** m
    return np.stack([simulate_gates(gates, m, np.eye(d, dtype=complex)[j], table)
                     for j in range(d)], axis=1)


def fidelity(a: np.ndarray, b: np.ndarray) -> float:
    na, nb = np.vdot(a, a).real, np.vdot(b, b).real
    if na == 0 or nb == 0:
        return 0.0
    return float(abs(np.vdot(a, b)) ** 2 / (na * nb))


# -- stabilizer states ---------------------------------------------------

def _pauli_apply(state, x, z, sign, m):
    """Apply (-1)^sign * prod_j X^x_j Z^z_j (Y = iXZ) to a vector."""
    idx = np.arange(2 ** m)
    xm = zm = 0
    ny = 0
    for j in range(m):
        bit = 1 << (m - 1 - j)
        if x[j]:
            xm |= bit
        if z[j]:
            zm |= bit
        if x[j] and z[j]:
            ny += 1
    par = np.bitwise_count((idx & zm).astype(np.uint64)).astype(np.int64) & 1
    phase = (1j ** ny) * (-1) ** int(sign)
    out = np.empty_like(state)
    out[idx ^ xm] = phase * ((-1.0) ** par) * state
    return out


def tableau_statevector(t) -> np.ndarray:
    """State stabilized by every row of a full-rank tableau."""
    m = t.n_vertices
    if m > MAX_QUBITS:
        raise OracleError("tableau too large for the oracle")
    rng = np.random.default_rng(12345)
    psi = rng.normal(size=2 ** m) + 1j * rng.normal(size=2 ** m)
    x, z = t.x_bits(), t.z_bits()
    for i in range(m):
        psi = 0.5 * (psi + _pauli_apply(psi, x[i], z[i], t.phase[i], m))
    norm = np.linalg.norm(psi)
    if norm < 1e-8:
        raise OracleError("projection onto stabilizer state vanished")
    return psi / norm


def graph_state(adjacency: np.ndarray, locals_=None, inverse: bool = True) -> np.ndarray:
    """|+>^V, CZ per edge, then the inverse of each local (or the local itself)."""
    V = adjacency.shape[0]
    if V > MAX_QUBITS:
        raise OracleError(f"{V} vertices exceeds the oracle limit of {MAX_QUBITS}")
    idx = np.arange(2 ** V)
    bits = ((idx[:, None] >> (V - 1 - np.arange(V))[None, :]) & 1).astype(np.int64)
    upper = np.triu(adjacency, 1).astype(np.int64)
    parity = np.einsum("ia,ab,ib->i", bits, upper, bits) & 1
    psi = ((-1.0) ** parity).astype(complex) / math.sqrt(2 ** V)
    if locals_ is not None:
        for v, code in enumerate(locals_):
            if code:
                c = clifford1q.INVERSE[code] if inverse else code
                psi = apply_matrix(psi, clifford1q.MATRICES[c], (v,), V)
    return psi


# -- chunk execution -----------------------------------------------------

def _tape_bra(theta: float) -> np.ndarray:
    # outcome-0 projector of the X-Y plane measurement at angle -theta
    return np.array([1, np.exp(1j * theta)]) / math.sqrt(2)


def chunk_map(chunk: GraphChunk, table: DecompositionTable | None = None) -> np.ndarray:
    """Linear map input -> output of the post-selected chunk (2^n x 2^n).

    Input basis state |j> teleported onto the input vertices is the projection
    of those vertices onto <j|; tape vertices are projected onto their
    outcome-0 measurement bras.  Chunks up to MAX_QUBITS vertices go through
    the dense graph state; larger ones through :func:`chunk_map_network`.
    """
    V, n = chunk.n_vertices, chunk.n_inputs
    if V > MAX_QUBITS:
        return chunk_map_network(chunk, table)
    psi = graph_state(chunk.adjacency, chunk.locals).reshape((2,) * V)
    letters = [chr(ord("a") + i) for i in range(V)]
    operands, subs = [psi], ["".join(letters)]
    for v, key in chunk.tape:
        operands.append(_tape_bra(_theta(key, table)))
        subs.append(letters[v])
    out_letters = "".join(letters[v] for v in chunk.output_map)
    in_letters = "".join(letters[v] for v in chunk.input_map)
    expr = ",".join(subs) + "->" + out_letters + in_letters
    m = np.einsum(expr, *operands)
    return m.reshape(2 ** n, 2 ** n)


_EDGE = np.array([[1, 1], [1, -1]], dtype=complex)


def chunk_map_network(chunk: GraphChunk, table: DecompositionTable | None = None) -> np.ndarray:
    """Same map as :func:`chunk_map`, contracted as a tensor network.

    Vertex v carries a hyper-index x_v (its |+> expansion); each edge is the
    2x2 tensor (-1)^(x_a x_b); the inverse local Clifford maps x_v to the
    physical index, which is either projected (tape, input) or left open.
    """
    V, n = chunk.n_vertices, chunk.n_inputs
    if V + 2 * n > 52:
        raise OracleError(f"chunk with {V} vertices is too large for the oracle")
    ops: list = []
    for a, b in chunk.edges:
        ops += [_EDGE, [a, b]]
    open_index = {v: V + i for i, v in enumerate(chunk.output_map)}
    open_index.update({v: V + n + i for i, v in enumerate(chunk.input_map)})
    tape = dict(chunk.tape)
    for v in range(V):
        # rows: physical basis after the inverse local, columns: x_v
        m = clifford1q.MATRICES[clifford1q.INVERSE[chunk.locals[v]]] * _S2
        if v in tape:
            ops += [_tape_bra(_theta(tape[v], table)) @ m, [v]]
        elif v in open_index:
            ops += [m, [open_index[v], v]]
        else:
            raise OracleError(f"vertex {v} is neither tape, input nor output")
    out = [V + i for i in range(n)] + [V + n + i for i in range(n)]
    m = np.einsum(*ops, out, optimize="greedy")
    return m.reshape(2 ** n, 2 ** n)


def _theta(key, table):
    if table is None and key < 8:
        return key * math.pi / 4
    if table is None:
        raise OracleError(f"tape key {key} needs a decomposition table")
    try:
        return table.theta(key)
    except UnknownKeyError as exc:
        raise OracleError(str(exc)) from None


def execute_chunk_postselected(chunk: GraphChunk, input_state=None,
                               table: DecompositionTable | None = None) -> np.ndarray:
    n = chunk.n_inputs
    if input_state is None:
        input_state = basis_state([0] * n)
    out = chunk_map(chunk, table) @ np.asarray(input_state, dtype=complex)
    norm = np.linalg.norm(out)
    if norm < 1e-12:
        raise OracleError("post-selected branch has zero probability")
    return out / norm


def chain_map(chunks, m: int, table=None) -> np.ndarray:
    """Compose chunks placed on an m-qubit register.

    ``chunks`` holds (GraphChunk, assignment) pairs; ``assignment[i]`` is the
    register qubit carrying chunk qubit i (None means identity on all m).
    """
    d = 2 ** m
    total = np.eye(d, dtype=complex)
    for chunk, assignment in chunks:
        qs = list(range(m)) if assignment is None else list(assignment)
        mc = chunk_map(chunk, table)
        total = np.stack([apply_matrix(total[:, j], mc, qs, m) for j in range(d)], axis=1)
    return total


def process_fidelity(u: np.ndarray, m: np.ndarray) -> float:
    """Fidelity of the normalised Choi states of two maps of equal dimension."""
    d = u.shape[0]
    num = abs(np.trace(u.conj().T @ m)) ** 2
    den = np.trace(u.conj().T @ u).real * np.trace(m.conj().T @ m).real
    if den == 0:
        return 0.0
    return float(num / den)


def choi_state(u: np.ndarray) -> np.ndarray:
    """sum_j |j> (x) U|j>, normalised."""
    v = u.T.reshape(-1)
    return v / np.linalg.norm(v)


def process_equal(dag_or_gates, chunks, tol: float = 1e-9, m: int | None = None,
                  table=None) -> bool:
    return process_check(dag_or_gates, chunks, m=m, table=table) >= 1 - tol


def process_check(dag_or_gates, chunks, m: int | None = None, table=None) -> float:
    if isinstance(dag_or_gates, CircuitDag):
        gates, m = dag_or_gates.gates(), dag_or_gates.num_qubits
    else:
        gates = list(dag_or_gates)
    if m > MAX_CHOI_QUBITS:
        raise OracleError(f"{m} qubits exceeds the Choi limit of {MAX_CHOI_QUBITS}")
    u = circuit_unitary(gates, m, table)
    if isinstance(chunks, np.ndarray):
        mm = chunks
    else:
        mm = chain_map(chunks, m, table)
    return fidelity(choi_state(u), choi_state(mm)) if np.linalg.norm(mm) > 0 else 0.0
