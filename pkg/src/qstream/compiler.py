"""Compile Clifford+T fragments into bounded graph-state chunks.

Vertex layout of a chunk over n logical qubits with k teleported rotations::

    0 .. n-1          input vertices (teleportation targets for the chunk input)
    n .. 2n-1         initial working vertices, Bell-paired with the inputs
    2n .. 2n+k-1      one fresh vertex per teleported rotation

Compilation runs the fragment on the working vertices of a tableau, so the
tableau ends in the Choi state of the fragment, with every rotation replaced
by a CZ to a fresh |+> vertex followed by H on that vertex.  Measuring the old
vertex in the X-Y plane at the keyed angle and post-selecting outcome 0
leaves Rz(theta) applied on the fresh vertex.  The final tableau is reduced to
(adjacency, local Cliffords); input vertices carry diagonal locals only.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from qstream import clifford1q
from qstream.circuit import GateKind, Tag
from qstream.decomp import DecompositionTable, PendingSequenceError
from qstream.errors import CompileError, ConfigurationError
from qstream.partition import ResourceBounds
from qstream.tableau import Tableau, to_graph

_CLIFFORD_RZ = {0: None, 2: Tag.S, 4: Tag.Z, 6: Tag.SDG}


@dataclass(eq=False)
class GraphChunk:
    n_inputs: int
    k_nonclifford: int
    n_vertices: int
    adjacency: np.ndarray
    locals: list[int]
    tape: list[tuple[int, int]]
    input_map: list[int]
    output_map: list[int]

    def __eq__(self, other):
        if not isinstance(other, GraphChunk):
            return NotImplemented
        return (self.n_inputs == other.n_inputs
                and self.k_nonclifford == other.k_nonclifford
                and self.n_vertices == other.n_vertices
                and np.array_equal(self.adjacency, other.adjacency)
                and list(self.locals) == list(other.locals)
                and [tuple(t) for t in self.tape] == [tuple(t) for t in other.tape]
                and list(self.input_map) == list(other.input_map)
                and list(self.output_map) == list(other.output_map))

    @property
    def edges(self) -> list[tuple[int, int]]:
        iu = np.argwhere(np.triu(self.adjacency, 1))
        return [(int(a), int(b)) for a, b in iu]

    @property
    def n_locals(self) -> int:
        """Non-identity local Cliffords outside the input vertices."""
        inputs = set(self.input_map)
        return sum(1 for v, c in enumerate(self.locals)
                   if c != clifford1q.IDENTITY and v not in inputs)

    def validate(self) -> None:
        n, k, V = self.n_inputs, self.k_nonclifford, self.n_vertices
        adj = self.adjacency
        problems = []
        if V > 2 * n + k:
            problems.append(f"n_vertices {V} exceeds 2n+k = {2 * n + k}")
        if adj.shape != (V, V) or not np.array_equal(adj, adj.T) or adj.diagonal().any():
            problems.append("adjacency must be symmetric with zero diagonal")
        if len(self.locals) != V or any(not 0 <= c < 24 for c in self.locals):
            problems.append("locals must hold one code in 0..23 per vertex")
        if len(self.tape) != k:
            problems.append(f"tape length {len(self.tape)} != k {k}")
        tv = [v for v, _ in self.tape]
        if len(set(tv)) != len(tv) or set(tv) & set(self.output_map):
            problems.append("tape vertices must be distinct and disjoint from outputs")
        for name, m in (("input_map", self.input_map), ("output_map", self.output_map)):
            if len(m) != n or len(set(m)) != n or any(not 0 <= v < V for v in m):
                problems.append(f"{name} must hold {n} distinct vertices")
        if problems:
            raise CompileError("; ".join(problems))


def chunk_size_bound(n: int, k: int) -> tuple[int, int, int, int]:
    """(max_vertices, max_edge_pairs, max_locals, max_keys) for n qubits, k rotations."""
    if n < 1 or k < 0:
        raise ValueError("need n >= 1 and k >= 0")
    v = 2 * n + k
    return v, v * v, n + k, n + k


def rotation_key(kind: GateKind) -> int:
    if kind.tag is Tag.T:
        return 1
    if kind.tag is Tag.TDG:
        return 7
    return kind.rz_key


def compile_chunk(gates, n: int, table: DecompositionTable | None = None,
                  strict: bool = False) -> GraphChunk:
    """Compile ``gates`` [(GateKind, qubits)] acting on qubits 0..n-1."""
    if n < 1:
        raise CompileError("a chunk needs at least one qubit")
    gates = list(gates)
    k = 0
    for kind, qs in gates:
        if kind.tag is Tag.TOFFOLI:
            raise CompileError("Toffoli must be lowered before graph compilation")
        if kind.tag is Tag.MEASURE:
            raise CompileError("measurement cannot be compiled into a chunk")
        if any(not 0 <= q < n for q in qs):
            raise CompileError(f"gate {kind.tag.value}{tuple(qs)} outside the {n} chunk qubits")
        if kind.is_teleported:
            k += 1
            if strict and kind.tag is Tag.RZ:
                if table is None:
                    raise CompileError("strict mode needs a decomposition table")
                try:
                    table.lookup_sequence(kind.rz_key)
                except PendingSequenceError as exc:
                    raise CompileError(str(exc)) from None
    V = 2 * n + k
    t = Tableau.plus_state(V)
    for i in range(n):
        t.cz(i, n + i)
        t.h(n + i)
    cur = [n + i for i in range(n)]
    tape = []
    fresh = 2 * n
    for kind, qs in gates:
        if kind.is_teleported:
            q = qs[0]
            v, w = cur[q], fresh
            fresh += 1
            t.cz(v, w)
            t.h(w)
            cur[q] = w
            tape.append((v, rotation_key(kind)))
        elif kind.tag is Tag.RZ:
            tag = _CLIFFORD_RZ[kind.rz_key]
            if tag is not None:
                t.apply_gate(tag, (cur[qs[0]],))
        else:
            t.apply_gate(kind, tuple(cur[q] for q in qs))
    adjacency, locals_ = to_graph(t, order=range(V))
    chunk = GraphChunk(n, k, V, adjacency, locals_, tape, list(range(n)), cur)
    for v in chunk.input_map:
        if not clifford1q.is_diagonal(chunk.locals[v]):
            raise CompileError(f"input vertex {v} received a non-diagonal local")
    chunk.validate()
    return chunk


def identity_chunk(n: int) -> GraphChunk:
    return compile_chunk([], n)


@dataclass
class StitchPlan:
    producer_chunk: int
    consumer_chunk: int
    wire_map: list[tuple[int, int]] = field(default_factory=list)

    @property
    def added_vertices(self) -> int:
        return len(self.wire_map)


def stitch(a: GraphChunk, b: GraphChunk, producer_id: int = 0,
           consumer_id: int = 1) -> StitchPlan:
    """Pair a's outputs with b's teleported inputs, logical qubit by qubit."""
    if len(a.output_map) != len(b.input_map):
        raise CompileError(
            f"arity mismatch: producer has {len(a.output_map)} outputs, "
            f"consumer has {len(b.input_map)} inputs")
    return StitchPlan(producer_id, consumer_id,
                      list(zip(a.output_map, b.input_map)))


def bounds_for_cache(max_n: int, max_k: int, max_gates: int = 10_000,
                     window_size: int = 65_536) -> ResourceBounds:
    """Partitioner bounds whose partitions compile within chunk_size_bound(max_n, max_k)."""
    if max_n < 1 or max_k < 1:
        raise ConfigurationError("max_n and max_k must be >= 1")
    return ResourceBounds(max_t_count=max_k, max_qubits=max_n,
                          max_gates=max_gates, window_size=window_size)
