"""Circuit DAG: gate set, wire links and the topologically ordered edge list."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from qstream.decomp import CLIFFORD_KEYS


class Tag(enum.Enum):
    I = "id"
    X = "x"
    Y = "y"
    Z = "z"
    H = "h"
    S = "s"
    SDG = "sdg"
    T = "t"
    TDG = "tdg"
    CX = "cx"
    CZ = "cz"
    SWAP = "swap"
    TOFFOLI = "ccx"
    RZ = "rz"
    MEASURE = "measure"


ARITY = {Tag.CX: 2, Tag.CZ: 2, Tag.SWAP: 2, Tag.TOFFOLI: 3}
CLIFFORD_TAGS = frozenset({Tag.I, Tag.X, Tag.Y, Tag.Z, Tag.H, Tag.S, Tag.SDG,
                           Tag.CX, Tag.CZ, Tag.SWAP})


@dataclass(frozen=True)
class GateKind:
    tag: Tag
    rz_key: int | None = None
    # carried for emission and simulation only; never part of identity
    theta: float | None = field(default=None, compare=False)

    def __post_init__(self):
        if (self.tag is Tag.RZ) != (self.rz_key is not None):
            raise ValueError("rz_key must be present exactly for Rz")

    @property
    def arity(self) -> int:
        return ARITY.get(self.tag, 1)

    @property
    def is_clifford(self) -> bool:
        return self.tag in CLIFFORD_TAGS

    @property
    def is_teleported(self) -> bool:
        """True for gates the graph compiler implements by a measured vertex."""
        if self.tag in (Tag.T, Tag.TDG):
            return True
        return self.tag is Tag.RZ and self.rz_key not in CLIFFORD_KEYS

    def t_weight(self, table=None) -> int:
        if self.tag in (Tag.T, Tag.TDG):
            return 1
        if self.tag is Tag.TOFFOLI:
            return 7
        if self.tag is Tag.RZ:
            if self.rz_key in CLIFFORD_KEYS:
                return 0
            return table.t_weight(self.rz_key) if table is not None else 1
        return 0


KIND = {tag: GateKind(tag) for tag in Tag if tag is not Tag.RZ}


@dataclass(frozen=True, slots=True)
class GateNode:
    id: int
    kind: GateKind
    qubits: tuple[int, ...]
    topo_index: int


class CircuitDag:
    """Gates in program order with per-qubit predecessor/successor links.

    Node ids are dense and equal to the topological (program) index.
    ``preds[i][j]`` is the previous node on ``nodes[i].qubits[j]`` or -1;
    ``succs`` mirrors it forward.
    """

    def __init__(self, num_qubits: int):
        if num_qubits < 1:
            raise ValueError("num_qubits must be >= 1")
        self.num_qubits = num_qubits
        self.nodes: list[GateNode] = []
        self.preds: list[list[int]] = []
        self.succs: list[list[int]] = []
        self._last = [-1] * num_qubits

    @classmethod
    def from_gates(cls, num_qubits: int, gates: Iterable) -> "CircuitDag":
        dag = cls(num_qubits)
        for kind, qubits in gates:
            dag.add(kind, qubits)
        return dag

    def add(self, kind: GateKind | Tag, qubits: Sequence[int]) -> int:
        if isinstance(kind, Tag):
            kind = KIND[kind]
        qubits = tuple(qubits)
        if len(qubits) != kind.arity:
            raise ValueError(f"{kind.tag.value} expects {kind.arity} qubits, got {len(qubits)}")
        if len(set(qubits)) != len(qubits):
            raise ValueError(f"repeated qubit in {kind.tag.value} {qubits}")
        nid = len(self.nodes)
        last = self._last
        pred = []
        for j, q in enumerate(qubits):
            if not 0 <= q < self.num_qubits:
                raise IndexError(f"qubit {q} out of range for {self.num_qubits} qubits")
            p = last[q]
            pred.append(p)
            if p >= 0:
                pnode = self.nodes[p]
                self.succs[p][pnode.qubits.index(q)] = nid
            last[q] = nid
        self.nodes.append(GateNode(nid, kind, qubits, nid))
        self.preds.append(pred)
        self.succs.append([-1] * len(qubits))
        return nid

    def __len__(self) -> int:
        return len(self.nodes)

    def gates(self):
        return [(n.kind, n.qubits) for n in self.nodes]

    def t_count(self, table=None) -> int:
        return sum(n.kind.t_weight(table) for n in self.nodes)

    def count(self, tag: Tag) -> int:
        return sum(1 for n in self.nodes if n.kind.tag is tag)

    def wire_edges(self):
        """Yield (src, dst, qubit) for every consecutive pair on a wire."""
        for node, pred in zip(self.nodes, self.preds):
            for q, p in zip(node.qubits, pred):
                if p >= 0:
                    yield p, node.id, q

    def pred_nodes(self, nid: int) -> set[int]:
        return {p for p in self.preds[nid] if p >= 0}

    def isomorphic(self, other: "CircuitDag") -> bool:
        return (self.num_qubits == other.num_qubits
                and [(n.kind, n.qubits) for n in self.nodes]
                == [(n.kind, n.qubits) for n in other.nodes]
                and self.preds == other.preds)

    def fragment(self, node_ids: Iterable[int]) -> list[tuple[GateKind, tuple[int, ...]]]:
        """Gates of ``node_ids`` in topological order, on original qubit labels."""
        return [(self.nodes[i].kind, self.nodes[i].qubits) for i in sorted(node_ids)]


@dataclass
class EdgeList:
    edges: list[tuple[int, int]]

    def __len__(self) -> int:
        return len(self.edges)

    def __iter__(self):
        return iter(self.edges)


def build_edge_list(dag: CircuitDag) -> EdgeList:
    """Distinct (src, dst) wire edges sorted by (topo(dst), topo(src))."""
    edges = []
    append = edges.append
    for nid, pred in enumerate(dag.preds):
        ps = [p for p in pred if p >= 0]
        if len(ps) > 1:
            ps = sorted(set(ps))
        for p in ps:
            append((p, nid))
    return EdgeList(edges)


def toffoli_network(a: int, b: int, c: int) -> list[tuple[GateKind, tuple[int, ...]]]:
    """Seven-T Clifford+T network for CCX(a, b -> c)."""
    H, T, TD, CX = KIND[Tag.H], KIND[Tag.T], KIND[Tag.TDG], KIND[Tag.CX]
    return [
        (H, (c,)), (CX, (b, c)), (TD, (c,)), (CX, (a, c)), (T, (c,)),
        (CX, (b, c)), (TD, (c,)), (CX, (a, c)), (T, (b,)), (T, (c,)),
        (H, (c,)), (CX, (a, b)), (T, (a,)), (TD, (b,)), (CX, (a, b)),
    ]


def lower_toffoli(dag: CircuitDag) -> CircuitDag:
    if not any(n.kind.tag is Tag.TOFFOLI for n in dag.nodes):
        return dag
    out = CircuitDag(dag.num_qubits)
    for node in dag.nodes:
        if node.kind.tag is Tag.TOFFOLI:
            for kind, qs in toffoli_network(*node.qubits):
                out.add(kind, qs)
        else:
            out.add(node.kind, node.qubits)
    return out
