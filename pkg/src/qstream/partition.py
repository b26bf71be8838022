"""Windowed union-find partitioning of a circuit DAG under resource bounds.

Edges are consumed in edge-list order (sorted by destination).  An edge
(u, v) merges v into u's component when the combined T-count, gate count and
qubit count stay within bounds and every predecessor of v is already in that
component, in an earlier window, or is a not-yet-merged source gate whose
successors all come at or after v (such sources are absorbed together with v).
Under this rule every cross-component edge between live components enters
the root of its target component, and roots increase along any such path, so
the partition quotient graph stays acyclic.

Components live only for one window of ``window_size`` consecutive nodes;
when the window closes they are emitted in a topological order of the
quotient (ties broken by smallest member).
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Iterator

from qstream.circuit import CircuitDag, EdgeList
from qstream.errors import ConfigurationError


@dataclass(frozen=True)
class ResourceBounds:
    max_t_count: int = 7
    max_qubits: int = 4
    max_gates: int = 10_000
    window_size: int = 65_536

    def __post_init__(self):
        for name in ("max_t_count", "max_qubits", "max_gates", "window_size"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be >= 1")


@dataclass
class Partition:
    id: int
    node_ids: list[int]
    t_count: int
    gate_count: int
    qubit_set: frozenset[int]
    boundary_in: dict[int, int] = field(default_factory=dict)
    boundary_out: dict[int, int] = field(default_factory=dict)

    def qubits(self) -> list[int]:
        return sorted(self.qubit_set)

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "node_ids": self.node_ids,
            "t_count": self.t_count,
            "gate_count": self.gate_count,
            "qubit_set": sorted(self.qubit_set),
            "boundaries": {
                "in": {str(q): n for q, n in sorted(self.boundary_in.items())},
                "out": {str(q): n for q, n in sorted(self.boundary_out.items())},
            },
        }


class UnionFind:
    """Union-find over the nodes ``start .. stop-1`` of one window.

    Aggregates (T-count, gate count, qubit bitmask) are kept at roots.
    Nodes before ``start`` count as already emitted.
    """

    def __init__(self, dag: CircuitDag, start: int = 0, stop: int | None = None,
                 table=None):
        stop = len(dag) if stop is None else stop
        self.dag = dag
        self.start = start
        size = stop - start
        self.parent = list(range(size))
        self.rank = [0] * size
        nodes = dag.nodes[start:stop]
        self.t = [n.kind.t_weight(table) for n in nodes]
        self.g = [1] * size
        self.qmask = [_mask(n.qubits) for n in nodes]

    def __len__(self) -> int:
        return len(self.parent)

    def find(self, nid: int) -> int:
        """Root (as a global node id) of nid's component."""
        parent = self.parent
        x = nid - self.start
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x + self.start

    def agg(self, nid: int) -> tuple[int, int, int]:
        r = self.find(nid) - self.start
        return self.t[r], self.g[r], self.qmask[r].bit_count()

    def _absorbable(self, s: int, v: int) -> bool:
        dag = self.dag
        x = s - self.start
        if self.parent[x] != x or self.g[x] != 1:
            return False
        if any(p >= 0 for p in dag.preds[s]):
            return False
        return all(w < 0 or w >= v for w in dag.succs[s])

    def union(self, u: int, v: int, bounds: ResourceBounds) -> bool:
        start = self.start
        ru = self.find(u)
        rv = self.find(v)
        if ru == rv:
            return True
        if self.g[rv - start] != 1:
            return False
        absorb = [rv]
        for p in self.dag.preds[v]:
            if p < start:
                continue
            rp = self.find(p)
            if rp == ru or rp in absorb:
                continue
            if self._absorbable(p, v):
                absorb.append(rp)
            else:
                return False
        iu = ru - start
        t, g, m = self.t[iu], self.g[iu], self.qmask[iu]
        for r in absorb:
            i = r - start
            t += self.t[i]
            g += self.g[i]
            m |= self.qmask[i]
        if t > bounds.max_t_count or g > bounds.max_gates or m.bit_count() > bounds.max_qubits:
            return False
        parent, rank = self.parent, self.rank
        root = iu
        for r in absorb:
            i = r - start
            if rank[i] > rank[root]:
                parent[root] = i
                root = i
            else:
                parent[i] = root
                if rank[i] == rank[root]:
                    rank[root] += 1
        self.t[root], self.g[root], self.qmask[root] = t, g, m
        return True


def union(uf: UnionFind, u: int, v: int, bounds: ResourceBounds) -> bool:
    return uf.union(u, v, bounds)


def _mask(qubits) -> int:
    m = 0
    for q in qubits:
        m |= 1 << q
    return m


def peak_memory_nodes(bounds: ResourceBounds, frontier: int = 0) -> int:
    """Per-window node state the partitioner allocates (window plus carried frontier)."""
    return bounds.window_size + frontier


def _check_lone(dag: CircuitDag, start: int, stop: int, uf: UnionFind,
                bounds: ResourceBounds) -> None:
    for i in range(stop - start):
        if (uf.t[i] > bounds.max_t_count
                or len(dag.nodes[start + i].qubits) > bounds.max_qubits):
            node = dag.nodes[start + i]
            raise ConfigurationError(
                f"gate {node.id} ({node.kind.tag.value} on {list(node.qubits)}) alone "
                f"exceeds bounds (t={uf.t[i]}, qubits={len(node.qubits)})")


def partition_stream(edges: EdgeList, dag: CircuitDag, bounds: ResourceBounds,
                     table=None, stats: dict | None = None) -> Iterator[Partition]:
    """Yield partitions window by window in a topological order of the quotient."""
    n = len(dag)
    W = bounds.window_size
    edge_list = edges.edges
    e = 0
    n_edges = len(edge_list)
    next_id = 0
    if stats is not None:
        stats.setdefault("peak_live_nodes", 0)
        stats.setdefault("windows", 0)
    for start in range(0, n, W):
        stop = min(start + W, n)
        uf = UnionFind(dag, start, stop, table)
        _check_lone(dag, start, stop, uf, bounds)
        if stats is not None:
            stats["peak_live_nodes"] = max(stats["peak_live_nodes"], len(uf))
            stats["windows"] += 1
        unite = uf.union
        while e < n_edges and edge_list[e][1] < stop:
            u, v = edge_list[e]
            e += 1
            if u >= start:
                unite(u, v, bounds)
        for part in _emit_window(dag, uf, start, stop, next_id):
            next_id += 1
            yield part


def _emit_window(dag: CircuitDag, uf: UnionFind, start: int, stop: int,
                 first_id: int) -> list[Partition]:
    find = uf.find
    roots = [find(i) for i in range(start, stop)]
    members: dict[int, list[int]] = {}
    for i, r in enumerate(roots):
        members.setdefault(r, []).append(start + i)
    succ: dict[int, set[int]] = {r: set() for r in members}
    indeg = {r: 0 for r in members}
    for i, r in enumerate(roots):
        for p in dag.preds[start + i]:
            if p >= start:
                rp = roots[p - start]
                if rp != r and r not in succ[rp]:
                    succ[rp].add(r)
                    indeg[r] += 1
    heap = [(members[r][0], r) for r in members if indeg[r] == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        _, r = heapq.heappop(heap)
        order.append(r)
        for s in succ[r]:
            indeg[s] -= 1
            if indeg[s] == 0:
                heapq.heappush(heap, (members[s][0], s))
    if len(order) != len(members):
        raise AssertionError("partition quotient graph has a cycle")
    out = []
    for j, r in enumerate(order):
        i = r - start
        out.append(_make_partition(dag, first_id + j, members[r], uf.t[i], uf.g[i]))
    return out


def _make_partition(dag: CircuitDag, pid: int, ids: list[int], t: int, g: int) -> Partition:
    idset = set(ids)
    b_in, b_out = {}, {}
    qs = set()
    for nid in ids:
        node = dag.nodes[nid]
        qs.update(node.qubits)
        for q, p, s in zip(node.qubits, dag.preds[nid], dag.succs[nid]):
            if p >= 0 and p not in idset:
                b_in[q] = p
            if s >= 0 and s not in idset:
                b_out[q] = s
    return Partition(pid, ids, t, g, frozenset(qs), b_in, b_out)


def partitions_from_groups(dag: CircuitDag, groups, table=None) -> list[Partition]:
    """Wrap explicit node groups (given in a topological order) as partitions."""
    out = []
    for pid, ids in enumerate(groups):
        ids = sorted(ids)
        t = sum(dag.nodes[i].kind.t_weight(table) for i in ids)
        out.append(_make_partition(dag, pid, ids, t, len(ids)))
    return out


def quotient_edges(dag: CircuitDag, parts: list[Partition]) -> set[tuple[int, int]]:
    owner = {}
    for p in parts:
        for nid in p.node_ids:
            owner[nid] = p.id
    out = set()
    for src, dst, _ in dag.wire_edges():
        a, b = owner[src], owner[dst]
        if a != b:
            out.add((a, b))
    return out
