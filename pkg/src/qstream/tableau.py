"""Dense bit-packed stabilizer tableau and reduction to graph form.

Rows are stabilizer generators, stored as packed uint64 words (row-major) for
the X and Z blocks plus a phase bit per row.  Gate updates follow the
Aaronson-Gottesman conjugation rules and act on one or two bit columns of every
row at once; row products in the graph reduction are word-parallel.
"""

from __future__ import annotations

import numpy as np

from qstream import clifford1q
from qstream.circuit import GateKind, Tag
from qstream.errors import InvariantViolation

_ONE = np.uint64(1)


def _nwords(n: int) -> int:
    return (n + 63) // 64


class Tableau:
    def __init__(self, n_vertices: int):
        if n_vertices < 1:
            raise ValueError("n_vertices must be >= 1")
        self.n_vertices = n_vertices
        w = _nwords(n_vertices)
        self.x_block = np.zeros((n_vertices, w), dtype=np.uint64)
        self.z_block = np.zeros((n_vertices, w), dtype=np.uint64)
        self.phase = np.zeros(n_vertices, dtype=np.uint8)

    @classmethod
    def plus_state(cls, n: int) -> "Tableau":
        t = cls(n)
        idx = np.arange(n)
        t.x_block[idx, idx // 64] = _ONE << (idx % 64).astype(np.uint64)
        return t

    @classmethod
    def from_bits(cls, x: np.ndarray, z: np.ndarray, phase=None) -> "Tableau":
        x = np.asarray(x, dtype=bool)
        n = x.shape[1]
        t = cls(n)
        t.x_block[:] = _pack(x, t.x_block.shape[1])
        t.z_block[:] = _pack(np.asarray(z, dtype=bool), t.z_block.shape[1])
        if phase is not None:
            t.phase[:] = np.asarray(phase, dtype=np.uint8) & 1
        return t

    @classmethod
    def from_paulis(cls, rows: list[str]) -> "Tableau":
        """Build from strings like ``"+XZ"`` or ``"-YI"``."""
        n = len(rows[0].lstrip("+-"))
        x = np.zeros((len(rows), n), dtype=bool)
        z = np.zeros_like(x)
        ph = np.zeros(len(rows), dtype=np.uint8)
        for i, row in enumerate(rows):
            if row[0] in "+-":
                ph[i] = row[0] == "-"
                row = row[1:]
            for j, p in enumerate(row):
                x[i, j] = p in "XY"
                z[i, j] = p in "ZY"
        return cls.from_bits(x, z, ph)

    def copy(self) -> "Tableau":
        t = Tableau.__new__(Tableau)
        t.n_vertices = self.n_vertices
        t.x_block = self.x_block.copy()
        t.z_block = self.z_block.copy()
        t.phase = self.phase.copy()
        return t

    # -- bit views -------------------------------------------------------

    def x_bits(self) -> np.ndarray:
        return _unpack(self.x_block, self.n_vertices)

    def z_bits(self) -> np.ndarray:
        return _unpack(self.z_block, self.n_vertices)

    def _col(self, block: np.ndarray, q: int) -> np.ndarray:
        w, b = divmod(q, 64)
        return ((block[:, w] >> np.uint64(b)) & _ONE).astype(np.uint8)

    def _flip(self, block: np.ndarray, q: int, bits: np.ndarray) -> None:
        w, b = divmod(q, 64)
        block[:, w] ^= bits.astype(np.uint64) << np.uint64(b)

    def paulis(self) -> list[str]:
        x, z = self.x_bits(), self.z_bits()
        chars = np.array(["I", "X", "Z", "Y"])[x.astype(int) + 2 * z.astype(int)]
        return [("-" if p else "+") + "".join(r) for p, r in zip(self.phase, chars)]

    # -- Clifford updates ------------------------------------------------

    def h(self, q: int) -> None:
        xq, zq = self._col(self.x_block, q), self._col(self.z_block, q)
        self.phase ^= xq & zq
        d = xq ^ zq
        self._flip(self.x_block, q, d)
        self._flip(self.z_block, q, d)

    def s(self, q: int) -> None:
        xq, zq = self._col(self.x_block, q), self._col(self.z_block, q)
        self.phase ^= xq & zq
        self._flip(self.z_block, q, xq)

    def sdg(self, q: int) -> None:
        xq, zq = self._col(self.x_block, q), self._col(self.z_block, q)
        self.phase ^= xq & (zq ^ 1)
        self._flip(self.z_block, q, xq)

    def x(self, q: int) -> None:
        self.phase ^= self._col(self.z_block, q)

    def z(self, q: int) -> None:
        self.phase ^= self._col(self.x_block, q)

    def y(self, q: int) -> None:
        self.phase ^= self._col(self.x_block, q) ^ self._col(self.z_block, q)

    def cx(self, a: int, b: int) -> None:
        xa, za = self._col(self.x_block, a), self._col(self.z_block, a)
        xb, zb = self._col(self.x_block, b), self._col(self.z_block, b)
        self.phase ^= xa & zb & (xb ^ za ^ 1)
        self._flip(self.x_block, b, xa)
        self._flip(self.z_block, a, zb)

    def cz(self, a: int, b: int) -> None:
        xa, za = self._col(self.x_block, a), self._col(self.z_block, a)
        xb, zb = self._col(self.x_block, b), self._col(self.z_block, b)
        self.phase ^= xa & xb & (za ^ zb)
        self._flip(self.z_block, a, xb)
        self._flip(self.z_block, b, xa)

    def swap(self, a: int, b: int) -> None:
        for block in (self.x_block, self.z_block):
            d = self._col(block, a) ^ self._col(block, b)
            self._flip(block, a, d)
            self._flip(block, b, d)

    def apply_gate(self, g: GateKind | Tag, targets) -> None:
        tag = g.tag if isinstance(g, GateKind) else g
        fn = _DISPATCH.get(tag)
        if fn is None:
            raise ValueError(f"{tag.value} is not a Clifford gate; tableau accepts Cliffords only")
        for q in targets:
            if not 0 <= q < self.n_vertices:
                raise IndexError(f"vertex {q} out of range")
        fn(self, *targets)

    def apply_local(self, q: int, code: int) -> None:
        for g in clifford1q.WORDS[code]:
            (self.h if g == "H" else self.s)(q)

    # -- checks ----------------------------------------------------------

    def commutes(self) -> bool:
        x, z = self.x_bits().astype(np.uint8), self.z_bits().astype(np.uint8)
        sym = (x @ z.T + z @ x.T) & 1
        return not sym.any()

    def rank(self) -> int:
        return _gf2_rank(np.concatenate([self.x_bits(), self.z_bits()], axis=1))

    # -- row products ----------------------------------------------------

    def _rowmul(self, targets: np.ndarray, p: int) -> None:
        """rows[targets] <- rows[p] * rows[targets], with phases."""
        if targets.size == 0:
            return
        x1, z1 = self.x_block[p], self.z_block[p]
        x2, z2 = self.x_block[targets], self.z_block[targets]
        y1, xo1, zo1 = x1 & z1, x1 & ~z1, ~x1 & z1
        plus = (y1 & z2 & ~x2) | (xo1 & z2 & x2) | (zo1 & x2 & ~z2)
        minus = (y1 & x2 & ~z2) | (xo1 & z2 & ~x2) | (zo1 & x2 & z2)
        tot = (2 * self.phase[p].astype(np.int64) + 2 * self.phase[targets].astype(np.int64)
               + np.bitwise_count(plus).sum(axis=1, dtype=np.int64)
               - np.bitwise_count(minus).sum(axis=1, dtype=np.int64))
        self.phase[targets] = ((tot % 4) // 2).astype(np.uint8)
        self.x_block[targets] = x2 ^ x1
        self.z_block[targets] = z2 ^ z1

    def _swap_rows(self, i: int, j: int) -> None:
        if i != j:
            for arr in (self.x_block, self.z_block, self.phase):
                arr[[i, j]] = arr[[j, i]]

    def _eliminate_x(self, order) -> list[int]:
        """Reduced row echelon form of the X block; returns pivot columns."""
        rank = 0
        pivots = []
        n = self.n_vertices
        for c in order:
            if rank == n:
                break
            col = self._col(self.x_block, c)
            cand = np.flatnonzero(col[rank:])
            if cand.size == 0:
                continue
            self._swap_rows(rank + int(cand[0]), rank)
            col = self._col(self.x_block, c)
            col[rank] = 0
            self._rowmul(np.flatnonzero(col), rank)
            pivots.append(c)
            rank += 1
        return pivots


_DISPATCH = {
    Tag.I: lambda t, q: None, Tag.X: Tableau.x, Tag.Y: Tableau.y, Tag.Z: Tableau.z,
    Tag.H: Tableau.h, Tag.S: Tableau.s, Tag.SDG: Tableau.sdg,
    Tag.CX: Tableau.cx, Tag.CZ: Tableau.cz, Tag.SWAP: Tableau.swap,
}


def new_plus_state(n: int) -> Tableau:
    return Tableau.plus_state(n)


def to_graph(t: Tableau, order=None) -> tuple[np.ndarray, list[int]]:
    """Reduce a stabilizer state to (adjacency, local Clifford codes).

    Applying local ``codes[v]`` to vertex v of the input state yields the
    graph state with the returned adjacency, so the input state equals the
    graph state with the inverse locals applied.  Columns listed first in
    ``order`` receive X pivots first and therefore never need a Hadamard when
    their X block has full column rank.
    """
    n = t.n_vertices
    t = t.copy()
    order = list(range(n)) if order is None else list(order)
    if sorted(order) != list(range(n)):
        raise ValueError("order must be a permutation of the vertices")
    words: list[list[str]] = [[] for _ in range(n)]

    pivots = t._eliminate_x(order)
    if len(pivots) < n:
        pivot_set = set(pivots)
        for c in order:
            if c not in pivot_set:
                t.h(c)
                words[c].append("H")
        pivots = t._eliminate_x(order)
        if len(pivots) < n:
            raise InvariantViolation(
                f"tableau is rank deficient ({len(pivots)} of {n}); not a stabilizer state")
    # row i has its X pivot on column pivots[i]; permute so row v pivots on v
    perm = np.empty(n, dtype=np.intp)
    perm[np.asarray(pivots)] = np.arange(n)
    t.x_block = t.x_block[perm]
    t.z_block = t.z_block[perm]
    t.phase = t.phase[perm]

    z = t.z_bits()
    if not np.array_equal(z, z.T):
        raise InvariantViolation("reduced Z block is not symmetric")
    for v in np.flatnonzero(np.diag(z)):
        t.s(int(v))
        words[v].append("S")
    for v in np.flatnonzero(t.phase):
        t.z(int(v))
        words[v].append("Z")

    x, z = t.x_bits(), t.z_bits()
    if not (np.array_equal(x, np.eye(n, dtype=bool)) and not z.diagonal().any()
            and not t.phase.any()):
        raise InvariantViolation("graph reduction did not reach canonical form")
    return z, [clifford1q.code_of_word(w) for w in words]


def _pack(bits: np.ndarray, nwords: int) -> np.ndarray:
    rows, n = bits.shape
    padded = np.zeros((rows, nwords * 64), dtype=np.uint8)
    padded[:, :n] = bits
    return np.packbits(padded, axis=1, bitorder="little").view("<u8").astype(np.uint64)


def _unpack(block: np.ndarray, n: int) -> np.ndarray:
    raw = block.astype("<u8").view(np.uint8).reshape(block.shape[0], -1)
    return np.unpackbits(raw, axis=1, bitorder="little")[:, :n].astype(bool)


def _gf2_rank(m: np.ndarray) -> int:
    m = m.copy().astype(bool)
    rank = 0
    rows, cols = m.shape
    for c in range(cols):
        piv = np.flatnonzero(m[rank:, c])
        if piv.size == 0:
            continue
        p = rank + piv[0]
        m[[rank, p]] = m[[p, rank]]
        hit = np.flatnonzero(m[:, c])
        hit = hit[hit != rank]
        m[hit] ^= m[rank]
        rank += 1
        if rank == rows:
            break
    return rank


def dump(t: Tableau) -> str:
    return "\n".join(t.paulis()) + "\n"
