"""Circuit generators: Cuccaro ripple-carry adders, strided MAJ/UMA plans and
synthetic circuits built from repeated blocks.

Adder register layout for ``bits`` = n::

    0            carry in (c0)
    1 + 2i       b_i   (overwritten with the sum bit)
    2 + 2i       a_i
    2n + 1       carry out (z)
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from qstream.cache import ChunkCache, canonical_fragment, canonical_key
from qstream.circuit import KIND, CircuitDag, GateKind, Tag, toffoli_network
from qstream.compiler import GraphChunk, compile_chunk
from qstream.errors import ConfigurationError
from qstream.partition import Partition, partitions_from_groups
from qstream.wire import decode_chunk, encode_chunk

Gate = tuple[GateKind, tuple[int, ...]]

_CX = KIND[Tag.CX]
_CCX = KIND[Tag.TOFFOLI]


def a_qubit(i: int) -> int:
    return 2 + 2 * i


def b_qubit(i: int) -> int:
    return 1 + 2 * i


def carry_qubit(i: int) -> int:
    """Carry entering bit i: c0 for i = 0, otherwise a_{i-1}."""
    return 0 if i == 0 else a_qubit(i - 1)


def maj(c: int, b: int, a: int) -> list[Gate]:
    return [(_CX, (a, b)), (_CX, (a, c)), (_CCX, (c, b, a))]


def uma(c: int, b: int, a: int) -> list[Gate]:
    return [(_CCX, (c, b, a)), (_CX, (a, c)), (_CX, (c, b))]


def lower_gates(gates) -> list[Gate]:
    out = []
    for kind, qs in gates:
        if kind.tag is Tag.TOFFOLI:
            out.extend(toffoli_network(*qs))
        else:
            out.append((kind, tuple(qs)))
    return out


def maj_block(start: int, width: int) -> list[Gate]:
    gates = []
    for i in range(start, start + width):
        gates += maj(carry_qubit(i), b_qubit(i), a_qubit(i))
    return gates


def uma_block(start: int, width: int) -> list[Gate]:
    gates = []
    for i in reversed(range(start, start + width)):
        gates += uma(carry_qubit(i), b_qubit(i), a_qubit(i))
    return gates


def carry_out_gate(bits: int) -> Gate:
    return (_CX, (a_qubit(bits - 1), 2 * bits + 1))


def cuccaro_adder(bits: int, carry_out: bool = True) -> CircuitDag:
    """|c0, b, a, z> -> |c0, a+b+c0 mod 2^n, a, z ^ carry> (carry only if ``carry_out``)."""
    if bits < 1:
        raise ConfigurationError("adder needs bits >= 1")
    gates = maj_block(0, bits)
    if carry_out:
        gates.append(carry_out_gate(bits))
    gates += uma_block(0, bits)
    return CircuitDag.from_gates(2 * bits + 2, gates)


def adder_input_bits(a: int, b: int, bits: int, cin: int = 0) -> list[int]:
    """Basis bits (qubit 0 first) encoding the adder inputs."""
    v = [0] * (2 * bits + 2)
    v[0] = cin
    for i in range(bits):
        v[b_qubit(i)] = (b >> i) & 1
        v[a_qubit(i)] = (a >> i) & 1
    return v


def read_adder_output(state_bits, bits: int) -> tuple[int, int, int]:
    """(sum register, a register, carry-out bit) from basis bits."""
    s = sum(state_bits[b_qubit(i)] << i for i in range(bits))
    a = sum(state_bits[a_qubit(i)] << i for i in range(bits))
    return s, a, state_bits[2 * bits + 1]


# -- strided plans ----------------------------------------------------------

@dataclass(frozen=True)
class StriderConfig:
    bits: int
    stride_alpha: int
    remainder_beta: int = 0
    carry_out: bool = False

    def __post_init__(self):
        b, a, r = self.bits, self.stride_alpha, self.remainder_beta
        if b < 1 or a < 1 or r < 0:
            raise ConfigurationError("need bits >= 1, alpha >= 1, beta >= 0")
        if a > b:
            raise ConfigurationError(f"stride {a} exceeds adder width {b}")
        if r >= a:
            raise ConfigurationError(f"beta {r} must be smaller than alpha {a}")
        if (b - r) % a:
            raise ConfigurationError(f"bits - beta = {b - r} is not a multiple of alpha {a}")

    @property
    def k_blocks(self) -> int:
        return (self.bits - self.remainder_beta) // self.stride_alpha

    def blocks(self) -> list[tuple[int, int]]:
        """(start bit, width) of each block, remainder block first."""
        out = []
        if self.remainder_beta:
            out.append((0, self.remainder_beta))
        for j in range(self.k_blocks):
            out.append((self.remainder_beta + j * self.stride_alpha, self.stride_alpha))
        return out


def _shift_qubit(q: int, start: int) -> int:
    # template qubits live at bit offset 0; c0 stands for the incoming carry
    if start == 0:
        return q
    if q == 0:
        return carry_qubit(start)
    return q + 2 * start


@dataclass
class _Template:
    key: bytes
    gates: list[Gate]
    assignment: list[int]


def _template(kind: str, width: int) -> _Template:
    raw = maj_block(0, width) if kind == "maj" else uma_block(0, width)
    gates = lower_gates(raw)
    canon, assignment = canonical_fragment(gates)
    return _Template(canonical_key(gates), canon, assignment)


@dataclass
class AdderPlan:
    config: StriderConfig
    chunk_keys: list[tuple[bytes, list[int]]]
    unique_chunks: dict[bytes, GraphChunk]
    templates: dict[bytes, list[Gate]] = field(default_factory=dict)
    glue: list[Gate] = field(default_factory=list)
    glue_after: int = 0
    compiled: int = 0

    @property
    def num_qubits(self) -> int:
        return 2 * self.config.bits + 2

    def gates(self) -> list[Gate]:
        """Replay every reference under its assignment (lowered gates)."""
        out = []
        for i, (key, assignment) in enumerate(self.chunk_keys):
            if i == self.glue_after:
                out += lower_gates(self.glue)
            out += [(k, tuple(assignment[q] for q in qs)) for k, qs in self.templates[key]]
        if self.glue_after == len(self.chunk_keys):
            out += lower_gates(self.glue)
        return out

    def to_dag(self) -> CircuitDag:
        return CircuitDag.from_gates(self.num_qubits, self.gates())


def strided_plan(cfg: StriderConfig, cache: ChunkCache | None = None, table=None) -> AdderPlan:
    """Compile each distinct MAJ/UMA block once and reference it per block.

    Every reference does one cache lookup, so a cold cache sees one miss per
    distinct block and hits for the rest.
    """
    cache = cache if cache is not None else ChunkCache()
    widths = sorted({w for _, w in cfg.blocks()})
    templates = {(kind, w): _template(kind, w) for w in widths for kind in ("maj", "uma")}
    plan = AdderPlan(cfg, [], {})
    for tpl in templates.values():
        plan.templates[tpl.key] = tpl.gates

    def ref(kind, start, width):
        tpl = templates[(kind, width)]
        entry = cache.get(tpl.key)
        if entry is None:
            chunk = compile_chunk(tpl.gates, len(tpl.assignment), table)
            cache.put(tpl.key, encode_chunk(chunk))
            plan.compiled += 1
            plan.unique_chunks[tpl.key] = chunk
        elif tpl.key not in plan.unique_chunks:
            plan.unique_chunks[tpl.key] = decode_chunk(entry.chunk)
        assignment = [_shift_qubit(q, start) for q in tpl.assignment]
        plan.chunk_keys.append((tpl.key, assignment))

    blocks = cfg.blocks()
    for start, width in blocks:
        ref("maj", start, width)
    plan.glue_after = len(plan.chunk_keys)
    if cfg.carry_out:
        plan.glue = [carry_out_gate(cfg.bits)]
    for start, width in reversed(blocks):
        ref("uma", start, width)
    return plan


def strided_partitions(cfg: StriderConfig, dag: CircuitDag | None = None,
                       table=None) -> tuple[CircuitDag, list[Partition]]:
    """Lowered adder plus one partition per MAJ/UMA block (and one for the carry glue)."""
    if dag is None:
        dag = CircuitDag.from_gates(2 * cfg.bits + 2, lower_gates(
            cuccaro_adder(cfg.bits, cfg.carry_out).gates()))
    per_bit = len(lower_gates(maj(0, 1, 2)))
    groups = []
    pos = 0
    for _, width in cfg.blocks():
        groups.append(range(pos, pos + per_bit * width))
        pos += per_bit * width
    if cfg.carry_out:
        groups.append([pos])
        pos += 1
    for _, width in reversed(cfg.blocks()):
        groups.append(range(pos, pos + per_bit * width))
        pos += per_bit * width
    if pos != len(dag):
        raise ConfigurationError("dag does not match the strided adder layout")
    return dag, partitions_from_groups(dag, groups, table)


# -- synthetic circuits -----------------------------------------------------

_ONE_Q = [Tag.H, Tag.S, Tag.SDG, Tag.X, Tag.Z, Tag.T, Tag.TDG]
_TWO_Q = [Tag.CX, Tag.CZ]


def _random_block(rng: random.Random, gates: int, qubits: int) -> list[Gate]:
    out = []
    for _ in range(gates):
        if qubits >= 2 and rng.random() < 0.35:
            tag = rng.choice(_TWO_Q)
            out.append((KIND[tag], tuple(rng.sample(range(qubits), 2))))
        else:
            out.append((KIND[rng.choice(_ONE_Q)], (rng.randrange(qubits),)))
    return out


def synthetic_repetitive(blocks: int, block_gates: int, distinct_blocks: int, qubits: int,
                         seed: int = 0) -> CircuitDag:
    """``blocks`` random blocks, block b copying template b mod ``distinct_blocks``.

    Templates have pairwise distinct canonical keys.  Use
    :func:`block_partitions` to cut the result at block boundaries.
    """
    if blocks < 0 or block_gates < 1 or qubits < 1:
        raise ConfigurationError("need blocks >= 0, block_gates >= 1, qubits >= 1")
    if not 1 <= distinct_blocks <= max(blocks, 1):
        raise ConfigurationError("need 1 <= distinct_blocks <= blocks")
    rng = random.Random(seed)
    templates, keys = [], set()
    attempts = 0
    while len(templates) < distinct_blocks:
        tpl = _random_block(rng, block_gates, qubits)
        key = canonical_key(tpl)
        attempts += 1
        if key in keys:
            if attempts > 100 * distinct_blocks:
                raise ConfigurationError("cannot draw enough distinct blocks; enlarge block_gates")
            continue
        keys.add(key)
        templates.append(tpl)
    dag = CircuitDag(qubits)
    for b in range(blocks):
        for kind, qs in templates[b % distinct_blocks]:
            dag.add(kind, qs)
    return dag


def block_partitions(dag: CircuitDag, block_gates: int, table=None) -> list[Partition]:
    n = len(dag)
    return partitions_from_groups(
        dag, [range(s, min(s + block_gates, n)) for s in range(0, n, block_gates)], table)


def random_clifford_t(rng: random.Random, qubits: int, gates: int,
                      max_nonclifford: int | None = None) -> CircuitDag:
    """Random Clifford+T circuit (used by sweeps and tests)."""
    dag = CircuitDag(qubits)
    nc = 0
    for _ in range(gates):
        if qubits >= 2 and rng.random() < 0.35:
            dag.add(KIND[rng.choice(_TWO_Q + [Tag.SWAP])], rng.sample(range(qubits), 2))
            continue
        tag = rng.choice(_ONE_Q + [Tag.Y])
        if tag in (Tag.T, Tag.TDG):
            if max_nonclifford is not None and nc >= max_nonclifford:
                tag = Tag.H
            else:
                nc += 1
        dag.add(KIND[tag], (rng.randrange(qubits),))
    return dag
