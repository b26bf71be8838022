"""Parser and emitter for the OpenQASM subset used by qstream.

Accepted statements, separated by ``;``::

    OPENQASM 3.0;  include "stdgates.inc";      (ignored)
    qubit[n] q;    or    qreg q[n];              (exactly one)
    bit[n] c;      or    creg c[n];              (ignored)
    <gate> q[i], q[j], ...;                      gate names in GATE_NAMES
    rz(<expr>) q[i];                             expr over numbers, pi, + - * /
    measure q[i];  c[i] = measure q[i];  measure q[i] -> c[i];
"""

from __future__ import annotations

import ast
import math
import operator
import re

from qstream.circuit import KIND, CircuitDag, GateKind, Tag
from qstream.decomp import N_BUILTIN, DecompositionTable
from qstream.errors import QasmSyntaxError, UnsupportedGateError

GATE_NAMES = {
    "id": Tag.I, "i": Tag.I, "x": Tag.X, "y": Tag.Y, "z": Tag.Z, "h": Tag.H,
    "s": Tag.S, "sdg": Tag.SDG, "t": Tag.T, "tdg": Tag.TDG,
    "cx": Tag.CX, "cnot": Tag.CX, "CX": Tag.CX, "cz": Tag.CZ, "swap": Tag.SWAP,
    "ccx": Tag.TOFFOLI, "toffoli": Tag.TOFFOLI, "rz": Tag.RZ, "measure": Tag.MEASURE,
}

_DECL_QUBIT = re.compile(r"qubit\s*\[\s*(\d+)\s*\]\s*([A-Za-z_]\w*)$")
_DECL_QREG = re.compile(r"qreg\s+([A-Za-z_]\w*)\s*\[\s*(\d+)\s*\]$")
_DECL_BIT = re.compile(r"(bit\s*\[\s*\d+\s*\]\s*[A-Za-z_]\w*|creg\s+[A-Za-z_]\w*\s*\[\s*\d+\s*\])$")
_GATE = re.compile(r"([A-Za-z_]\w*)\s*(?:\((.*)\))?\s*(.*)$", re.S)
_OPERAND = re.compile(r"\s*([A-Za-z_]\w*)\s*\[\s*(\d+)\s*\]\s*$")
_MEASURE_ASSIGN = re.compile(r"[A-Za-z_]\w*\s*\[\s*\d+\s*\]\s*=\s*measure\s+(.*)$", re.S)
_MEASURE_ARROW = re.compile(r"measure\s+(.*?)\s*->\s*[A-Za-z_]\w*\s*\[\s*\d+\s*\]$", re.S)

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub,
           ast.Mult: operator.mul, ast.Div: operator.truediv}


def eval_angle(text: str) -> float:
    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id in ("pi", "π"):
            return math.pi
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        raise ValueError(f"unsupported angle expression {text!r}")

    return ev(ast.parse(text.strip().replace("π", "pi"), mode="eval"))


def _statements(text: str):
    """Yield (statement, line, column) with comments blanked out."""
    text = re.sub(r"//[^\n]*", lambda m: " " * len(m.group()), text)
    text = re.sub(r"/\*.*?\*/", lambda m: re.sub(r"[^\n]", " ", m.group()), text, flags=re.S)
    start = 0
    for m in re.finditer(";", text):
        yield from _one(text, start, m.start())
        start = m.end()
    tail = text[start:]
    if tail.strip():
        line, col = _position(text, start + len(tail) - len(tail.lstrip()))
        raise QasmSyntaxError("missing ';' after statement", line, col)


def _one(text, start, end):
    chunk = text[start:end]
    stripped = chunk.strip()
    if not stripped:
        return
    line, col = _position(text, start + len(chunk) - len(chunk.lstrip()))
    yield stripped, line, col


def _position(text: str, offset: int) -> tuple[int, int]:
    line = text.count("\n", 0, offset) + 1
    col = offset - (text.rfind("\n", 0, offset) + 1) + 1
    return line, col


def parse_qasm(text: str, table: DecompositionTable | None = None,
               epsilon: float = 1e-10) -> CircuitDag:
    """Parse the qstream OpenQASM subset into a CircuitDag in program order.

    Rz angles are interned in ``table`` (a fresh one when omitted); exact
    multiples of pi/4 land on the builtin keys.
    """
    if table is None:
        table = DecompositionTable()
    dag: CircuitDag | None = None
    reg = None
    for stmt, line, col in _statements(text):
        head = stmt.split(None, 1)[0]
        if head == "OPENQASM" or head == "include":
            continue
        m = _DECL_QUBIT.match(stmt) or _DECL_QREG.match(stmt)
        if m:
            if dag is not None:
                raise QasmSyntaxError("only one qubit register is supported", line, col)
            if stmt.startswith("qubit"):
                size, reg = int(m.group(1)), m.group(2)
            else:
                reg, size = m.group(1), int(m.group(2))
            if size < 1:
                raise QasmSyntaxError("register size must be >= 1", line, col)
            dag = CircuitDag(size)
            continue
        if _DECL_BIT.match(stmt):
            continue
        ma = _MEASURE_ASSIGN.match(stmt) or _MEASURE_ARROW.match(stmt)
        if ma:
            stmt = "measure " + ma.group(1)
        g = _GATE.match(stmt)
        if not g:
            raise QasmSyntaxError(f"cannot parse statement {stmt!r}", line, col)
        name, arg, rest = g.group(1), g.group(2), g.group(3)
        tag = GATE_NAMES.get(name)
        if tag is None:
            raise UnsupportedGateError(name, line, col)
        if dag is None:
            raise QasmSyntaxError("gate before qubit declaration", line, col)
        if (arg is not None) != (tag is Tag.RZ):
            raise QasmSyntaxError(f"{name}: wrong parameter list", line, col)
        qubits = []
        for operand in rest.split(","):
            om = _OPERAND.match(operand)
            if not om:
                raise QasmSyntaxError(f"bad operand {operand.strip()!r}", line, col)
            if om.group(1) != reg:
                raise QasmSyntaxError(f"unknown register {om.group(1)!r}", line, col)
            q = int(om.group(2))
            if q >= dag.num_qubits:
                raise QasmSyntaxError(
                    f"qubit index {q} out of range for {reg}[{dag.num_qubits}]", line, col)
            qubits.append(q)
        if tag is Tag.RZ:
            try:
                theta = eval_angle(arg)
            except (ValueError, SyntaxError, ZeroDivisionError):
                raise QasmSyntaxError(f"bad angle {arg!r}", line, col) from None
            kind = GateKind(Tag.RZ, table.intern_angle(theta, epsilon), theta)
        else:
            kind = KIND[tag]
        try:
            dag.add(kind, qubits)
        except ValueError as exc:
            raise QasmSyntaxError(str(exc), line, col) from None
    if dag is None:
        raise QasmSyntaxError("no qubit declaration", 1, 1)
    return dag


def emit_qasm(dag: CircuitDag, register: str = "q",
              table: DecompositionTable | None = None) -> str:
    out = ["OPENQASM 3.0;", f"qubit[{dag.num_qubits}] {register};"]
    for node in dag.nodes:
        ops = ", ".join(f"{register}[{q}]" for q in node.qubits)
        kind = node.kind
        if kind.tag is Tag.RZ:
            theta = kind.theta
            if theta is None:
                if table is not None:
                    theta = table.theta(kind.rz_key)
                elif kind.rz_key < N_BUILTIN:
                    theta = kind.rz_key * math.pi / 4
                else:
                    raise ValueError(f"Rz key {kind.rz_key} has no angle; pass its table")
            out.append(f"rz({theta!r}) {ops};")
        else:
            out.append(f"{kind.tag.value} {ops};")
    return "\n".join(out) + "\n"
