"""Tagged table of Rz decomposition sequences.

Rotations are never serialised as floats. Each distinct (angle, precision)
pair is interned to an integer key; the key travels on the wire and the
sequence over {T, Tdg, S, Sdg, H, X, Z} is looked up (or shipped once as a
table update).  Keys 0..7 are reserved for exact multiples of pi/4.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from pathlib import Path

from qstream.errors import QStreamError

PI_TOL = 1e-12
N_BUILTIN = 8

LETTERS = ("T", "Tdg", "S", "Sdg", "H", "X", "Z")
# one character per letter in decomp.table files
_CHAR_OF = {"T": "T", "Tdg": "t", "S": "S", "Sdg": "s", "H": "H", "X": "X", "Z": "Z"}
_LETTER_OF = {c: name for name, c in _CHAR_OF.items()}

_BUILTIN_SEQ = {
    0: ("H", "H"),
    1: ("T",),
    2: ("S",),
    3: ("S", "T"),
    4: ("Z",),
    5: ("Z", "T"),
    6: ("Sdg",),
    7: ("Tdg",),
}
_BUILTIN_TAG = {0: "0", 1: "pi/4", 2: "pi/2", 3: "3pi/4", 4: "pi",
                5: "5pi/4", 6: "3pi/2", 7: "7pi/4"}

CLIFFORD_KEYS = frozenset({0, 2, 4, 6})


class UnknownKeyError(QStreamError, KeyError):
    pass


class PendingSequenceError(QStreamError):
    pass


class TableFormatError(QStreamError, ValueError):
    pass


@dataclass
class DecompositionEntry:
    key: int
    angle_tag: str
    theta: float
    epsilon: float
    sequence: tuple[str, ...] = ()

    @property
    def pending(self) -> bool:
        return not self.sequence

    @property
    def t_count(self) -> int:
        return sum(1 for s in self.sequence if s in ("T", "Tdg"))


def pi4_multiple(theta: float) -> int | None:
    """Return m in 0..7 if theta is m*pi/4 (mod 2pi) within PI_TOL."""
    m = round(theta / (math.pi / 4))
    if abs(theta - m * math.pi / 4) <= PI_TOL:
        return m % 8
    return None


def angle_tag(theta: float, epsilon: float) -> str:
    m = pi4_multiple(theta)
    if m is not None:
        return _BUILTIN_TAG[m]
    return f"{theta:.17g}@{epsilon:g}"


def encode_letters(seq) -> str:
    return "".join(_CHAR_OF[s] for s in seq)


def decode_letters(text: str) -> tuple[str, ...]:
    try:
        return tuple(_LETTER_OF[c] for c in text)
    except KeyError as exc:
        raise TableFormatError(f"bad sequence letter {exc.args[0]!r}") from None


@dataclass
class DecompositionTable:
    entries: dict[int, DecompositionEntry] = field(default_factory=dict)
    _by_tag: dict[str, int] = field(default_factory=dict, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def __post_init__(self):
        for m, seq in _BUILTIN_SEQ.items():
            self._register(DecompositionEntry(m, _BUILTIN_TAG[m], m * math.pi / 4, 0.0, seq))

    def _register(self, entry: DecompositionEntry) -> None:
        self.entries[entry.key] = entry
        self._by_tag[entry.angle_tag] = entry.key

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, key: int) -> bool:
        return key in self.entries

    def intern_angle(self, theta: float, epsilon: float = 1e-10) -> int:
        if epsilon <= 0:
            raise ValueError("epsilon must be positive")
        m = pi4_multiple(theta)
        if m is not None:
            return m
        tag = angle_tag(theta, epsilon)
        with self._lock:
            if tag in self._by_tag:
                return self._by_tag[tag]
            key = max(self.entries) + 1
            self._register(DecompositionEntry(key, tag, float(theta), float(epsilon)))
            return key

    def put_sequence(self, key: int, sequence, theta: float | None = None,
                     epsilon: float | None = None) -> None:
        seq = tuple(sequence)
        for s in seq:
            if s not in LETTERS:
                raise TableFormatError(f"bad sequence letter {s!r}")
        with self._lock:
            old = self.entries.get(key)
            if old is None:
                th = float("nan") if theta is None else float(theta)
                self._register(DecompositionEntry(key, f"#{key}", th, epsilon or 0.0, seq))
            else:
                old.sequence = seq

    def lookup_sequence(self, key: int) -> DecompositionEntry:
        entry = self.entries.get(key)
        if entry is None:
            raise UnknownKeyError(f"unknown decomposition key {key}")
        if entry.pending:
            raise PendingSequenceError(f"key {key} ({entry.angle_tag}) has no sequence loaded")
        return entry

    def theta(self, key: int) -> float:
        entry = self.entries.get(key)
        if entry is None:
            raise UnknownKeyError(f"unknown decomposition key {key}")
        return entry.theta

    def t_weight(self, key: int) -> int:
        """T-cost used for partition bounds; non-Clifford keys cost at least one."""
        if key in CLIFFORD_KEYS:
            return 0
        entry = self.entries.get(key)
        return max(1, entry.t_count if entry is not None else 0)

    def load_table(self, path) -> int:
        """Register every `<key> <theta> <epsilon> <letters>` line; returns the count."""
        count = 0
        for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 4:
                raise TableFormatError(f"{path}:{lineno}: expected 4 fields, got {len(parts)}")
            try:
                key, theta, eps = int(parts[0]), float(parts[1]), float(parts[2])
            except ValueError:
                raise TableFormatError(f"{path}:{lineno}: malformed numeric field") from None
            if key < 0 or key >= 2**32 or eps <= 0:
                raise TableFormatError(f"{path}:{lineno}: key out of range or epsilon <= 0")
            seq = decode_letters(parts[3])
            if not seq:
                raise TableFormatError(f"{path}:{lineno}: empty sequence")
            with self._lock:
                entry = DecompositionEntry(key, angle_tag(theta, eps), theta, eps, seq)
                self._register(entry)
            count += 1
        return count

    def dump(self, path) -> None:
        """Write every loaded non-builtin entry in `load_table` format."""
        lines = []
        for key in sorted(self.entries):
            e = self.entries[key]
            if key < N_BUILTIN or e.pending:
                continue
            lines.append(f"{key} {e.theta!r} {e.epsilon!r} {encode_letters(e.sequence)}")
        Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))
