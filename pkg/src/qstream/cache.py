"""Content-addressed cache of compiled chunks.

Keys are SHA-256 digests of a canonical fragment encoding: gates in
topological order, qubits renamed by first use, Rz carrying its table key.

On disk (``cache_dir``)::

    entries.log    append-only records  "QCE1" u32 len body u32 crc32(body)
                   body = key[32] u32 arity f64 created_at chunk-bytes
    index.bin      "QCI1" u64 hits u64 misses u64 log_end u32 count
                   count x (key[32] u64 offset u64 hits f64 created_at)  u32 crc32
    decomp.table   `<key> <theta> <epsilon> <letters>` lines

The index is rewritten on flush/close; records appended after the last
index write are recovered by scanning the log tail.
"""

from __future__ import annotations

import hashlib
import logging
import os
import struct
import threading
import time
import zlib
from collections import OrderedDict
from dataclasses import dataclass
from pathlib import Path

from qstream.circuit import GateKind, Tag
from qstream.decomp import DecompositionTable
from qstream.errors import IntegrityError, WireFormatError
from qstream.wire import decode_chunk

log = logging.getLogger(__name__)

_REC_MAGIC = b"QCE1"
_IDX_MAGIC = b"QCI1"
_REC_HEAD = struct.Struct("<4sI")
_BODY_HEAD = struct.Struct("<32sId")
_IDX_HEAD = struct.Struct("<4sQQQI")
_IDX_REC = struct.Struct("<32sQQd")
_TAG_CODE = {tag: i for i, tag in enumerate(Tag)}


def canonical_fragment(gates) -> tuple[list[tuple[GateKind, tuple[int, ...]]], list[int]]:
    """Relabel qubits by first use.

    Returns (relabeled gates, assignment) where ``assignment[c]`` is the
    original qubit behind canonical label c.
    """
    label: dict[int, int] = {}
    out = []
    for kind, qs in gates:
        new = []
        for q in qs:
            if q not in label:
                label[q] = len(label)
            new.append(label[q])
        out.append((kind, tuple(new)))
    assignment = [0] * len(label)
    for q, c in label.items():
        assignment[c] = q
    return out, assignment


def canonical_encoding(gates) -> bytes:
    relabeled, assignment = canonical_fragment(gates)
    parts = [b"QSK1", struct.pack("<I", len(assignment))]
    for kind, qs in relabeled:
        parts.append(struct.pack("<BB", _TAG_CODE[kind.tag], len(qs)))
        parts.append(struct.pack(f"<{len(qs)}I", *qs))
        if kind.tag is Tag.RZ:
            parts.append(struct.pack("<I", kind.rz_key))
    return b"".join(parts)


def canonical_key(gates) -> bytes:
    return hashlib.sha256(canonical_encoding(gates)).digest()


@dataclass
class CacheEntry:
    key: bytes
    chunk: bytes
    qubit_arity: int
    hits: int = 0
    created_at: float = 0.0


@dataclass
class _Slot:
    offset: int
    hits: int
    created_at: float
    arity: int = -1
    data: bytes | None = None


class ChunkCache:
    """Thread-safe chunk cache; in-memory when ``cache_dir`` is None."""

    def __init__(self, cache_dir=None, max_entries: int | None = None,
                 table: DecompositionTable | None = None, fsync: bool = False):
        self.dir = Path(cache_dir) if cache_dir is not None else None
        self.max_entries = max_entries
        self.fsync = fsync
        self.table = table if table is not None else DecompositionTable()
        self.hits = 0
        self.misses = 0
        self._slots: OrderedDict[bytes, _Slot] = OrderedDict()
        self._lock = threading.RLock()
        self._log = None
        self._log_end = 0
        if self.dir is not None:
            self.dir.mkdir(parents=True, exist_ok=True)
            self._open()

    # -- paths -----------------------------------------------------------

    @property
    def log_path(self) -> Path:
        return self.dir / "entries.log"

    @property
    def index_path(self) -> Path:
        return self.dir / "index.bin"

    @property
    def table_path(self) -> Path:
        return self.dir / "decomp.table"

    # -- persistence -----------------------------------------------------

    def _open(self) -> None:
        if self.table_path.exists():
            self.table.load_table(self.table_path)
        self.log_path.touch(exist_ok=True)
        start = self._load_index()
        self._scan_log(start)
        self._log = open(self.log_path, "ab")
        self._log_end = self.log_path.stat().st_size

    def _load_index(self) -> int:
        if not self.index_path.exists():
            return 0
        data = self.index_path.read_bytes()
        try:
            if len(data) < _IDX_HEAD.size + 4:
                raise ValueError("short index")
            (crc,) = struct.unpack_from("<I", data, len(data) - 4)
            if zlib.crc32(data[:-4]) != crc:
                raise ValueError("index CRC mismatch")
            magic, hits, misses, log_end, count = _IDX_HEAD.unpack_from(data)
            if magic != _IDX_MAGIC or len(data) != _IDX_HEAD.size + count * _IDX_REC.size + 4:
                raise ValueError("bad index header")
        except ValueError as exc:
            log.warning("rebuilding cache index from log: %s", exc)
            return 0
        self.hits, self.misses = hits, misses
        off = _IDX_HEAD.size
        for _ in range(count):
            key, offset, h, created = _IDX_REC.unpack_from(data, off)
            off += _IDX_REC.size
            self._slots[key] = _Slot(offset, h, created)
        return log_end

    def _scan_log(self, start: int) -> None:
        size = self.log_path.stat().st_size
        if start > size:
            start = 0
        with open(self.log_path, "rb") as f:
            f.seek(start)
            off = start
            while off < size:
                head = f.read(_REC_HEAD.size)
                if len(head) < _REC_HEAD.size:
                    break
                magic, blen = _REC_HEAD.unpack(head)
                if magic != _REC_MAGIC:
                    break
                body = f.read(blen)
                tail = f.read(4)
                if len(body) < blen or len(tail) < 4:
                    log.warning("truncated record at offset %d ignored", off)
                    break
                key, _arity, created = _BODY_HEAD.unpack_from(body)
                if key not in self._slots:
                    self._slots[key] = _Slot(off, 0, created)
                off += _REC_HEAD.size + blen + 4

    def _write_index(self) -> None:
        recs = [_IDX_REC.pack(k, s.offset, s.hits, s.created_at) for k, s in self._slots.items()]
        body = _IDX_HEAD.pack(_IDX_MAGIC, self.hits, self.misses, self._log_end,
                              len(recs)) + b"".join(recs)
        tmp = self.index_path.with_suffix(".tmp")
        tmp.write_bytes(body + struct.pack("<I", zlib.crc32(body)))
        os.replace(tmp, self.index_path)

    def flush(self) -> None:
        with self._lock:
            if self.dir is None:
                return
            self._log.flush()
            self._write_index()
            self.table.dump(self.table_path)

    def close(self) -> None:
        with self._lock:
            if self._log is not None:
                self.flush()
                self._log.close()
                self._log = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    # -- record io -------------------------------------------------------

    def _read_record(self, key: bytes, slot: _Slot) -> None:
        if self._log is not None:
            self._log.flush()
        with open(self.log_path, "rb") as f:
            f.seek(slot.offset)
            head = f.read(_REC_HEAD.size)
            ok = len(head) == _REC_HEAD.size
            if ok:
                magic, blen = _REC_HEAD.unpack(head)
                body = f.read(blen)
                tail = f.read(4)
                ok = (magic == _REC_MAGIC and len(body) == blen and len(tail) == 4
                      and struct.unpack("<I", tail)[0] == zlib.crc32(body))
        if not ok:
            raise IntegrityError(f"cache entry {key.hex()} failed CRC check")
        rkey, arity, created = _BODY_HEAD.unpack_from(body)
        if rkey != key:
            raise IntegrityError(f"cache entry {key.hex()} points at record for {rkey.hex()}")
        slot.arity = arity
        slot.created_at = created
        slot.data = body[_BODY_HEAD.size:]

    # -- public api ------------------------------------------------------

    def __contains__(self, key: bytes) -> bool:
        with self._lock:
            return key in self._slots

    def __len__(self) -> int:
        return len(self._slots)

    def keys(self) -> list[bytes]:
        with self._lock:
            return list(self._slots)

    def get(self, key: bytes) -> CacheEntry | None:
        with self._lock:
            slot = self._slots.get(key)
            if slot is None:
                self.misses += 1
                return None
            if slot.data is None:
                self._read_record(key, slot)
            slot.hits += 1
            self.hits += 1
            self._slots.move_to_end(key)
            return CacheEntry(key, slot.data, slot.arity, slot.hits, slot.created_at)

    def peek(self, key: bytes) -> CacheEntry | None:
        """Like get, without touching counters or LRU order."""
        with self._lock:
            slot = self._slots.get(key)
            if slot is None:
                return None
            if slot.data is None:
                self._read_record(key, slot)
            return CacheEntry(key, slot.data, slot.arity, slot.hits, slot.created_at)

    def put(self, key: bytes, chunk_bytes: bytes) -> None:
        if len(key) != 32:
            raise ValueError("cache key must be 32 bytes")
        chunk_bytes = bytes(chunk_bytes)
        try:
            arity = decode_chunk(chunk_bytes).n_inputs
        except WireFormatError as exc:
            raise IntegrityError(f"refusing to cache undecodable chunk {key.hex()}: {exc}") from None
        with self._lock:
            slot = self._slots.get(key)
            if slot is not None:
                if slot.data is None:
                    self._read_record(key, slot)
                if slot.data != chunk_bytes:
                    raise IntegrityError(f"conflicting chunk bytes for key {key.hex()}")
                return
            created = time.time()
            offset = self._log_end
            if self._log is not None:
                body = _BODY_HEAD.pack(key, arity, created) + chunk_bytes
                rec = _REC_HEAD.pack(_REC_MAGIC, len(body)) + body + struct.pack(
                    "<I", zlib.crc32(body))
                self._log.write(rec)
                if self.fsync:
                    self._log.flush()
                    os.fsync(self._log.fileno())
                self._log_end += len(rec)
            self._slots[key] = _Slot(offset, 0, created, arity, chunk_bytes)
            if self.max_entries is not None:
                while len(self._slots) > self.max_entries:
                    self._slots.popitem(last=False)

    def stats(self) -> dict:
        with self._lock:
            return {
                "entries": len(self._slots),
                "hits": self.hits,
                "misses": self.misses,
                "log_bytes": self._log_end,
                "table_entries": len(self.table),
            }

    def export(self) -> list[dict]:
        with self._lock:
            out = []
            for key in list(self._slots):
                e = self.peek(key)
                out.append({"key": key.hex(), "arity": e.qubit_arity, "hits": e.hits,
                            "created_at": e.created_at, "bytes": len(e.chunk)})
            return out

    def clear(self) -> None:
        with self._lock:
            self._slots.clear()
            self.hits = self.misses = 0
            if self.dir is not None:
                self._log.close()
                for p in (self.log_path, self.index_path, self.table_path):
                    p.unlink(missing_ok=True)
                self.log_path.touch()
                self._log = open(self.log_path, "ab")
                self._log_end = 0
