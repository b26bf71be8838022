"""Byte-exact chunk encoding and the CRC-guarded stream framing.

Chunk layout (all integers little-endian)::

    header   "QGS1" u8 version u8 flags u32 n u32 k u32 V u32 tape_len   22 bytes
    adjacency upper triangle, row-major, LSB-first bits     ceil(V(V-1)/2 / 8)
    locals   one byte (0..23) per vertex                     V
    input_map, output_map   u32 each                         8n
    tape     (u32 vertex, u32 key) pairs                     8k
    crc32    over all preceding bytes                        4

Frame layout: u8 type, u64 seq_no, u32 payload_len, payload, u32 crc32 over
everything before it.
"""

from __future__ import annotations

import enum
import struct
import zlib
from dataclasses import dataclass
from typing import BinaryIO

import numpy as np

from qstream.compiler import GraphChunk
from qstream.decomp import LETTERS
from qstream.errors import StreamDesyncError, WireFormatError

MAGIC = b"QGS1"
VERSION = 1
_HEADER = struct.Struct("<4sBBIIII")
HEADER_SIZE = _HEADER.size
_FRAME_HEAD = struct.Struct("<BQI")
FRAME_OVERHEAD = _FRAME_HEAD.size + 4
KEY_SIZE = 32
MAX_PAYLOAD = 1 << 30


def adjacency_bytes(v: int) -> int:
    return (v * (v - 1) // 2 + 7) // 8


def encoded_size(n: int, k: int, v: int) -> int:
    return HEADER_SIZE + adjacency_bytes(v) + v + 8 * n + 8 * k + 4


def encode_chunk(c: GraphChunk) -> bytes:
    V, n, k = c.n_vertices, c.n_inputs, c.k_nonclifford
    parts = [_HEADER.pack(MAGIC, VERSION, 0, n, k, V, len(c.tape))]
    iu = np.triu_indices(V, 1)
    parts.append(np.packbits(np.asarray(c.adjacency, dtype=bool)[iu],
                             bitorder="little").tobytes())
    parts.append(bytes(c.locals))
    parts.append(np.asarray(c.input_map, dtype="<u4").tobytes())
    parts.append(np.asarray(c.output_map, dtype="<u4").tobytes())
    parts.append(np.asarray(c.tape, dtype="<u4").reshape(-1).tobytes())
    body = b"".join(parts)
    return body + struct.pack("<I", zlib.crc32(body))


def decode_chunk(data: bytes) -> GraphChunk:
    data = bytes(data)
    if len(data) < HEADER_SIZE:
        raise WireFormatError(f"truncated chunk header ({len(data)} of {HEADER_SIZE} bytes)")
    magic, version, _flags, n, k, V, tape_len = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise WireFormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise WireFormatError(f"unsupported chunk version {version}")
    if tape_len != k:
        raise WireFormatError(f"tape_len {tape_len} != k {k}")
    if n < 1 or V > 2 * n + k:
        raise WireFormatError(f"header violates bound: V={V} > 2n+k={2 * n + k}")
    size = encoded_size(n, k, V)
    if len(data) != size:
        raise WireFormatError(f"chunk length {len(data)} != {size} declared by header")
    (crc,) = struct.unpack_from("<I", data, size - 4)
    if zlib.crc32(data[:size - 4]) != crc:
        raise WireFormatError("chunk CRC mismatch")
    off = HEADER_SIZE
    na = adjacency_bytes(V)
    bits = np.unpackbits(np.frombuffer(data, np.uint8, na, off), bitorder="little")
    off += na
    adj = np.zeros((V, V), dtype=bool)
    iu = np.triu_indices(V, 1)
    adj[iu] = bits[:len(iu[0])].astype(bool)
    adj |= adj.T
    locals_ = list(data[off:off + V])
    off += V
    inp = np.frombuffer(data, "<u4", n, off).tolist()
    off += 4 * n
    outp = np.frombuffer(data, "<u4", n, off).tolist()
    off += 4 * n
    tape = [tuple(p) for p in np.frombuffer(data, "<u4", 2 * k, off).reshape(k, 2).tolist()]
    chunk = GraphChunk(n, k, V, adj, locals_, tape, inp, outp)
    try:
        chunk.validate()
    except Exception as exc:
        raise WireFormatError(f"decoded chunk is invalid: {exc}") from None
    return chunk


class FrameType(enum.IntEnum):
    END = 0x00
    FULL_CHUNK = 0x01
    CACHE_REF = 0x02
    TABLE_PUT = 0x03


@dataclass(frozen=True)
class StreamFrame:
    frame_type: FrameType
    seq_no: int
    payload: bytes = b""


def encode_frame(frame: StreamFrame) -> bytes:
    head = _FRAME_HEAD.pack(int(frame.frame_type), frame.seq_no, len(frame.payload))
    body = head + frame.payload
    return body + struct.pack("<I", zlib.crc32(body))


def decode_frame(data: bytes) -> StreamFrame:
    frame, used = _decode_frame_prefix(bytes(data))
    if used != len(data):
        raise WireFormatError(f"{len(data) - used} trailing bytes after frame")
    return frame


def _decode_frame_prefix(data: bytes) -> tuple[StreamFrame, int]:
    if len(data) < _FRAME_HEAD.size:
        raise WireFormatError("truncated frame header")
    ftype, seq, plen = _FRAME_HEAD.unpack_from(data)
    end = _FRAME_HEAD.size + plen
    if plen > MAX_PAYLOAD or len(data) < end + 4:
        raise WireFormatError("truncated frame payload")
    (crc,) = struct.unpack_from("<I", data, end)
    if zlib.crc32(data[:end]) != crc:
        raise WireFormatError(f"frame CRC mismatch at seq {seq}")
    try:
        ftype = FrameType(ftype)
    except ValueError:
        raise WireFormatError(f"unknown frame type 0x{ftype:02x}") from None
    return StreamFrame(ftype, seq, data[_FRAME_HEAD.size:end]), end + 4


class FrameWriter:
    def __init__(self, sink: BinaryIO):
        self.sink = sink
        self.last_seq = -1
        self.bytes_written = 0

    def write(self, frame: StreamFrame) -> int:
        if frame.seq_no <= self.last_seq:
            raise StreamDesyncError(
                f"seq_no {frame.seq_no} not greater than previous {self.last_seq}")
        data = encode_frame(frame)
        self.sink.write(data)
        self.last_seq = frame.seq_no
        self.bytes_written += len(data)
        return len(data)


class FrameReader:
    """Reads frames, enforcing strictly increasing (and, if ``contiguous``, gap-free) seq_no."""

    def __init__(self, source: BinaryIO, contiguous: bool = True):
        self.source = source
        self.contiguous = contiguous
        self.last_seq = -1

    def read(self) -> StreamFrame | None:
        head = self.source.read(_FRAME_HEAD.size)
        if not head:
            return None
        if len(head) < _FRAME_HEAD.size:
            raise WireFormatError("truncated frame header")
        _, _, plen = _FRAME_HEAD.unpack(head)
        if plen > MAX_PAYLOAD:
            raise WireFormatError("frame payload length out of range")
        rest = self.source.read(plen + 4)
        frame = decode_frame(head + rest)
        self.check_seq(frame)
        return frame

    def check_seq(self, frame: StreamFrame) -> None:
        if frame.seq_no <= self.last_seq:
            raise StreamDesyncError(f"out-of-order seq_no {frame.seq_no} after {self.last_seq}")
        if self.contiguous and frame.seq_no != self.last_seq + 1:
            raise StreamDesyncError(f"seq gap: expected {self.last_seq + 1}, got {frame.seq_no}")
        self.last_seq = frame.seq_no

    def __iter__(self):
        while True:
            frame = self.read()
            if frame is None:
                return
            yield frame
            if frame.frame_type is FrameType.END:
                return


def write_frame(sink: BinaryIO, frame: StreamFrame) -> int:
    data = encode_frame(frame)
    sink.write(data)
    return len(data)


def read_frame(source: BinaryIO) -> StreamFrame | None:
    return FrameReader(source, contiguous=False).read()


# -- payloads ------------------------------------------------------------

def cache_ref_payload(key: bytes, assignment) -> bytes:
    if len(key) != KEY_SIZE:
        raise ValueError("cache key must be 32 bytes")
    a = np.asarray(list(assignment), dtype="<u4")
    return key + struct.pack("<I", len(a)) + a.tobytes()


def parse_cache_ref(payload: bytes) -> tuple[bytes, list[int], int]:
    """(key, assignment, bytes consumed)."""
    if len(payload) < KEY_SIZE + 4:
        raise WireFormatError("short CACHE_REF payload")
    key = payload[:KEY_SIZE]
    (arity,) = struct.unpack_from("<I", payload, KEY_SIZE)
    end = KEY_SIZE + 4 + 4 * arity
    if len(payload) < end:
        raise WireFormatError("short CACHE_REF assignment")
    return key, np.frombuffer(payload, "<u4", arity, KEY_SIZE + 4).tolist(), end


def full_chunk_payload(key: bytes, assignment, chunk_bytes: bytes) -> bytes:
    return cache_ref_payload(key, assignment) + chunk_bytes


def parse_full_chunk(payload: bytes) -> tuple[bytes, list[int], bytes]:
    key, assignment, end = parse_cache_ref(payload)
    return key, assignment, payload[end:]


_NIBBLE = {name: i for i, name in enumerate(LETTERS)}


def table_put_payload(key: int, sequence) -> bytes:
    seq = list(sequence)
    packed = bytearray((len(seq) + 1) // 2)
    for i, s in enumerate(seq):
        packed[i // 2] |= _NIBBLE[s] << (4 * (i % 2))
    return struct.pack("<IH", key, len(seq)) + bytes(packed)


def parse_table_put(payload: bytes) -> tuple[int, tuple[str, ...]]:
    if len(payload) < 6:
        raise WireFormatError("short TABLE_PUT payload")
    key, length = struct.unpack_from("<IH", payload)
    if len(payload) != 6 + (length + 1) // 2:
        raise WireFormatError("TABLE_PUT length mismatch")
    out = []
    for i in range(length):
        code = (payload[6 + i // 2] >> (4 * (i % 2))) & 0xF
        if code >= len(LETTERS):
            raise WireFormatError(f"bad sequence nibble {code}")
        out.append(LETTERS[code])
    return key, tuple(out)


def compression_report(qasm_bytes: int, framed_bytes: int, gate_count: int = 0) -> dict:
    if qasm_bytes <= 0 or framed_bytes <= 0:
        raise ValueError("compression ratio undefined for empty input")
    return {
        "ratio": qasm_bytes / framed_bytes,
        "gates_per_kb": gate_count / (framed_bytes / 1024),
        "qasm_bytes": qasm_bytes,
        "framed_bytes": framed_bytes,
    }


def resolve_stream(source: BinaryIO) -> tuple[list[tuple[GraphChunk, list[int]]], dict[int, tuple]]:
    """Read a frame stream into (chunk, assignment) placements plus TABLE_PUT entries."""
    mirror: dict[bytes, GraphChunk] = {}
    placements, table = [], {}
    saw_end = False
    for frame in FrameReader(source):
        if frame.frame_type is FrameType.END:
            saw_end = True
        elif frame.frame_type is FrameType.TABLE_PUT:
            key, letters = parse_table_put(frame.payload)
            table[key] = letters
        elif frame.frame_type is FrameType.FULL_CHUNK:
            key, assignment, data = parse_full_chunk(frame.payload)
            mirror[key] = decode_chunk(data)
            placements.append((mirror[key], assignment))
        else:
            key, assignment, _ = parse_cache_ref(frame.payload)
            if key not in mirror:
                raise StreamDesyncError(f"CACHE_REF at seq {frame.seq_no} to unseen key")
            placements.append((mirror[key], assignment))
    if not saw_end:
        raise WireFormatError("stream ended without an END frame")
    return placements, table
