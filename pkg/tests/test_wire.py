import io
import random
import struct
import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qstream.compiler import GraphChunk, compile_chunk
from qstream.errors import StreamDesyncError, WireFormatError
from qstream.wire import (FRAME_OVERHEAD, adjacency_bytes, FrameReader, FrameType, FrameWriter, StreamFrame,
                          cache_ref_payload, compression_report, decode_chunk, decode_frame,
                          encode_chunk, encode_frame, encoded_size, full_chunk_payload,
                          parse_cache_ref, parse_full_chunk, parse_table_put, read_frame,
                          resolve_stream, table_put_payload, write_frame)

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "scripts"))
from make_golden import GOLDEN  # noqa: E402

GOLDEN_DIR = Path(__file__).parent / "golden"


def random_chunk(rng: random.Random) -> GraphChunk:
    n = rng.randint(1, 5)
    k = rng.randint(0, 5)
    V = rng.randint(max(1, 2 * n + k - 2), 2 * n + k)
    while V < n + k + n:
        V += 1
    upper = np.triu(np.array([[rng.random() < 0.4 for _ in range(V)] for _ in range(V)]), 1)
    adj = upper | upper.T
    verts = list(range(V))
    rng.shuffle(verts)
    inp = verts[:n]
    out = verts[n:2 * n]
    tape_v = verts[2 * n:2 * n + k]
    tape = [(v, rng.randrange(100)) for v in tape_v]
    loc = [rng.randrange(24) for _ in range(V)]
    return GraphChunk(n, k, V, adj, loc, tape, inp, out)


@pytest.mark.parametrize("name", sorted(GOLDEN))
def test_golden_vectors(name):
    gates, n = GOLDEN[name]
    want = bytes.fromhex((GOLDEN_DIR / f"{name}.hex").read_text().strip())
    assert encode_chunk(compile_chunk(gates, n)) == want


def test_t_chunk_is_46_bytes():
    c = compile_chunk(*GOLDEN["t_gate"])
    assert len(encode_chunk(c)) == 46 == encoded_size(1, 1, 3)


def test_single_vertex_chunk_has_no_adjacency_bytes():
    c = GraphChunk(1, 0, 1, np.zeros((1, 1), bool), [0], [], [0], [0])
    data = encode_chunk(c)
    assert adjacency_bytes(1) == 0
    assert len(data) == 22 + 0 + 1 + 8 + 0 + 4
    assert decode_chunk(data) == c


def test_random_round_trip_and_injective():
    rng = random.Random(11)
    seen = {}
    for _ in range(1000):
        c = random_chunk(rng)
        data = encode_chunk(c)
        assert len(data) == encoded_size(c.n_inputs, c.k_nonclifford, c.n_vertices)
        assert decode_chunk(data) == c
        if data in seen:
            assert seen[data] == c
        seen[data] = c


def test_corruption_and_truncation():
    data = encode_chunk(compile_chunk(*GOLDEN["mixed_2q"]))
    for i in range(len(data)):
        bad = bytearray(data)
        bad[i] ^= 0x5A
        with pytest.raises(WireFormatError):
            decode_chunk(bytes(bad))
    for cut in (0, 5, 21, len(data) - 1):
        with pytest.raises(WireFormatError):
            decode_chunk(data[:cut])


def test_header_bound_violation():
    data = bytearray(encode_chunk(compile_chunk(*GOLDEN["t_gate"])))
    struct.pack_into("<I", data, 14, 9)
    with pytest.raises(WireFormatError, match="bound"):
        decode_chunk(bytes(data))


def test_end_frame():
    f = decode_frame(encode_frame(StreamFrame(FrameType.END, 0)))
    assert f.frame_type is FrameType.END and f.payload == b""
    assert len(encode_frame(StreamFrame(FrameType.END, 0))) == FRAME_OVERHEAD


def test_cache_ref_size_for_64_bit_maj_block():
    # 64-bit MAJ block touches 2*64+1 register qubits
    arity = 129
    frame = encode_frame(StreamFrame(FrameType.CACHE_REF, 1,
                                     cache_ref_payload(b"\0" * 32, range(arity))))
    assert len(frame) == 1 + 8 + 4 + (32 + 4 + arity * 4) + 4


def test_stream_replay():
    chunk = encode_chunk(compile_chunk(*GOLDEN["t_gate"]))
    key = bytes(range(32))
    frames = [StreamFrame(FrameType.FULL_CHUNK, 0, full_chunk_payload(key, [3], chunk)),
              StreamFrame(FrameType.CACHE_REF, 1, cache_ref_payload(key, [5])),
              StreamFrame(FrameType.END, 2)]
    buf = io.BytesIO()
    w = FrameWriter(buf)
    for f in frames:
        w.write(f)
    buf.seek(0)
    assert list(FrameReader(buf)) == frames
    buf.seek(0)
    placements, _ = resolve_stream(buf)
    assert [a for _, a in placements] == [[3], [5]]
    assert parse_full_chunk(frames[0].payload) == (key, [3], chunk)
    assert parse_cache_ref(frames[1].payload)[:2] == (key, [5])


def test_seq_discipline():
    w = FrameWriter(io.BytesIO())
    w.write(StreamFrame(FrameType.END, 4))
    with pytest.raises(StreamDesyncError):
        w.write(StreamFrame(FrameType.END, 4))
    buf = io.BytesIO()
    write_frame(buf, StreamFrame(FrameType.END, 0))
    write_frame(buf, StreamFrame(FrameType.END, 2))
    buf.seek(0)
    r = FrameReader(buf)
    r.read()
    with pytest.raises(StreamDesyncError):
        r.read()


def test_unknown_frame_type():
    body = struct.pack("<BQI", 9, 0, 0)
    import zlib
    with pytest.raises(WireFormatError, match="unknown frame type"):
        decode_frame(body + struct.pack("<I", zlib.crc32(body)))


def test_every_single_byte_corruption_of_frames_detected():
    chunk = encode_chunk(compile_chunk(*GOLDEN["mixed_2q"]))
    for frame in (StreamFrame(FrameType.FULL_CHUNK, 7, full_chunk_payload(b"k" * 32, [0, 1], chunk)),
                  StreamFrame(FrameType.CACHE_REF, 8, cache_ref_payload(b"k" * 32, [1, 0])),
                  StreamFrame(FrameType.END, 9)):
        data = encode_frame(frame)
        for i in range(len(data)):
            for flip in (0x01, 0x80, 0xFF):
                bad = bytearray(data)
                bad[i] ^= flip
                with pytest.raises(WireFormatError):
                    decode_frame(bytes(bad))


@given(st.lists(st.sampled_from(["T", "Tdg", "S", "Sdg", "H", "X", "Z"]), max_size=40),
       st.integers(0, 2 ** 32 - 1))
@settings(max_examples=100)
def test_table_put_round_trip(seq, key):
    assert parse_table_put(table_put_payload(key, seq)) == (key, tuple(seq))


def test_read_frame_eof():
    assert read_frame(io.BytesIO()) is None


def test_compression_report():
    r = compression_report(100, 100, 10)
    assert r["ratio"] == 1.0
    with pytest.raises(ValueError):
        compression_report(0, 10)
