"""Threaded partition -> cache/compile -> frame -> consumer pipeline.

Threads and channels::

    producer (partitioner) --work q--> N compile workers --result q--> sequencer
        --frame q (capacity queue_capacity)--> consumer

The sequencer restores partition order, so frames leave in the order the
partitioner emitted them (a topological order of the partition quotient).
The first occurrence of a canonical key on the stream is sent as FULL_CHUNK,
later ones as CACHE_REF.  The consumer validates CRC and sequence numbers,
resolves references against its own mirror and sleeps ``gates / rate``.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import queue
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import BinaryIO, Callable

from qstream.cache import ChunkCache, canonical_fragment, canonical_key
from qstream.circuit import CircuitDag, Tag, build_edge_list, lower_toffoli
from qstream.compiler import compile_chunk
from qstream.decomp import N_BUILTIN, DecompositionTable, PendingSequenceError
from qstream.errors import (CompileError, ConfigurationError, QStreamError,
                            StreamDesyncError, WireFormatError)
from qstream.partition import Partition, ResourceBounds, partition_stream
from qstream.wire import (FrameType, StreamFrame, decode_chunk, decode_frame, encode_chunk,
                          encode_frame, full_chunk_payload, cache_ref_payload, parse_cache_ref,
                          parse_full_chunk, parse_table_put, table_put_payload)

log = logging.getLogger(__name__)

STAGES = ("insertion", "partition", "compile", "extraction")
_POLL = 0.05
_DONE = object()


@dataclass
class PipelineConfig:
    bounds: ResourceBounds = field(default_factory=ResourceBounds)
    workers: int = 1
    queue_capacity: int = 64
    consumer_rate: float = 1e9
    cache_dir: str | Path | None = None
    strict: bool = False

    def __post_init__(self):
        if self.workers < 1 or self.queue_capacity < 1 or not self.consumer_rate > 0:
            raise ConfigurationError("workers, queue_capacity and consumer_rate must be positive")


@dataclass
class StageMetrics:
    """Per-run counters.  partition_s is producer CPU time; compile_s and
    extraction_s are summed over workers."""

    insertion_s: float = 0.0
    partition_s: float = 0.0
    compile_s: float = 0.0
    extraction_s: float = 0.0
    total_s: float = 0.0
    gate_count: int = 0
    partition_count: int = 0
    cache_hits: int = 0
    cache_misses: int = 0
    queue_high_watermark: int = 0
    frames: int = 0
    bytes_streamed: int = 0
    latency_histogram_us: dict[int, int] = field(default_factory=dict)
    emitted: list[int] = field(default_factory=list)
    delivered: list[int] = field(default_factory=list)

    def stage_seconds(self, stage: str) -> float:
        return getattr(self, f"{stage}_s")

    @property
    def gates_per_second(self) -> dict[str, float]:
        out = {}
        for stage in STAGES:
            s = self.stage_seconds(stage)
            out[stage] = self.gate_count / s if s > 0 else 0.0
        return out

    def to_json(self) -> dict:
        return {
            "gate_count": self.gate_count,
            "partition_count": self.partition_count,
            "cache_hits": self.cache_hits,
            "cache_misses": self.cache_misses,
            "queue_high_watermark": self.queue_high_watermark,
            "frames": self.frames,
            "bytes_streamed": self.bytes_streamed,
            "timings": {
                **{f"{s}_s": round(self.stage_seconds(s), 6) for s in STAGES},
                "total_s": round(self.total_s, 6),
                "gates_per_second": self.gates_per_second,
                "latency_histogram_us": {str(k): v for k, v in
                                         sorted(self.latency_histogram_us.items())},
            },
        }


def _bucket(us: float) -> int:
    """Upper edge (power of two, in microseconds) of the bucket holding ``us``."""
    return 1 << max(0, math.ceil(math.log2(max(us, 1.0))))


class _Abort(Exception):
    pass


class _Run:
    """State shared by the threads of one pipeline run."""

    def __init__(self, dag, cfg, cache, partitions, sink, consumer_hook):
        self.dag = dag
        self.cfg = cfg
        self.cache = cache
        self.table: DecompositionTable = cache.table
        self.partitions = partitions
        self.sink = sink
        self.consumer_hook = consumer_hook
        self.m = StageMetrics()
        self.abort = threading.Event()
        self.errors: list[BaseException] = []
        cap = cfg.queue_capacity
        self.work_q: queue.Queue = queue.Queue(cap)
        self.result_q: queue.Queue = queue.Queue(cap + cfg.workers)
        self.frame_q: queue.Queue = queue.Queue(cap)
        self.lock = threading.Lock()
        self.key_locks: dict[bytes, threading.Lock] = {}
        self.emit_time: dict[int, float] = {}
        self.seq_pid: dict[int, int] = {}

    # channel helpers that give up when another thread failed
    def put(self, q: queue.Queue, item) -> None:
        while True:
            if self.abort.is_set():
                raise _Abort
            try:
                q.put(item, timeout=_POLL)
                return
            except queue.Full:
                continue

    def get(self, q: queue.Queue):
        while True:
            if self.abort.is_set():
                raise _Abort
            try:
                return q.get(timeout=_POLL)
            except queue.Empty:
                continue

    def fail(self, exc: BaseException) -> None:
        with self.lock:
            self.errors.append(exc)
        self.abort.set()

    def guarded(self, fn: Callable) -> Callable:
        def run():
            try:
                fn()
            except _Abort:
                pass
            except BaseException as exc:  # propagated to the caller of run_pipeline
                self.fail(exc)
        return run

    # -- stages ------------------------------------------------------------

    def producer(self) -> None:
        if self.partitions is not None:
            it = iter(self.partitions)
        else:
            it = partition_stream(build_edge_list(self.dag), self.dag, self.cfg.bounds, self.table)
        while True:
            # thread CPU time, so waits on the GIL held by workers are not billed here
            t0 = time.thread_time()
            part = next(it, None)
            self.m.partition_s += time.thread_time() - t0
            if part is None:
                break
            with self.lock:
                self.emit_time[part.id] = time.perf_counter()
                self.m.emitted.append(part.id)
            self.put(self.work_q, part)
        for _ in range(self.cfg.workers):
            self.put(self.work_q, _DONE)

    def worker(self) -> None:
        while True:
            part = self.get(self.work_q)
            if part is _DONE:
                self.put(self.result_q, _DONE)
                return
            self.put(self.result_q, self.process(part))

    def process(self, part: Partition):
        t0 = time.perf_counter()
        frag = self.dag.fragment(part.node_ids)
        canon, assignment = canonical_fragment(frag)
        key = canonical_key(frag)
        with self.lock:
            klock = self.key_locks.setdefault(key, threading.Lock())
        compile_s = 0.0
        with klock:
            entry = self.cache.get(key)
            if entry is None:
                t1 = time.perf_counter()
                try:
                    chunk = compile_chunk(canon, len(assignment), self.table, self.cfg.strict)
                except CompileError as exc:
                    raise CompileError(f"partition {part.id}: {exc}") from exc
                data = encode_chunk(chunk)
                compile_s = time.perf_counter() - t1
                self.cache.put(key, data)
            else:
                data = entry.chunk
        with self.lock:
            self.m.compile_s += compile_s
            self.m.extraction_s += time.perf_counter() - t0 - compile_s
        rz_keys = sorted({k.rz_key for k, _ in canon
                          if k.tag is Tag.RZ and k.rz_key >= N_BUILTIN})
        return part.id, key, assignment, data, len(part.node_ids), rz_keys

    def sequencer(self) -> None:
        pending: dict[int, tuple] = {}
        done_workers = 0
        seq = 0
        sent_keys: set[bytes] = set()
        sent_table: set[int] = set()
        emitted_pos = 0
        while True:
            # next partition id expected in producer order
            with self.lock:
                expected = (self.m.emitted[emitted_pos]
                            if emitted_pos < len(self.m.emitted) else None)
            if expected is not None and expected in pending:
                pid, key, assignment, data, gates, rz_keys = pending.pop(expected)
                emitted_pos += 1
                t0 = time.perf_counter()
                frames = []
                for rk in rz_keys:
                    if rk not in sent_table:
                        try:
                            seq_letters = self.table.lookup_sequence(rk).sequence
                        except PendingSequenceError:
                            seq_letters = ()
                        frames.append((FrameType.TABLE_PUT, table_put_payload(rk, seq_letters), 0))
                        sent_table.add(rk)
                if key in sent_keys:
                    frames.append((FrameType.CACHE_REF, cache_ref_payload(key, assignment), gates))
                else:
                    sent_keys.add(key)
                    frames.append((FrameType.FULL_CHUNK,
                                   full_chunk_payload(key, assignment, data), gates))
                encoded = []
                for ftype, payload, g in frames:
                    encoded.append((encode_frame(StreamFrame(ftype, seq, payload)), g,
                                    pid if ftype is not FrameType.TABLE_PUT else None))
                    if ftype is not FrameType.TABLE_PUT:
                        self.seq_pid[seq] = pid
                    seq += 1
                with self.lock:
                    self.m.extraction_s += time.perf_counter() - t0
                for item in encoded:
                    self.put_frame(item)
                continue
            if done_workers == self.cfg.workers and not pending:
                break
            item = self.get(self.result_q)
            if item is _DONE:
                done_workers += 1
            else:
                pending[item[0]] = item
        if pending or emitted_pos != len(self.m.emitted):
            raise StreamDesyncError("sequencer finished with undelivered partitions")
        self.put_frame((encode_frame(StreamFrame(FrameType.END, seq)), 0, None))

    def put_frame(self, item) -> None:
        self.put(self.frame_q, item)
        size = self.frame_q.qsize()
        if size > self.m.queue_high_watermark:
            self.m.queue_high_watermark = size

    def consumer(self) -> None:
        mirror: dict[bytes, object] = {}
        mirror_table: dict[int, tuple] = {}
        last = -1
        rate = self.cfg.consumer_rate
        while True:
            data, gates, pid = self.get(self.frame_q)
            if self.consumer_hook is not None:
                self.consumer_hook(data)
            try:
                frame = decode_frame(data)
            except WireFormatError as exc:
                raise StreamDesyncError(f"consumer rejected frame after seq {last}: {exc}") from None
            if frame.seq_no != last + 1:
                raise StreamDesyncError(
                    f"seq gap at consumer: expected {last + 1}, got {frame.seq_no}")
            last = frame.seq_no
            self.m.frames += 1
            self.m.bytes_streamed += len(data)
            if self.sink is not None:
                self.sink.write(data)
            if frame.frame_type is FrameType.END:
                return
            if frame.frame_type is FrameType.TABLE_PUT:
                k, letters = parse_table_put(frame.payload)
                mirror_table[k] = letters
                continue
            if frame.frame_type is FrameType.FULL_CHUNK:
                key, assignment, chunk_bytes = parse_full_chunk(frame.payload)
                mirror[key] = decode_chunk(chunk_bytes)
            else:
                key, assignment, _ = parse_cache_ref(frame.payload)
                if key not in mirror:
                    raise StreamDesyncError(
                        f"CACHE_REF at seq {frame.seq_no} names unknown key {key.hex()[:16]}")
            if len(assignment) != mirror[key].n_inputs:
                raise StreamDesyncError(f"assignment arity mismatch at seq {frame.seq_no}")
            now = time.perf_counter()
            with self.lock:
                lat = (now - self.emit_time.pop(pid)) * 1e6
                b = _bucket(lat)
                self.m.latency_histogram_us[b] = self.m.latency_histogram_us.get(b, 0) + 1
                self.m.delivered.append(pid)
            if gates:
                time.sleep(gates / rate)


def run_pipeline(dag: CircuitDag, cfg: PipelineConfig | None = None, *,
                 partitions: list[Partition] | None = None, cache: ChunkCache | None = None,
                 sink: BinaryIO | None = None,
                 consumer_hook: Callable[[bytes], None] | None = None) -> StageMetrics:
    """Stream ``dag`` through the pipeline and return its metrics.

    ``partitions`` replaces the partitioner (the dag must then already be
    lowered).  ``cache`` overrides ``cfg.cache_dir``.  ``sink`` receives every
    frame the consumer accepted.  ``consumer_hook`` is called with each raw
    frame before the consumer handles it.
    """
    cfg = cfg or PipelineConfig()
    own_cache = cache is None
    if own_cache:
        cache = ChunkCache(cfg.cache_dir)
    t_start = time.perf_counter()
    try:
        t0 = time.perf_counter()
        if partitions is None:
            dag = lower_toffoli(dag)
            build_edge_list(dag)
        elif any(n.kind.tag is Tag.TOFFOLI for n in dag.nodes):
            raise ConfigurationError("precomputed partitions need a lowered circuit")
        insertion_s = time.perf_counter() - t0
        h0, m0 = cache.hits, cache.misses
        run = _Run(dag, cfg, cache, partitions, sink, consumer_hook)
        run.m.insertion_s = insertion_s
        run.m.gate_count = len(dag)
        threads = [threading.Thread(target=run.guarded(run.producer), name="qstream-producer")]
        threads += [threading.Thread(target=run.guarded(run.worker), name=f"qstream-worker-{i}")
                    for i in range(cfg.workers)]
        threads.append(threading.Thread(target=run.guarded(run.sequencer), name="qstream-seq"))
        consumer = threading.Thread(target=run.guarded(run.consumer), name="qstream-consumer")
        threads.append(consumer)
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        if run.errors:
            exc = run.errors[0]
            if isinstance(exc, QStreamError):
                raise exc
            raise QStreamError(f"pipeline thread failed: {exc!r}") from exc
        m = run.m
        m.partition_count = len(m.emitted)
        m.cache_hits = cache.hits - h0
        m.cache_misses = cache.misses - m0
        m.total_s = time.perf_counter() - t_start
        if m.delivered != m.emitted:
            raise StreamDesyncError("delivered partitions differ from emitted partitions")
        return m
    finally:
        if own_cache:
            cache.close()
        else:
            cache.flush()


def replay_speedup(dag: CircuitDag, cfg: PipelineConfig | None = None, *,
                   partitions: list[Partition] | None = None) -> dict:
    """Cold run on an emptied cache, then a warm run on the same inputs."""
    cfg = cfg or PipelineConfig()
    cache = ChunkCache(cfg.cache_dir)
    try:
        cache.clear()
        cold = run_pipeline(dag, cfg, partitions=partitions, cache=cache)
        warm = run_pipeline(dag, cfg, partitions=partitions, cache=cache)
    finally:
        cache.close()
    return {
        "cold_s": cold.total_s,
        "warm_s": warm.total_s,
        "ratio": cold.total_s / warm.total_s if warm.total_s > 0 else math.inf,
        "cold": cold,
        "warm": warm,
    }


def stage_rows(metrics: StageMetrics) -> list[tuple[str, float, float]]:
    gps = metrics.gates_per_second
    return [(s, round(metrics.stage_seconds(s), 6), gps[s]) for s in STAGES]


def stage_report(metrics: StageMetrics, fmt: str = "text") -> str:
    """Per-stage seconds and gates/sec as text, CSV or JSON."""
    if fmt == "json":
        return json.dumps(metrics.to_json(), indent=2, sort_keys=True)
    rows = stage_rows(metrics)
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["stage", "seconds", "gates_per_sec"])
        for stage, sec, gps in rows:
            w.writerow([stage, f"{sec:.6f}", f"{gps:.1f}"])
        return buf.getvalue()
    if fmt == "text":
        lines = [f"{'stage':<12}{'seconds':>12}{'gates/sec':>16}"]
        lines += [f"{stage:<12}{sec:>12.3f}{gps:>16.1f}" for stage, sec, gps in rows]
        lines.append(f"partitions={metrics.partition_count} hits={metrics.cache_hits} "
                     f"misses={metrics.cache_misses} high_watermark={metrics.queue_high_watermark}")
        return "\n".join(lines) + "\n"
    raise ConfigurationError(f"unknown report format {fmt!r}")
