"""Full versus strided adder construction timings (single threaded).

Columns per (bits, stride):

    full_dec      generate the adder, lower Toffolis, build the edge list
    full_gr       partition and compile every partition, no cache
    strided_dec   strided plan on an empty cache (templates plus at most 4 compiles)
    strided_gr    strided plan replayed from a warm cache
"""

from __future__ import annotations

import csv
import io
import statistics
import time
from dataclasses import dataclass

from qstream.cache import ChunkCache, canonical_fragment
from qstream.circuit import build_edge_list, lower_toffoli
from qstream.compiler import bounds_for_cache, compile_chunk
from qstream.errors import ConfigurationError
from qstream.generators import StriderConfig, cuccaro_adder, strided_plan
from qstream.partition import partition_stream

COLUMNS = ("bits", "stride", "beta", "repeats",
           "full_dec_mean", "full_dec_std", "full_gr_mean", "full_gr_std",
           "strided_dec_mean", "strided_dec_std", "strided_gr_mean", "strided_gr_std",
           "full_partitions", "unique_chunks", "references", "speedup")


@dataclass
class FullRun:
    dec_s: float
    gr_s: float
    partitions: int


def full_path(bits: int, stride: int) -> FullRun:
    t0 = time.perf_counter()
    dag = lower_toffoli(cuccaro_adder(bits, carry_out=False))
    edges = build_edge_list(dag)
    t1 = time.perf_counter()
    n = 0
    for part in partition_stream(edges, dag, bounds_for_cache(2 * stride + 1, 7 * stride)):
        canon, assignment = canonical_fragment(dag.fragment(part.node_ids))
        compile_chunk(canon, len(assignment))
        n += 1
    return FullRun(t1 - t0, time.perf_counter() - t1, n)


def strided_times(cfg: StriderConfig) -> tuple[float, float, object]:
    cache = ChunkCache()
    t0 = time.perf_counter()
    strided_plan(cfg, cache)
    t1 = time.perf_counter()
    plan = strided_plan(cfg, cache)
    t2 = time.perf_counter()
    if plan.compiled:
        raise AssertionError("warm strided plan recompiled a chunk")
    return t1 - t0, t2 - t1, plan


def _mean_std(xs):
    if not xs:
        return 0.0, 0.0
    return statistics.fmean(xs), statistics.stdev(xs) if len(xs) > 1 else 0.0


def bench_table1(strides, sizes, repeats: int = 5, full: bool = True) -> list[dict]:
    """One row per compatible (bits, stride); ``full=False`` skips the full path."""
    if repeats < 0:
        raise ConfigurationError("repeats must be >= 0")
    rows = []
    if repeats == 0:
        return rows
    for bits in sizes:
        for stride in strides:
            if stride > bits:
                continue
            cfg = StriderConfig(bits, stride, bits % stride)
            fd, fg, sd, sg = [], [], [], []
            parts = 0
            plan = None
            for _ in range(repeats):
                if full:
                    fr = full_path(bits, stride)
                    fd.append(fr.dec_s)
                    fg.append(fr.gr_s)
                    parts = fr.partitions
                cold, warm, plan = strided_times(cfg)
                sd.append(cold)
                sg.append(warm)
            row = {"bits": bits, "stride": stride, "beta": cfg.remainder_beta, "repeats": repeats}
            for name, xs in (("full_dec", fd), ("full_gr", fg),
                             ("strided_dec", sd), ("strided_gr", sg)):
                row[f"{name}_mean"], row[f"{name}_std"] = _mean_std(xs)
            row["full_partitions"] = parts
            row["unique_chunks"] = len(plan.unique_chunks)
            row["references"] = len(plan.chunk_keys)
            full_s = row["full_dec_mean"] + row["full_gr_mean"]
            row["speedup"] = full_s / row["strided_gr_mean"] if full and row["strided_gr_mean"] else 0.0
            rows.append(row)
    return rows


def to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (f"{v:.6g}" if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()


def to_markdown(rows: list[dict]) -> str:
    head = ("| bits | stride | Full Dec. (s) | Full Gr. (s) | Strided Dec. (s) "
            "| Strided Gr. (s) | speedup |")
    lines = [head, "|" + "---|" * 7]
    for r in rows:
        lines.append(
            f"| {r['bits']} | {r['stride']} "
            f"| {r['full_dec_mean']:.3f} ± {r['full_dec_std']:.3f} "
            f"| {r['full_gr_mean']:.3f} ± {r['full_gr_std']:.3f} "
            f"| {r['strided_dec_mean']:.4f} ± {r['strided_dec_std']:.4f} "
            f"| {r['strided_gr_mean']:.4f} ± {r['strided_gr_std']:.4f} "
            f"| {r['speedup']:.0f} |")
    return "\n".join(lines) + "\n"
