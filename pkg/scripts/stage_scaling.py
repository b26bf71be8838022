"""Per-stage pipeline timings as circuit size grows.

Circuits are synthetic repeated blocks, so most partitions hit the cache and
the partitioner dominates.  Writes one CSV row per (gates, stage).
"""

import argparse
import csv
from pathlib import Path

from qstream.generators import synthetic_repetitive
from qstream.partition import ResourceBounds
from qstream.pipeline import PipelineConfig, run_pipeline, stage_rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="4000,8000,16000,32000,64000")
    ap.add_argument("--block-gates", type=int, default=20)
    ap.add_argument("--distinct", type=int, default=8)
    ap.add_argument("--qubits", type=int, default=6)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--out", default="results/stage_scaling.csv")
    args = ap.parse_args()
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    cfg = PipelineConfig(bounds=ResourceBounds(4, 7, 64), workers=args.workers)
    with open(out, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["gates", "stage", "seconds", "gates_per_sec"])
        for size in (int(s) for s in args.sizes.split(",")):
            dag = synthetic_repetitive(size // args.block_gates, args.block_gates,
                                       args.distinct, args.qubits, args.seed)
            m = run_pipeline(dag, cfg)
            for stage, sec, rate in stage_rows(m):
                w.writerow([len(dag), stage, f"{sec:.6f}", f"{rate:.0f}"])
            print(f"{len(dag):>7} gates  partition {m.gates_per_second['partition']:>10,.0f} g/s"
                  f"  total {m.total_s:.2f}s  hits {m.cache_hits}/{m.partition_count}")
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
