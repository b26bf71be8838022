"""Framed stream size of the strided adder against its OpenQASM text."""

import argparse
import io

from qstream.generators import StriderConfig, strided_partitions
from qstream.pipeline import PipelineConfig, run_pipeline
from qstream.qasm import emit_qasm
from qstream.wire import compression_report


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--bits", type=int, default=2048)
    ap.add_argument("--stride", type=int, default=64)
    args = ap.parse_args()
    cfg = StriderConfig(args.bits, args.stride, args.bits % args.stride)
    dag, parts = strided_partitions(cfg)
    sink = io.BytesIO()
    m = run_pipeline(dag, PipelineConfig(workers=2), partitions=parts, sink=sink)
    qasm = len(emit_qasm(dag).encode())
    rep = compression_report(qasm, len(sink.getvalue()), len(dag))
    print(f"{args.bits}-bit adder, stride {args.stride}: {len(dag)} gates, "
          f"{m.partition_count} partitions, {m.cache_misses} compiled")
    print(f"qasm {rep['qasm_bytes']:,} B  framed {rep['framed_bytes']:,} B  "
          f"ratio {rep['ratio']:.1f}  gates/KiB {rep['gates_per_kb']:.0f}")


if __name__ == "__main__":
    main()
