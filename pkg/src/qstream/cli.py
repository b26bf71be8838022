"""``qstream`` command line.

Exit codes: 0 success, 1 domain error (bad circuit, failed verification,
corrupt stream), 2 usage error.  ``-`` reads stdin or writes stdout.
"""

from __future__ import annotations

import argparse
import difflib
import json
import logging
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path

from qstream import __version__

log = logging.getLogger("qstream")

EXIT_OK, EXIT_DOMAIN, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass
class GlobalConfig:
    cache_dir: str | None = None
    log_level: str = "WARNING"
    output_format: str = "text"
    seed: int = 0


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        choices = []
        for action in self._actions:
            if isinstance(action, argparse._SubParsersAction):
                choices = list(action.choices)
        if "invalid choice" in message and choices:
            bad = message.split("'")[1] if "'" in message else ""
            near = difflib.get_close_matches(bad, choices, n=1)
            if near:
                message += f" (did you mean '{near[0]}'?)"
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# -- io helpers ---------------------------------------------------------------

def _read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    return Path(path).read_text()


def _write_text(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _cache(g: GlobalConfig, required: bool = False):
    from qstream.cache import ChunkCache
    if g.cache_dir is None and required:
        raise UsageError("no cache directory: pass --cache-dir or set QSTREAM_CACHE_DIR")
    return ChunkCache(g.cache_dir)


def _load_circuit(path: str, table=None, lower: bool = False):
    from qstream.circuit import lower_toffoli
    from qstream.qasm import parse_qasm
    dag = parse_qasm(_read_text(path), table)
    return lower_toffoli(dag) if lower else dag


# -- subcommands ----------------------------------------------------------------

def cmd_parse(args, g):
    from qstream.circuit import Tag
    from qstream.decomp import DecompositionTable
    table = DecompositionTable()
    dag = _load_circuit(args.circuit, table)
    counts = {t.value: dag.count(t) for t in Tag if dag.count(t)}
    _write_text(args.out, _dump({"num_qubits": dag.num_qubits, "gates": len(dag),
                                 "t_count": dag.t_count(table), "counts": counts}))


def cmd_emit(args, g):
    from qstream.decomp import DecompositionTable
    from qstream.qasm import emit_qasm
    table = DecompositionTable()
    dag = _load_circuit(args.circuit, table, lower=args.lower)
    _write_text(args.out, emit_qasm(dag, table=table))


def _bounds(args):
    from qstream.partition import ResourceBounds
    return ResourceBounds(max_t_count=args.max_t, max_qubits=args.max_qubits,
                          max_gates=args.max_gates, window_size=args.window)


def cmd_partition(args, g):
    from qstream.circuit import build_edge_list
    from qstream.decomp import DecompositionTable
    from qstream.partition import partition_stream
    table = DecompositionTable()
    dag = _load_circuit(args.circuit, table, lower=True)
    t0 = time.perf_counter()
    stats: dict = {}
    parts = [p.to_json() for p in
             partition_stream(build_edge_list(dag), dag, _bounds(args), table, stats)]
    elapsed = time.perf_counter() - t0
    if args.out and args.out.endswith(".jsonl"):
        _write_text(args.out, "".join(json.dumps(p) + "\n" for p in parts))
        return
    _write_text(args.out, _dump({"num_qubits": dag.num_qubits, "gates": len(dag),
                                 "partition_count": len(parts), "partitions": parts,
                                 "windows": stats["windows"],
                                 "timings": {"partition_s": round(elapsed, 6)}}))


def _pipeline_config(args, g, bounds):
    from qstream.pipeline import PipelineConfig
    return PipelineConfig(bounds=bounds, workers=args.workers, queue_capacity=args.queue,
                          consumer_rate=args.rate, cache_dir=g.cache_dir,
                          strict=getattr(args, "strict", False))


def _run_to_sink(args, g, out_path, cfg):
    from qstream.pipeline import run_pipeline
    cache = _cache(g)
    try:
        dag = _load_circuit(args.circuit, cache.table)
        if out_path is None:
            return run_pipeline(dag, cfg, cache=cache)
        if out_path == "-":
            return run_pipeline(dag, cfg, cache=cache, sink=sys.stdout.buffer)
        with open(out_path, "wb") as sink:
            return run_pipeline(dag, cfg, cache=cache, sink=sink)
    finally:
        cache.close()


def cmd_compile(args, g):
    from qstream.compiler import bounds_for_cache
    args.queue, args.rate = 64, 1e12
    cfg = _pipeline_config(args, g, bounds_for_cache(args.max_n, args.max_k, args.max_gates,
                                                     args.window))
    m = _run_to_sink(args, g, args.out, cfg)
    out = sys.stderr if args.out == "-" else sys.stdout
    out.write(_dump(m.to_json()))


def cmd_stream(args, g):
    from qstream.compiler import bounds_for_cache
    from qstream.pipeline import stage_report
    cfg = _pipeline_config(args, g, bounds_for_cache(args.max_n, args.max_k, args.max_gates,
                                                     args.window))
    m = _run_to_sink(args, g, args.frames, cfg)
    if args.metrics:
        Path(args.metrics).write_text(stage_report(m, "json") + "\n")
    out = sys.stderr if args.frames == "-" else sys.stdout
    out.write(stage_report(m, g.output_format))


def cmd_verify(args, g):
    from qstream.oracle import process_check
    from qstream.wire import resolve_stream
    cache = _cache(g)
    try:
        dag = _load_circuit(args.circuit, cache.table, lower=True)
        src = sys.stdin.buffer if args.chunks == "-" else open(args.chunks, "rb")
        with src:
            placements, _ = resolve_stream(src)
        fid = process_check(dag, placements, table=cache.table)
    finally:
        cache.close()
    ok = fid >= 1 - args.tol
    _write_text(None, _dump({"pass": ok, "fidelity": fid, "chunks": len(placements),
                             "tol": args.tol}))
    return EXIT_OK if ok else EXIT_DOMAIN


def cmd_gen_adder(args, g):
    from qstream.generators import StriderConfig, cuccaro_adder, strided_plan
    from qstream.qasm import emit_qasm
    if args.stride is None:
        _write_text(args.out, emit_qasm(cuccaro_adder(args.bits, args.carry_out)))
        return
    cfg = StriderConfig(args.bits, args.stride, args.bits % args.stride, args.carry_out)
    cache = _cache(g)
    try:
        plan = strided_plan(cfg, cache)
    finally:
        cache.close()
    _write_text(args.out, _dump({
        "bits": cfg.bits, "stride": cfg.stride_alpha, "beta": cfg.remainder_beta,
        "unique_chunks": sorted(k.hex() for k in plan.unique_chunks),
        "references": [{"key": k.hex(), "assignment": a} for k, a in plan.chunk_keys],
        "glue": [[kind.tag.value, list(qs)] for kind, qs in plan.glue],
    }))


def cmd_gen_synthetic(args, g):
    from qstream.generators import synthetic_repetitive
    from qstream.qasm import emit_qasm
    seed = g.seed if args.sub_seed is None else args.sub_seed
    dag = synthetic_repetitive(args.blocks, args.block_gates, args.distinct, args.qubits, seed)
    _write_text(args.out, emit_qasm(dag))


def cmd_bench_table1(args, g):
    from qstream.bench import bench_table1, to_csv, to_markdown
    rows = bench_table1(_ints(args.strides), _ints(args.sizes), args.repeats,
                        full=not args.strided_only)
    text = to_markdown(rows) if args.markdown else to_csv(rows)
    _write_text(args.out, text)
    if args.out not in (None, "-"):
        sys.stdout.write(to_markdown(rows))


def cmd_cache(args, g):
    cache = _cache(g, required=True)
    try:
        if args.action == "stats":
            _write_text(None, _dump(cache.stats()))
        elif args.action == "clear":
            n = len(cache)
            cache.clear()
            _write_text(None, _dump({"cleared": n}))
        else:
            _write_text(args.out, _dump({"entries": cache.export()}))
    finally:
        cache.close()


def cmd_tableau_dump(args, g):
    from qstream.errors import CompileError
    from qstream.tableau import Tableau, dump
    dag = _load_circuit(args.circuit)
    t = Tableau.plus_state(dag.num_qubits)
    for q in range(dag.num_qubits):
        t.h(q)
    for node in dag.nodes:
        if not node.kind.is_clifford:
            raise CompileError(f"gate {node.id} ({node.kind.tag.value}) is not Clifford")
        t.apply_gate(node.kind, node.qubits)
    _write_text(args.out, dump(t))


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"expected comma separated integers, got {text!r}") from None


# -- parser ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="qstream", description="Partition, cache, compress and stream "
                "Clifford+T circuits as graph-state chunks.")
    p.add_argument("--version", action="version", version=f"qstream {__version__}")
    p.add_argument("--cache-dir", default=os.environ.get("QSTREAM_CACHE_DIR"),
                   help="chunk cache directory (default: $QSTREAM_CACHE_DIR, else in-memory)")
    p.add_argument("--log-level", default="WARNING",
                   choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    p.add_argument("--format", dest="output_format", default="text",
                   choices=["json", "csv", "text"], help="report format for stream")
    p.add_argument("--seed", type=int, default=0)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def circuit_cmd(name, fn, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("circuit", help="OpenQASM file or - for stdin")
        sp.set_defaults(fn=fn)
        return sp

    sp = circuit_cmd("parse", cmd_parse, "summarise a circuit")
    sp.add_argument("-o", "--out")
    sp = circuit_cmd("emit", cmd_emit, "re-emit canonical OpenQASM")
    sp.add_argument("--lower", action="store_true", help="lower Toffolis to Clifford+T")
    sp.add_argument("-o", "--out")

    def bound_args(sp, n_flag, k_flag, n_default, k_default):
        sp.add_argument(n_flag, type=int, default=n_default)
        sp.add_argument(k_flag, type=int, default=k_default)
        sp.add_argument("--max-gates", type=int, default=10_000)
        sp.add_argument("--window", type=int, default=65_536)

    sp = circuit_cmd("partition", cmd_partition, "partition a circuit, JSON on stdout")
    bound_args(sp, "--max-qubits", "--max-t", 4, 7)
    sp.add_argument("-o", "--out")
    sp = circuit_cmd("compile", cmd_compile, "compile to a frame stream")
    bound_args(sp, "--max-n", "--max-k", 4, 7)
    sp.add_argument("--out", required=True, help="frame stream file or -")
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--strict", action="store_true", help="reject Rz keys without sequences")
    sp = circuit_cmd("stream", cmd_stream, "run the streaming pipeline")
    bound_args(sp, "--max-n", "--max-k", 4, 7)
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--queue", type=int, default=64)
    sp.add_argument("--rate", type=float, default=1e9, help="consumer gates/second")
    sp.add_argument("--metrics", help="write metrics JSON here")
    sp.add_argument("--frames", help="write the accepted frame stream here (- for stdout)")
    sp = circuit_cmd("verify", cmd_verify, "check a frame stream against its circuit")
    sp.add_argument("--chunks", required=True)
    sp.add_argument("--tol", type=float, default=1e-9)

    gen = sub.add_parser("gen", help="circuit generators").add_subparsers(
        dest="generator", required=True, parser_class=_Parser)
    sp = gen.add_parser("adder", help="Cuccaro adder QASM, or a strided plan with --stride")
    sp.add_argument("--bits", type=int, required=True)
    sp.add_argument("--stride", type=int)
    sp.add_argument("--carry-out", action=argparse.BooleanOptionalAction, default=True)
    sp.add_argument("-o", "--out")
    sp.set_defaults(fn=cmd_gen_adder)
    sp = gen.add_parser("synthetic", help="repeated random blocks")
    sp.add_argument("--blocks", type=int, required=True)
    sp.add_argument("--block-gates", type=int, default=20)
    sp.add_argument("--distinct", type=int, default=1)
    sp.add_argument("--qubits", type=int, default=4)
    sp.add_argument("--seed", type=int, default=None, dest="sub_seed")
    sp.add_argument("-o", "--out")
    sp.set_defaults(fn=cmd_gen_synthetic)

    bench = sub.add_parser("bench", help="benchmarks").add_subparsers(
        dest="bench", required=True, parser_class=_Parser)
    sp = bench.add_parser("table1", help="full versus strided adder construction")
    sp.add_argument("--sizes", default="128,256,512,1024,2048")
    sp.add_argument("--strides", default="64,128")
    sp.add_argument("--repeats", type=int, default=5)
    sp.add_argument("--strided-only", action="store_true")
    sp.add_argument("--markdown", action="store_true")
    sp.add_argument("--out")
    sp.set_defaults(fn=cmd_bench_table1)

    sp = sub.add_parser("cache", help="cache administration")
    sp.add_argument("action", choices=["stats", "clear", "export"])
    sp.add_argument("-o", "--out")
    sp.set_defaults(fn=cmd_cache)

    tab = sub.add_parser("tableau", help="stabilizer tableau tools").add_subparsers(
        dest="tableau", required=True, parser_class=_Parser)
    sp = tab.add_parser("dump", help="tableau rows of a Clifford circuit applied to |0..0>")
    sp.add_argument("circuit")
    sp.add_argument("-o", "--out")
    sp.set_defaults(fn=cmd_tableau_dump)
    return p


def main(argv=None) -> int:
    from qstream.errors import QStreamError
    parser = build_parser()
    args = parser.parse_args(argv)
    g = GlobalConfig(args.cache_dir, args.log_level, args.output_format, args.seed)
    logging.basicConfig(level=g.log_level, format="%(levelname)s %(name)s: %(message)s")
    try:
        rc = args.fn(args, g)
    except UsageError as exc:
        print(json.dumps({"error": "usage", "message": str(exc)}), file=sys.stderr)
        return EXIT_USAGE
    except (QStreamError, ValueError, OSError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return EXIT_DOMAIN
    except BrokenPipeError:
        return EXIT_OK
    return EXIT_OK if rc is None else rc


if __name__ == "__main__":
    sys.exit(main())
