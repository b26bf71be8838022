import json
import subprocess
import sys
from pathlib import Path

import jsonschema
import pytest

from qstream.cli import main

ROOT = Path(__file__).resolve().parent.parent
SCHEMAS = ROOT / "docs" / "schemas"


def run(*args, stdin=None, env=None):
    return subprocess.run([sys.executable, "-m", "qstream.cli", *args], input=stdin,
                          capture_output=True, text=True, env=env)


def test_help_and_version(capsys):
    with pytest.raises(SystemExit) as e:
        main(["--help"])
    assert e.value.code == 0 and "usage" in capsys.readouterr().out
    with pytest.raises(SystemExit) as e:
        main(["--version"])
    assert e.value.code == 0


def test_unknown_command_is_usage_error(capsys):
    with pytest.raises(SystemExit) as e:
        main(["parition"])
    assert e.value.code == 2
    assert "did you mean 'partition'" in capsys.readouterr().err


def test_gen_adder_into_partition():
    adder = run("gen", "adder", "--bits", "4")
    assert adder.returncode == 0
    out = run("partition", "-", "--max-t", "14", stdin=adder.stdout)
    assert out.returncode == 0, out.stderr
    doc = json.loads(out.stdout)
    jsonschema.validate(doc, json.loads((SCHEMAS / "partition.schema.json").read_text()))
    assert sum(len(p["node_ids"]) for p in doc["partitions"]) == doc["gates"]
    again = json.loads(run("partition", "-", "--max-t", "14", stdin=adder.stdout).stdout)
    doc.pop("timings"), again.pop("timings")
    assert doc == again


def test_compile_verify_and_cache(tmp_path):
    qasm = tmp_path / "a.qasm"
    qasm.write_text(run("gen", "adder", "--bits", "2").stdout)
    cache = tmp_path / "cache"
    chunks = tmp_path / "a.bin"
    r = run("--cache-dir", str(cache), "compile", str(qasm), "--max-n", "4", "--max-k", "7",
            "--out", str(chunks))
    assert r.returncode == 0, r.stderr
    r = run("--cache-dir", str(cache), "verify", str(qasm), "--chunks", str(chunks))
    assert r.returncode == 0 and json.loads(r.stdout)["pass"]
    stats = json.loads(run("--cache-dir", str(cache), "cache", "stats").stdout)
    assert stats["entries"] > 0
    exported = json.loads(run("--cache-dir", str(cache), "cache", "export").stdout)
    assert len(exported["entries"]) == stats["entries"]
    data = bytearray(chunks.read_bytes())
    data[30] ^= 1
    chunks.write_bytes(bytes(data))
    r = run("--cache-dir", str(cache), "verify", str(qasm), "--chunks", str(chunks))
    assert r.returncode == 1 and "WireFormatError" in r.stderr
    assert json.loads(run("--cache-dir", str(cache), "cache", "clear").stdout)["cleared"] > 0


def test_verify_detects_wrong_circuit(tmp_path):
    a = tmp_path / "a.qasm"
    b = tmp_path / "b.qasm"
    a.write_text("OPENQASM 3.0; qubit[2] q; h q[0]; t q[0]; cx q[0], q[1];")
    b.write_text("OPENQASM 3.0; qubit[2] q; h q[0]; tdg q[0]; cx q[0], q[1];")
    assert run("compile", str(a), "--out", str(tmp_path / "a.bin")).returncode == 0
    r = run("verify", str(b), "--chunks", str(tmp_path / "a.bin"))
    assert r.returncode == 1 and not json.loads(r.stdout)["pass"]


def test_stream_metrics_and_env_cache(tmp_path):
    qasm = tmp_path / "s.qasm"
    r = run("--seed", "3", "gen", "synthetic", "--blocks", "10", "--distinct", "2")
    qasm.write_text(r.stdout)
    metrics = tmp_path / "m.json"
    env = {"QSTREAM_CACHE_DIR": str(tmp_path / "envcache"), "PATH": "/usr/bin:/bin"}
    r = run("--format", "csv", "stream", str(qasm), "--workers", "2", "--metrics", str(metrics),
            env=env)
    assert r.returncode == 0, r.stderr
    assert r.stdout.startswith("stage,seconds,gates_per_sec")
    jsonschema.validate(json.loads(metrics.read_text()),
                        json.loads((SCHEMAS / "metrics.schema.json").read_text()))
    assert (tmp_path / "envcache" / "entries.log").exists()


def test_synthetic_seed_determinism():
    a = run("--seed", "7", "gen", "synthetic", "--blocks", "5", "--distinct", "2").stdout
    b = run("--seed", "7", "gen", "synthetic", "--blocks", "5", "--distinct", "2").stdout
    c = run("--seed", "8", "gen", "synthetic", "--blocks", "5", "--distinct", "2").stdout
    assert a == b != c


def test_domain_errors_exit_1(tmp_path):
    bad = tmp_path / "bad.qasm"
    bad.write_text("qubit[1] q; badgate q[0];")
    r = run("parse", str(bad))
    assert r.returncode == 1 and "badgate" in r.stderr
    assert run("partition", str(tmp_path / "missing.qasm")).returncode == 1
    assert run("cache", "stats", env={"PATH": "/usr/bin:/bin"}).returncode == 2


def test_emit_parse_tableau(tmp_path):
    q = tmp_path / "c.qasm"
    q.write_text("OPENQASM 3.0; qubit[3] q; ccx q[0], q[1], q[2]; rz(0.3) q[0];")
    low = run("emit", str(q), "--lower")
    assert low.returncode == 0 and low.stdout.count("\n") == 2 + 16
    summary = json.loads(run("parse", str(q)).stdout)
    assert summary["counts"] == {"ccx": 1, "rz": 1}
    r = run("tableau", "dump", "-", stdin="OPENQASM 3.0; qubit[2] q; h q[0]; cx q[0], q[1];")
    assert r.stdout == "+XX\n+ZZ\n"
    assert run("tableau", "dump", str(q)).returncode == 1


def test_bench_table1_cli(tmp_path):
    out = tmp_path / "t.csv"
    r = run("bench", "table1", "--sizes", "8", "--strides", "4", "--repeats", "1",
            "--out", str(out))
    assert r.returncode == 0, r.stderr
    assert out.read_text().startswith("bits,stride")


def test_gen_adder_stride_plan():
    doc = json.loads(run("gen", "adder", "--bits", "16", "--stride", "4").stdout)
    assert len(doc["unique_chunks"]) == 2 and len(doc["references"]) == 8


def test_partition_jsonl_output(tmp_path):
    q = tmp_path / "c.qasm"
    q.write_text(run("gen", "adder", "--bits", "3").stdout)
    out = tmp_path / "p.jsonl"
    assert run("partition", str(q), "--max-t", "14", "--out", str(out)).returncode == 0
    rows = [json.loads(line) for line in out.read_text().splitlines()]
    assert [r["id"] for r in rows] == list(range(len(rows)))
    assert sum(len(r["node_ids"]) for r in rows) == 17 * 2 * 3 + 1
