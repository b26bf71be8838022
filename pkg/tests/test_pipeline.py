import io
import json
import random
import threading
import time
from pathlib import Path

import jsonschema
import pytest

from qstream.cache import ChunkCache
from qstream.circuit import CircuitDag, lower_toffoli
from qstream.errors import StreamDesyncError
from qstream.generators import (StriderConfig, block_partitions, random_clifford_t,
                                strided_partitions, synthetic_repetitive)
from qstream.partition import ResourceBounds, quotient_edges
from qstream.pipeline import PipelineConfig, replay_speedup, run_pipeline, stage_report
from qstream.wire import resolve_stream
from qstream.oracle import process_equal

SCHEMA = json.loads((Path(__file__).parent.parent / "docs" / "schemas"
                     / "metrics.schema.json").read_text())


def test_empty_circuit():
    m = run_pipeline(CircuitDag(2))
    assert m.partition_count == 0 and m.frames == 1
    csv = stage_report(m, "csv").splitlines()
    assert csv[0] == "stage,seconds,gates_per_sec" and len(csv) == 5
    jsonschema.validate(json.loads(stage_report(m, "json")), SCHEMA)


def test_strided_adder_cold_then_warm():
    dag, parts = strided_partitions(StriderConfig(32 * 4, 4))
    cache = ChunkCache()
    cold = run_pipeline(dag, PipelineConfig(workers=2), partitions=parts, cache=cache)
    assert cold.cache_misses == 2 and cold.cache_hits == 62
    warm = run_pipeline(dag, PipelineConfig(workers=2), partitions=parts, cache=cache)
    assert warm.cache_hits == warm.partition_count == 64 and warm.compile_s == 0


def test_synthetic_hits():
    dag = synthetic_repetitive(100, 10, 1, 3, seed=1)
    m = run_pipeline(dag, partitions=block_partitions(dag, 10))
    assert m.cache_hits == 99
    dag = synthetic_repetitive(20, 10, 20, 3, seed=1)
    assert run_pipeline(dag, partitions=block_partitions(dag, 10)).cache_hits == 0


@pytest.mark.parametrize("workers", [1, 2, 4, 8])
def test_exactly_once_in_order(workers):
    rng = random.Random(workers)
    for _ in range(3):
        dag = random_clifford_t(rng, 5, 300)
        b = ResourceBounds(3, 3, 40, 64)
        m = run_pipeline(dag, PipelineConfig(bounds=b, workers=workers, queue_capacity=4))
        assert m.delivered == m.emitted == list(range(m.partition_count))
        assert sum(m.latency_histogram_us.values()) == m.partition_count


def test_stream_is_semantically_correct():
    rng = random.Random(9)
    dag = random_clifford_t(rng, 4, 60, max_nonclifford=10)
    buf = io.BytesIO()
    run_pipeline(dag, PipelineConfig(bounds=ResourceBounds(2, 3), workers=3), sink=buf)
    buf.seek(0)
    placements, _ = resolve_stream(buf)
    assert process_equal(dag, placements)


def test_backpressure_with_stalled_consumer():
    gate = threading.Event()
    dag = random_clifford_t(random.Random(4), 4, 400)
    cfg = PipelineConfig(bounds=ResourceBounds(1, 2, 5), queue_capacity=3, workers=2)
    seen = []

    def hook(frame):
        if not seen:
            gate.wait(5)
        seen.append(frame)

    result = {}
    t = threading.Thread(target=lambda: result.setdefault("m", run_pipeline(
        dag, cfg, consumer_hook=hook)))
    t.start()
    time.sleep(0.5)
    gate.set()
    t.join()
    m = result["m"]
    assert m.queue_high_watermark == cfg.queue_capacity
    assert m.delivered == m.emitted


def test_consumer_detects_corruption():
    dag = random_clifford_t(random.Random(4), 3, 50)

    def corrupt(frame):
        raise StreamDesyncError("injected")

    with pytest.raises(StreamDesyncError):
        run_pipeline(dag, consumer_hook=corrupt)


def test_replay_warm_not_slower(tmp_path):
    dag, parts = strided_partitions(StriderConfig(16 * 4, 4))
    r = replay_speedup(dag, PipelineConfig(cache_dir=tmp_path), partitions=parts)
    assert r["warm"].cache_misses == 0 and r["cold"].cache_misses == 2
    assert r["warm_s"] <= r["cold_s"]


def test_report_formats():
    dag = lower_toffoli(synthetic_repetitive(5, 10, 2, 3, seed=2))
    m = run_pipeline(dag)
    text = stage_report(m)
    for stage in ("insertion", "partition", "compile", "extraction"):
        assert stage in text
    jsonschema.validate(json.loads(stage_report(m, "json")), SCHEMA)
    with pytest.raises(ValueError):
        stage_report(m, "xml")
