"""Smoke tests for the python module: import, core ops, a short closed loop."""

import sys
import tempfile
from pathlib import Path

import kdnsim


def test_topology_and_world():
    spec = kdnsim.TopologySpec()
    spec.node_count = 12
    topo = kdnsim.build_topology(spec, 5)
    assert len(topo.nodes) == 12
    assert kdnsim.is_connected(topo)

    again = kdnsim.build_topology(spec, 5)
    assert [l.capacity for l in topo.links] == [l.capacity for l in again.links]

    world = kdnsim.make_world(topo, [], 10.0, 5)
    assert world.clock == 0
    kdnsim.step(world)
    assert world.clock == 1
    assert all(q >= 0.0 for q in world.queue_len)
    assert all(0.0 <= c <= 1.0 for c in world.cpu_load)


def test_window_mean_matches_naive_oracle():
    spec = kdnsim.TopologySpec()
    spec.node_count = 3
    topo = kdnsim.build_topology(spec, 2)
    world = kdnsim.make_world(topo, [], 10.0, 2)

    pp = kdnsim.PreprocessConfig()
    pp.alpha = 1.0
    pp.delay_thresh_ms = 10.0
    pp.queue_thresh = 10.0
    collector = kdnsim.TelemetryCollector(pp)

    window = kdnsim.TelemetryWindow(4)
    kept = []
    for _ in range(5):
        snap = collector.collect(world)
        kept.append([(r.lam, r.delta, r.gamma, r.eta, r.epsilon) for r in snap.records])
        window.push(snap)
        kdnsim.step(world)

    graph = kdnsim.build_graph(window, world.topology, world.flows)
    for i, row in enumerate(graph.features):
        for f in range(5):
            naive = sum(k[i][f] for k in kept) / len(kept)
            assert abs(row[f] - naive) < 1e-12, (i, f, row[f], naive)


def test_short_closed_loop():
    cfg = kdnsim.default_stress_scenario()
    cfg.steps = 30
    result = kdnsim.run_scenario(cfg, out_dir="")
    assert result.trace_rows == 30


def test_short_run_is_deterministic():
    cfg = kdnsim.default_stress_scenario()
    cfg.steps = 60
    with tempfile.TemporaryDirectory() as tmp:
        a = kdnsim.run_scenario(cfg, out_dir=str(Path(tmp) / "a"))
        b = kdnsim.run_scenario(cfg, out_dir=str(Path(tmp) / "b"))
        trace_a = Path(a.bundle.trace_csv).read_bytes()
        trace_b = Path(b.bundle.trace_csv).read_bytes()
        assert trace_a == trace_b
        assert a.metrics["reproducibility_hash"] == b.metrics["reproducibility_hash"]
        header = trace_a.decode().splitlines()[0]
        assert header.startswith("tick,mean_delay_ms,throughput_pkts")


def test_config_roundtrip():
    cfg = kdnsim.default_stress_scenario()
    text = kdnsim.serialize_scenario(cfg)
    reparsed = kdnsim.parse_scenario(text)
    assert kdnsim.serialize_scenario(reparsed) == text
    assert kdnsim.config_fingerprint(cfg) == kdnsim.config_fingerprint(reparsed)


def main():
    tests = [
        test_topology_and_world,
        test_window_mean_matches_naive_oracle,
        test_short_closed_loop,
        test_short_run_is_deterministic,
        test_config_roundtrip,
    ]
    for test in tests:
        test()
        print(f"ok: {test.__name__}")
    print(f"{len(tests)} python smoke tests passed")


if __name__ == "__main__":
    sys.exit(main())
