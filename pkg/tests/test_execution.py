import time

import numpy as np
import pytest

from portarng.distributions import fill_uniform_unit, range_transform
from portarng.engine import EngineKind, seed_engine
from portarng.errors import (
    AllocationFailure,
    ConfigError,
    KernelPanic,
    PendingWrites,
    UnknownBuffer,
    UnknownEvent,
)
from portarng.execution import (
    AccessMode,
    Parallel,
    Serial,
    TaskGraph,
    backend_label,
    parse_backend,
)
from portarng.rngburn import affine_kernel, uniform_generate_kernel

R = AccessMode.READ
W = AccessMode.WRITE
RW = AccessMode.READ_WRITE


def fill_kernel(buf_id, value):
    def kernel(views, start, stop):
        views[buf_id][start:stop] = value

    return kernel


def add_kernel(dst_id, src_id, scale=1.0):
    def kernel(views, start, stop):
        views[dst_id][start:stop] += views[src_id][start:stop] * scale

    return kernel


def scale_kernel(buf_id, factor):
    def kernel(views, start, stop):
        views[buf_id][start:stop] *= factor

    return kernel


# -- buffers ------------------------------------------------------------------


def test_create_buffer_empty_and_unique_ids():
    g = TaskGraph()
    a = g.create_buffer(0)
    b = g.create_buffer(8)
    assert a.length == 0
    assert a.id != b.id
    assert np.array_equal(g.copy_to_host(b), np.zeros(8, dtype=np.float32))


def test_arena_cap_arithmetic():
    small = TaskGraph(arena_bytes=256 * 1024 * 1024)
    with pytest.raises(AllocationFailure):
        small.create_buffer(10**8, "f32")  # 4e8 bytes > 256 MiB
    big = TaskGraph(arena_bytes=2 * 1024**3)
    big.create_buffer(10**8, "f32")  # 4e8 bytes fits the 2 GiB default cap


def test_arena_env_override(monkeypatch):
    monkeypatch.setenv("RNGBURN_ARENA_BYTES", "1024")
    g = TaskGraph()
    assert g.arena_bytes == 1024
    with pytest.raises(AllocationFailure):
        g.create_buffer(1024, "f32")


def test_unknown_buffer_rejected():
    g1, g2 = TaskGraph(), TaskGraph()
    foreign = g2.create_buffer(4)
    with pytest.raises(UnknownBuffer):
        g1.submit_with_accessors(fill_kernel(foreign.id, 1.0), [(foreign, W)])


# -- accessor-driven edges ------------------------------------------------------


def test_raw_edge_generate_then_transform():
    g = TaskGraph()
    a = g.create_buffer(16)
    e1 = g.submit_with_accessors(fill_kernel(a.id, 0.5), [(a, RW)])
    e2 = g.submit_with_accessors(scale_kernel(a.id, 2.0), [(a, RW)])
    assert (e1.task_id, e2.task_id) in g.edges


def test_disjoint_writers_have_no_edge():
    g = TaskGraph()
    a, b = g.create_buffer(8), g.create_buffer(8)
    g.submit_with_accessors(fill_kernel(a.id, 1.0), [(a, W)])
    g.submit_with_accessors(fill_kernel(b.id, 2.0), [(b, W)])
    assert not g.edges


def test_read_write_chain_is_linear():
    g = TaskGraph()
    a = g.create_buffer(8)
    events = [g.submit_with_accessors(scale_kernel(a.id, 2.0), [(a, RW)]) for _ in range(3)]
    ids = [e.task_id for e in events]
    assert (ids[0], ids[1]) in g.edges and (ids[1], ids[2]) in g.edges
    assert (ids[0], ids[2]) not in g.edges  # transitive edge not duplicated


def test_war_and_waw_edges():
    g = TaskGraph()
    a, out = g.create_buffer(8), g.create_buffer(8)
    w0 = g.submit_with_accessors(fill_kernel(a.id, 1.0), [(a, W)])
    r1 = g.submit_with_accessors(add_kernel(out.id, a.id), [(out, RW), (a, R)])
    w2 = g.submit_with_accessors(fill_kernel(a.id, 3.0), [(a, W)])
    assert (w0.task_id, r1.task_id) in g.edges  # RAW
    assert (r1.task_id, w2.task_id) in g.edges  # WAR
    assert (w0.task_id, w2.task_id) in g.edges  # WAW


def test_duplicate_accessor_rejected():
    g = TaskGraph()
    a = g.create_buffer(4)
    with pytest.raises(UnknownBuffer):
        g.submit_with_accessors(fill_kernel(a.id, 1.0), [(a, R), (a, W)])


# -- event-driven edges ----------------------------------------------------------


def test_event_submission_roots_and_chain():
    g = TaskGraph()
    a = g.create_buffer(8)
    e1 = g.submit_with_events(fill_kernel(a.id, 1.0), [a], deps=[])
    e2 = g.submit_with_events(scale_kernel(a.id, 2.0), [a], deps=[e1])
    assert (e1.task_id, e2.task_id) in g.edges
    g.run(Serial())
    assert np.all(g.copy_to_host(a) == 2.0)


def test_foreign_event_rejected():
    g1, g2 = TaskGraph(), TaskGraph()
    a = g1.create_buffer(4)
    b = g2.create_buffer(4)
    ev = g2.submit_with_events(fill_kernel(b.id, 1.0), [b], deps=[])
    with pytest.raises(UnknownEvent):
        g1.submit_with_events(fill_kernel(a.id, 1.0), [a], deps=[ev])


def test_missing_dependency_race_differs_from_serial_oracle():
    # the USM hazard: omit the generate->transform edge and delay the
    # generator; the misordered result no longer matches the serial oracle
    def build(with_dep, delay):
        g = TaskGraph()
        a = g.create_buffer(64)

        def slow_fill(views, start, stop):
            if delay:
                time.sleep(0.05)
            views[a.id][start:stop] = 1.0

        e1 = g.submit_with_events(slow_fill, [a], deps=[], splittable=False)
        g.submit_with_events(scale_kernel(a.id, 2.0), [a], deps=[e1] if with_dep else [], splittable=False)
        return g, a

    g, a = build(with_dep=True, delay=False)
    g.run(Serial())
    oracle = g.copy_to_host(a)
    assert np.all(oracle == 2.0)

    g, a = build(with_dep=True, delay=True)
    g.run(Parallel(4))
    assert np.array_equal(g.copy_to_host(a), oracle)

    g, a = build(with_dep=False, delay=True)
    g.run(Parallel(4))
    assert np.all(g.copy_to_host(a) == 1.0)  # transform ran first: race manifest


# -- run ---------------------------------------------------------------------------


def test_empty_graph_run():
    report = TaskGraph().run(Serial())
    assert report.tasks == []


def test_generate_transform_chain_serial_vs_parallel_bitwise():
    def run(backend):
        g = TaskGraph()
        buf = g.create_buffer(100003)
        state = seed_engine(EngineKind.PHILOX4X32X10, 42)
        g.submit_with_accessors(uniform_generate_kernel(state, buf.id, "fp32"), [(buf, RW)])
        g.submit_with_accessors(affine_kernel(buf.id, -1.0, 1.0), [(buf, RW)])
        g.run(backend)
        return g.copy_to_host(buf)

    serial = run(Serial())
    for workers in (2, 4, 8):
        assert np.array_equal(serial, run(Parallel(workers)))


def _random_graph(rng, tasks=None):
    """Random accessor-declared DAG over same-length buffers.

    Kernels are elementwise (writes couple in the reads' original values), so
    chunked parallel execution must reproduce serial results bitwise.
    """
    g = TaskGraph()
    length = int(rng.integers(1, 600))
    buffers = [g.create_buffer(length) for _ in range(int(rng.integers(2, 5)))]
    n_tasks = tasks if tasks is not None else int(rng.integers(1, 21))
    for _ in range(n_tasks):
        k = int(rng.integers(1, min(3, len(buffers)) + 1))
        chosen = rng.choice(len(buffers), size=k, replace=False)
        modes = [AccessMode(rng.choice(["read", "write", "read_write"])) for _ in chosen]
        if not any(m in (W, RW) for m in modes):
            modes[0] = RW
        coef = float(rng.uniform(0.5, 1.5))
        bias = float(rng.uniform(-1.0, 1.0))
        handles = [buffers[int(i)] for i in chosen]

        def kernel(views, start, stop, handles=handles, modes=modes, coef=coef, bias=bias):
            reads = [views[h.id][start:stop].copy() for h, m in zip(handles, modes) if m in (R, RW)]
            for h, m in zip(handles, modes):
                if m in (W, RW):
                    seg = views[h.id][start:stop]
                    seg *= coef
                    seg += bias
                    for r in reads:
                        seg += r

        g.submit_with_accessors(kernel, list(zip(handles, modes)))
    return g, buffers


def test_random_graphs_parallel_equals_serial():
    rng = np.random.default_rng(11)
    for _ in range(12):
        seed = int(rng.integers(0, 2**31))
        results = []
        backends = (Serial(), Parallel(2, chunk=97), Parallel(4), Parallel(8, chunk=33))
        for backend in backends:
            graph_rng = np.random.default_rng(seed)
            g, buffers = _random_graph(graph_rng)
            g.run(backend)
            results.append([g.copy_to_host(b) for b in buffers])
        for other in results[1:]:
            for a, b in zip(results[0], other):
                assert np.array_equal(a, b)


def test_start_order_is_topological():
    rng = np.random.default_rng(29)
    for _ in range(10):
        g, _ = _random_graph(rng, tasks=15)
        report = g.run(Parallel(4, chunk=128))
        times = {t.task_id: t for t in report.tasks}
        for u, v in g.edges:
            assert times[v].start_ns >= times[u].end_ns


def test_chunk_coverage_exactly_once():
    for backend in (Serial(), Parallel(3, chunk=7), Parallel(8)):
        g = TaskGraph()
        a = g.create_buffer(1001)

        def probe(views, start, stop):
            views[a.id][start:stop] += 1.0

        g.submit_with_accessors(probe, [(a, RW)])
        g.run(backend)
        assert np.all(g.copy_to_host(a) == 1.0)


def test_unsplittable_kernel_runs_single_chunk():
    g = TaskGraph()
    a = g.create_buffer(10000)
    calls = []

    def kernel(views, start, stop):
        calls.append((start, stop))
        views[a.id][start:stop] = 1.0

    g.submit_with_accessors(kernel, [(a, RW)], splittable=False)
    g.run(Parallel(8))
    assert calls == [(0, 10000)]


def test_kernel_panic_carries_task_id():
    def boom(views, start, stop):
        raise RuntimeError("exploded")

    for backend in (Serial(), Parallel(2)):
        g = TaskGraph()
        a = g.create_buffer(16)
        ev = g.submit_with_accessors(boom, [(a, RW)])
        with pytest.raises(KernelPanic, match=f"task {ev.task_id}"):
            g.run(backend)


def test_event_completion_monotonic():
    g = TaskGraph()
    a = g.create_buffer(8)
    e1 = g.submit_with_accessors(fill_kernel(a.id, 1.0), [(a, RW)])
    assert not e1.completed
    g.run(Serial())
    assert e1.completed
    g.submit_with_accessors(scale_kernel(a.id, 2.0), [(a, RW)])
    g.run(Parallel(2))
    assert e1.completed  # never reverts


def test_copy_to_host_pending_writes():
    g = TaskGraph()
    a = g.create_buffer(16)
    g.submit_with_accessors(fill_kernel(a.id, 1.0), [(a, W)])
    with pytest.raises(PendingWrites):
        g.copy_to_host(a)
    g.run(Serial())
    assert np.all(g.copy_to_host(a) == 1.0)


def test_copy_to_host_matches_host_side_distributions():
    g = TaskGraph()
    buf = g.create_buffer(16)
    state = seed_engine(EngineKind.PHILOX4X32X10, 123)
    g.submit_with_accessors(uniform_generate_kernel(state, buf.id, "fp32"), [(buf, RW)])
    g.submit_with_accessors(affine_kernel(buf.id, -1.0, 1.0), [(buf, RW)])
    g.run(Serial())
    device = g.copy_to_host(buf)
    _, block = fill_uniform_unit(seed_engine(EngineKind.PHILOX4X32X10, 123), 16)
    host = range_transform(block, -1.0, 1.0).values
    assert np.array_equal(device, host)
    assert np.all(device >= -1.0) and np.all(device < 1.0)


def test_edges_always_point_forward():
    rng = np.random.default_rng(3)
    g, _ = _random_graph(rng, tasks=20)
    assert all(u < v for u, v in g.edges)


def test_backend_parsing():
    assert parse_backend("serial") == Serial()
    assert parse_backend("parallel:8") == Parallel(8)
    assert backend_label(Parallel(3)) == "parallel:3"
    with pytest.raises(ConfigError):
        parse_backend("gpu")
    with pytest.raises(ConfigError):
        Parallel(0)
