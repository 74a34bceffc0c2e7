"""Acceptance gate: one test per criterion, each printing a pass/fail line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines and timings. The heavyweight criteria (burner sweep, full-scale
calorimeter scenarios) run at their full stated sizes.
"""

import time
from contextlib import contextmanager

import numpy as np
import pytest

from portarng.calosim import (
    ScenarioKind,
    _synth_events,
    simulate_event,
    synth_geometry,
    synth_params,
)
from portarng.distributions import Uniform, fill_gaussian, fill_uniform_unit
from portarng.engine import EngineKind, generate_words, philox_block, seed_engine, skip_ahead
from portarng.execution import Parallel, Serial
from portarng.metrics import RunRecord, perf_portability
from portarng.rngburn import BurnConfig, burn_once, compare, read_rows_csv, run_burner, write_records_csv

from oracles import PHILOX_KAT, philox_oracle_words
from test_execution import _random_graph

PHILOX = EngineKind.PHILOX4X32X10


@contextmanager
def criterion(number, description, budget_s=None):
    t0 = time.perf_counter()
    ok = False
    try:
        yield
        elapsed = time.perf_counter() - t0
        if budget_s is not None:
            assert elapsed <= budget_s, f"criterion {number} took {elapsed:.1f}s, budget {budget_s}s"
        ok = True
        budget = f", budget {budget_s:.0f}s" if budget_s else ""
        print(f"\ncriterion {number}: PASS in {elapsed:.2f}s{budget} - {description}")
    finally:
        if not ok:
            print(f"\ncriterion {number}: FAIL - {description}")


def test_criterion_1_philox_known_answers():
    with criterion(1, "Philox known-answer vectors (zero, all-ones, pi-digits)", budget_s=1.0):
        for key, ctr, expected in PHILOX_KAT:
            assert philox_block(key, ctr) == expected


def test_criterion_2_stream_properties():
    with criterion(2, "skip-ahead coherence and cross-backend bitwise determinism", budget_s=30.0):
        rng = np.random.default_rng(2)
        fresh = seed_engine(PHILOX, 271828)
        for _ in range(110):
            n = int(rng.integers(0, 10**5))
            _, words = generate_words(skip_ahead(fresh, n), 8)
            assert list(words) == philox_oracle_words(fresh.key, n, 8)

        spec = Uniform(-1.0, 1.0)
        for batch in (1, 10**3, 10**6):
            reference = burn_once(PHILOX, spec, "buffer", Serial(), batch, 13)[1]
            for workers in (2, 4, 8):
                got = burn_once(PHILOX, spec, "buffer", Parallel(workers), batch, 13)[1]
                assert np.array_equal(reference, got)


def test_criterion_3_statistical_quality():
    with criterion(3, "uniform mean/chi-square and normal mean/stddev at 1e6 samples", budget_s=10.0):
        from scipy import stats

        _, block = fill_uniform_unit(seed_engine(PHILOX, 2718281828), 10**6)
        assert abs(float(block.values.mean()) - 0.5) < 0.002

        _, chi_block = fill_uniform_unit(seed_engine(PHILOX, 20260810), 10**6)
        counts, _ = np.histogram(chi_block.values, bins=100, range=(0.0, 1.0))
        chi2 = float(((counts - 10**4) ** 2 / 10**4).sum())
        lo, hi = stats.chi2.ppf([0.01, 0.99], df=99)
        assert lo < chi2 < hi

        _, normals = fill_gaussian(seed_engine(PHILOX, 1618033), 10**6, 0.0, 1.0)
        values = normals.values.astype(np.float64)
        assert abs(values.mean()) < 0.005
        assert abs(values.std(ddof=1) - 1.0) < 0.005


def test_criterion_4_dag_correctness():
    with criterion(4, "100 random accessor graphs: parallel == serial, topological starts", budget_s=60.0):
        rng = np.random.default_rng(4)
        for _ in range(100):
            seed = int(rng.integers(0, 2**31))
            results = []
            report = None
            for backend in (Serial(), Parallel(4, chunk=61)):
                g, buffers = _random_graph(np.random.default_rng(seed))
                report = g.run(backend)
                results.append([g.copy_to_host(b) for b in buffers])
                if isinstance(backend, Parallel):
                    times = {t.task_id: t for t in report.tasks}
                    for u, v in g.edges:
                        assert times[v].start_ns >= times[u].end_ns
            for a, b in zip(*results):
                assert np.array_equal(a, b)


def test_criterion_5_table_arithmetic():
    with criterion(5, "portability arithmetic reproduces the published two-platform rows"):
        buffer_effs = {"Vega56": 0.974, "A100": 1.186}
        usm_effs = {"Vega56": 1.076, "A100": 0.240}
        assert abs(perf_portability(buffer_effs, ["Vega56", "A100"]) - 1.070) <= 0.001
        assert abs(perf_portability(usm_effs, ["Vega56", "A100"]) - 0.393) <= 0.001
        assert perf_portability({"X": None}, ["X"]) == 0.0
        assert perf_portability(buffer_effs, ["Vega56", "ghost"]) == 0.0


def test_criterion_6_burner_protocol(tmp_path):
    with criterion(6, "burner sweep: 4 batches x 100 iterations x 3 api modes, mode-invariant", budget_s=300.0):
        batches = [1, 100, 10**4, 10**6]
        spec = Uniform(-1.0, 1.0)
        for api in ("buffer", "usm", "hostdirect"):
            out = tmp_path / f"{api}.csv"
            run_burner(
                BurnConfig(
                    engine=PHILOX, dist=spec, api_mode=api, backend=Serial(),
                    batches=batches, iterations=100, seed=7,
                    out_path=str(out), platform="accept",
                )
            )
            rows = read_rows_csv(str(out))
            assert len(rows) == len(batches) * 100
            assert all(r["tts_ns"] > 0 for r in rows)
        for batch in batches:
            outputs = [
                burn_once(PHILOX, spec, api, Serial(), batch, 7)[1]
                for api in ("buffer", "usm", "hostdirect")
            ]
            assert np.array_equal(outputs[0], outputs[1])
            assert np.array_equal(outputs[0], outputs[2])


def test_criterion_7_vavs_self_consistency(tmp_path):
    with criterion(7, "compare(file, file) -> VAVS 1.0; doubled fixture -> 0.5 exact"):
        records = [
            RunRecord("self", "buffer", "serial", "philox", "uniform:0:1", batch, samples)
            for batch, samples in [(1, [107, 93]), (100, [1010, 990]), (10**4, [52000, 48000])]
        ]
        doubled = [
            RunRecord(r.platform, r.api_mode, r.backend, r.engine, r.dist, r.batch, [2 * s for s in r.samples])
            for r in records
        ]
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        write_records_csv(records, str(a))
        write_records_csv(doubled, str(b))

        report = compare(str(a), str(a))
        assert all(pair["vavs"] == 1.0 for pair in report["pairs"])
        report = compare(str(a), str(b))
        assert all(pair["vavs"] == 0.5 for pair in report["pairs"])


def test_criterion_8_calorimeter_scenarios():
    with criterion(8, "full-scale scenarios: electron consumption band, ttbar totals and loads", budget_s=600.0):
        geometry = synth_geometry(190000, 24)

        se_params = synth_params(ScenarioKind.SINGLE_ELECTRON)
        assert (se_params["electron"].hit_lo, se_params["electron"].hit_hi) == (4000, 6500)
        state = seed_engine(PHILOX, 101)
        se_total_hits = 0
        for event in _synth_events(ScenarioKind.SINGLE_ELECTRON, 1000, 101, se_params):
            state, result = simulate_event(event, geometry, se_params, state)
            assert result.randoms_consumed == 3 * result.hits
            assert 12000 <= result.randoms_consumed <= 19500
            se_total_hits += result.hits

        tt_params = synth_params(ScenarioKind.TTBAR)
        state = seed_engine(PHILOX, 202)
        tt_total_consumed = 0
        tt_total_hits = 0
        kinds_used = set()
        for event in _synth_events(ScenarioKind.TTBAR, 500, 202, tt_params):
            kinds_used.update(p.kind for p in event.particles)
            state, result = simulate_event(event, geometry, tt_params, state)
            assert result.randoms_consumed == 3 * result.hits
            tt_total_consumed += result.randoms_consumed
            tt_total_hits += result.hits

        assert tt_total_consumed >= 10**7
        assert 20 <= len(kinds_used) <= 30
        # scenario scaling: ttbar totals sit at 600-800x the single-electron
        # per-event hit mean
        ratio = tt_total_hits / (se_total_hits / 1000)
        assert 600 <= ratio <= 800, f"scaling ratio {ratio:.0f} outside [600, 800]"


def test_criterion_9_energy_conservation():
    with criterion(9, "per-particle deposits match energy x sampling fraction on 1000 particles"):
        from portarng.calosim import EventInput, Parameterization, ParticleInput

        geometry = synth_geometry(4800, 12)
        rng = np.random.default_rng(9)
        state = seed_engine(PHILOX, 303)
        kinds = []
        params = {}
        for k in range(6):
            kind = f"k{k}"
            kinds.append(kind)
            params[kind] = Parameterization(
                id=kind, kind=kind, hit_lo=20, hit_hi=300,
                bin_edges=np.linspace(0.001, 0.2 + 0.05 * k, 6),
                weights=np.full(5, 0.2),
            )
        for i in range(1000):
            energy = float(rng.uniform(0.1, 500.0))
            sf = float(rng.uniform(0.05, 1.0))
            z = float(rng.uniform(-0.999, 0.999))
            r = float(np.sqrt(1.0 - z * z))
            particle = ParticleInput(kinds[i % 6], energy, (r, 0.0, z))
            event = EventInput(event_id=i, particles=(particle,))
            state, result = simulate_event(
                event, geometry, params, state, min_batch=0, sampling_fraction=sf
            )
            assert result.particle_sums[0] == pytest.approx(energy * sf, rel=1e-6)
