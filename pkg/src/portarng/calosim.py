"""Toy parameterized calorimeter simulation driven by the RNG stack.

Each particle deposits energy as a set of hits on the cells of one detector
region. Every hit consumes exactly three unit uniforms: one picks the cell
within the particle's region, one picks an energy bin from the hit-energy
table, one picks the fraction within the bin. Raw hit energies are then
normalized so a particle's deposits sum to energy * sampling_fraction.

The uniforms for hits come from a device batch generated through the task
graph (generation kernel plus range-transform kernel, like the burner), with
the batch size floored at min_batch regardless of demand; consumed and
allocated counts are tracked separately. Bookkeeping draws - hit counts per
particle, event composition - come from far-offset control substreams of the
same seed so the device-batch accounting stays exactly 3 * hits.

Events are processed sequentially; parallelism, when enabled, happens inside
each event's generation run.
"""

from __future__ import annotations

import enum
import json
import math
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import click
import numpy as np

from .distributions import words_to_unit
from .engine import EngineKind, PhiloxState, generate_words, seed_engine, skip_ahead
from .errors import (
    ConfigError,
    InvalidCounts,
    InvalidParameter,
    MissingParameterization,
    UnsupportedEngine,
)
from .execution import AccessMode, Backend, Serial, TaskGraph, parse_backend
from .rngburn import affine_kernel, uniform_generate_kernel

# Control and synthesis substreams live far beyond any device-batch position.
CONTROL_STREAM_OFFSET = 1 << 96
SYNTH_STREAM_OFFSET = 1 << 97

DEFAULT_MIN_BATCH = 200_000
DEFAULT_CELLS = 190_000
DEFAULT_REGIONS = 24

GEOMETRY_HEADER = ["cell_id", "region", "x", "y", "z"]
PARAMS_HEADER = ["param_id", "kind", "hit_lo", "hit_hi"]

_GOLDEN_ANGLE = 2.399963229728653


@dataclass(frozen=True)
class Cell:
    id: int
    region: int
    x: float
    y: float
    z: float


@dataclass
class Geometry:
    cells: List[Cell]
    regions: int
    region_cell_ids: List[np.ndarray] = field(init=False)

    def __post_init__(self):
        ids = [[] for _ in range(self.regions)]
        for cell in self.cells:
            ids[cell.region].append(cell.id)
        self.region_cell_ids = [np.asarray(r, dtype=np.int64) for r in ids]


@dataclass
class Parameterization:
    """Hit-count range plus the binned hit-energy distribution for one kind."""

    id: str
    kind: str
    hit_lo: int
    hit_hi: int
    bin_edges: np.ndarray  # len nbins + 1, strictly increasing
    weights: np.ndarray  # len nbins, non-negative, sums to 1

    def __post_init__(self):
        self.bin_edges = np.asarray(self.bin_edges, dtype=np.float64)
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if not (0 <= self.hit_lo <= self.hit_hi):
            raise InvalidParameter(f"{self.id}: hit range must satisfy 0 <= lo <= hi")
        if len(self.bin_edges) != len(self.weights) + 1 or np.any(np.diff(self.bin_edges) <= 0):
            raise InvalidParameter(f"{self.id}: bin edges must be strictly increasing")
        if np.any(self.weights < 0) or abs(float(self.weights.sum()) - 1.0) > 1e-9:
            raise InvalidParameter(f"{self.id}: weights must be non-negative and sum to 1")


@dataclass(frozen=True)
class ParticleInput:
    kind: str
    energy: float  # GeV
    direction: Tuple[float, float, float]

    def __post_init__(self):
        if self.energy <= 0:
            raise InvalidParameter(f"particle energy must be positive, got {self.energy}")
        norm = math.sqrt(sum(c * c for c in self.direction))
        if abs(norm - 1.0) > 1e-6:
            raise InvalidParameter(f"direction must be normalized, |d| = {norm}")


@dataclass(frozen=True)
class EventInput:
    event_id: int
    particles: Tuple[ParticleInput, ...]


@dataclass
class SimResult:
    deposits: Dict[int, float]  # cell id -> deposited energy
    particle_sums: List[float]
    hits: int
    randoms_consumed: int
    randoms_allocated: int
    wall_ns: int


class ScenarioKind(enum.Enum):
    SINGLE_ELECTRON = "electron"
    TTBAR = "ttbar"


# -- geometry -----------------------------------------------------------------


def synth_geometry(n: int, regions: int) -> Geometry:
    """Deterministic synthetic detector: n cells round-robin over regions."""
    if not (n >= regions >= 1):
        raise InvalidCounts(f"need cell count >= regions >= 1, got ({n}, {regions})")
    cells = []
    for i in range(n):
        theta = _GOLDEN_ANGLE * i
        r = math.sqrt(i + 1.0)
        cells.append(Cell(id=i, region=i % regions, x=r * math.cos(theta), y=r * math.sin(theta), z=float(i % regions)))
    return Geometry(cells=cells, regions=regions)


def save_geometry(geometry: Geometry, path: str) -> None:
    with open(path, "w") as f:
        f.write(",".join(GEOMETRY_HEADER) + "\n")
        for c in geometry.cells:
            f.write(f"{c.id},{c.region},{c.x!r},{c.y!r},{c.z!r}\n")


def load_geometry(path: str) -> Geometry:
    with open(path) as f:
        header = f.readline().strip()
        if header.split(",") != GEOMETRY_HEADER:
            raise ConfigError(f"{path}: expected geometry header {GEOMETRY_HEADER}")
        cells = []
        regions = 0
        for line in f:
            cid, region, x, y, z = line.strip().split(",")
            cells.append(Cell(int(cid), int(region), float(x), float(y), float(z)))
            regions = max(regions, int(region) + 1)
    if not cells:
        raise ConfigError(f"{path}: geometry file has no cells")
    return Geometry(cells=cells, regions=regions)


# -- parameterizations ---------------------------------------------------------


def save_params(params: Sequence[Parameterization], path: str) -> None:
    """Write the parameterization table: declaration rows, then bin rows."""
    with open(path, "w") as f:
        f.write(",".join(PARAMS_HEADER) + "\n")
        for p in params:
            f.write(f"{p.id},{p.kind},{p.hit_lo},{p.hit_hi}\n")
        for p in params:
            for i, w in enumerate(p.weights):
                f.write(f"{p.id},{float(p.bin_edges[i])!r},{float(p.bin_edges[i + 1])!r},{float(w)!r}\n")


def load_params(path: str) -> Dict[str, Parameterization]:
    """Parse the parameterization table; bin rows have a numeric second field."""
    decls: Dict[str, tuple] = {}
    bins: Dict[str, List[Tuple[float, float, float]]] = {}
    with open(path) as f:
        header = f.readline().strip()
        if header.split(",") != PARAMS_HEADER:
            raise ConfigError(f"{path}: expected params header {PARAMS_HEADER}")
        for line in f:
            row = line.strip().split(",")
            if len(row) != 4:
                raise ConfigError(f"{path}: malformed row {row!r}")
            try:
                lo = float(row[1])
                is_bin = True
            except ValueError:
                is_bin = False
            if is_bin:
                bins.setdefault(row[0], []).append((lo, float(row[2]), float(row[3])))
            else:
                decls[row[0]] = (row[1], int(row[2]), int(row[3]))
    params: Dict[str, Parameterization] = {}
    for pid, (kind, hit_lo, hit_hi) in decls.items():
        rows = bins.get(pid)
        if not rows:
            raise ConfigError(f"{path}: parameterization {pid} has no bins")
        edges = [rows[0][0]] + [r[1] for r in rows]
        for i in range(1, len(rows)):
            if rows[i][0] != rows[i - 1][1]:
                raise ConfigError(f"{path}: {pid} bins are not contiguous")
        params[kind] = Parameterization(
            id=pid, kind=kind, hit_lo=hit_lo, hit_hi=hit_hi,
            bin_edges=np.asarray(edges), weights=np.asarray([r[2] for r in rows]),
        )
    return params


_ELECTRON_WEIGHTS = [0.05, 0.10, 0.20, 0.25, 0.20, 0.10, 0.07, 0.03]

# Tuned so 500 ttbar events land at roughly 700x the single-electron
# per-event hit mean: ~10 secondaries/event times ~740 hits each.
TTBAR_POOL = 24
TTBAR_SECONDARIES = (5, 15)
TTBAR_HIT_RANGE = (600, 880)


def synth_params(scenario: ScenarioKind) -> Dict[str, Parameterization]:
    """Built-in parameterization tables for the two scenarios."""
    if scenario is ScenarioKind.SINGLE_ELECTRON:
        edges = np.linspace(0.001, 0.101, len(_ELECTRON_WEIGHTS) + 1)
        p = Parameterization(
            id="electron", kind="electron", hit_lo=4000, hit_hi=6500,
            bin_edges=edges, weights=np.asarray(_ELECTRON_WEIGHTS),
        )
        return {p.kind: p}
    params = {}
    for k in range(TTBAR_POOL):
        edges = np.linspace(0.001, 0.201 + 0.004 * k, 7)
        w = np.asarray([1.0, 2.0, 4.0, 4.0 + k % 3, 2.0, 1.0])
        p = Parameterization(
            id=f"sec{k:02d}", kind=f"sec{k:02d}",
            hit_lo=TTBAR_HIT_RANGE[0], hit_hi=TTBAR_HIT_RANGE[1],
            bin_edges=edges, weights=w / w.sum(),
        )
        params[p.kind] = p
    return params


# -- simulation ----------------------------------------------------------------


def _particle_region(particle: ParticleInput, regions: int) -> int:
    dz = particle.direction[2]
    return min(int((dz + 1.0) * 0.5 * regions), regions - 1)


def _int_uniform(u: float, lo: int, hi: int) -> int:
    return lo + min(int(u * (hi - lo + 1)), hi - lo)


def simulate_event(
    event: EventInput,
    geometry: Geometry,
    params: Dict[str, Parameterization],
    state: PhiloxState,
    min_batch: int = DEFAULT_MIN_BATCH,
    backend: Backend = Serial(),
    sampling_fraction: float = 1.0,
) -> Tuple[PhiloxState, SimResult]:
    """Simulate one event; returns the advanced device stream and the result.

    The device batch is max(3 * hits, min_batch) uniforms produced through
    the task graph; exactly 3 * hits of them are consumed. Hit counts are
    drawn from a control substream at a fixed far offset of the incoming
    stream position, so they are deterministic but never collide with the
    device batch.
    """
    if not isinstance(state, PhiloxState):
        raise UnsupportedEngine("calorimeter simulation requires the Philox engine")
    t0 = time.perf_counter_ns()

    for particle in event.particles:
        if particle.kind not in params:
            raise MissingParameterization(f"no parameterization for kind {particle.kind!r}")

    control = skip_ahead(state, CONTROL_STREAM_OFFSET)
    control, control_words = generate_words(control, len(event.particles))
    hit_counts = []
    for particle, w in zip(event.particles, control_words):
        p = params[particle.kind]
        hit_counts.append(_int_uniform(float(w >> np.uint32(8)) * 2.0 ** -24, p.hit_lo, p.hit_hi))

    total_hits = int(sum(hit_counts))
    allocated = max(3 * total_hits, min_batch)

    graph = TaskGraph()
    buf = graph.create_buffer(allocated, "f32")
    graph.submit_with_accessors(
        uniform_generate_kernel(state, buf.id, "fp32"), [(buf, AccessMode.READ_WRITE)]
    )
    graph.submit_with_accessors(affine_kernel(buf.id, 0.0, 1.0), [(buf, AccessMode.READ_WRITE)])
    graph.run(backend)
    host = graph.copy_to_host(buf).astype(np.float64)

    all_ids: List[np.ndarray] = []
    all_amounts: List[np.ndarray] = []
    particle_sums: List[float] = []
    offset = 0
    for particle, m in zip(event.particles, hit_counts):
        if m == 0:
            particle_sums.append(0.0)
            continue
        p = params[particle.kind]
        triples = host[offset : offset + 3 * m].reshape(m, 3)
        offset += 3 * m

        region = _particle_region(particle, geometry.regions)
        region_cells = geometry.region_cell_ids[region]
        cell_idx = np.minimum((triples[:, 0] * len(region_cells)).astype(np.int64), len(region_cells) - 1)
        cell_ids = region_cells[cell_idx]

        cumw = np.cumsum(p.weights)
        bin_idx = np.minimum(np.searchsorted(cumw, triples[:, 1], side="right"), len(p.weights) - 1)
        raw = p.bin_edges[bin_idx] + triples[:, 2] * (p.bin_edges[bin_idx + 1] - p.bin_edges[bin_idx])

        target = particle.energy * sampling_fraction
        raw_sum = float(raw.sum())
        amounts = raw * (target / raw_sum) if raw_sum > 0 else np.full(m, target / m)
        all_ids.append(cell_ids)
        all_amounts.append(amounts)
        particle_sums.append(float(amounts.sum()))

    deposits: Dict[int, float] = {}
    if all_ids:
        ids_cat = np.concatenate(all_ids)
        amounts_cat = np.concatenate(all_amounts)
        uniq, inverse = np.unique(ids_cat, return_inverse=True)
        sums = np.bincount(inverse, weights=amounts_cat)
        deposits = dict(zip(uniq.tolist(), sums.tolist()))

    new_state = skip_ahead(state, allocated)
    result = SimResult(
        deposits=deposits,
        particle_sums=particle_sums,
        hits=total_hits,
        randoms_consumed=3 * total_hits,
        randoms_allocated=allocated,
        wall_ns=time.perf_counter_ns() - t0,
    )
    return new_state, result


# -- scenarios -------------------------------------------------------------------


def _unit_direction(u: float, v: float) -> Tuple[float, float, float]:
    z = 2.0 * u - 1.0
    phi = 2.0 * math.pi * v
    r = math.sqrt(max(0.0, 1.0 - z * z))
    return (r * math.cos(phi), r * math.sin(phi), z)


def _synth_events(
    scenario: ScenarioKind, n_events: int, seed: int, params: Dict[str, Parameterization]
) -> List[EventInput]:
    """Deterministic event synthesis from the far-offset synthesis substream."""
    stream = skip_ahead(seed_engine(EngineKind.PHILOX4X32X10, seed), SYNTH_STREAM_OFFSET)
    events = []
    if scenario is ScenarioKind.SINGLE_ELECTRON:
        stream, words = generate_words(stream, 2 * n_events)
        u = words_to_unit(words, "fp64")
        for i in range(n_events):
            direction = _unit_direction(0.45 + 0.1 * float(u[2 * i]), float(u[2 * i + 1]))
            events.append(
                EventInput(event_id=i, particles=(ParticleInput("electron", 65.0, direction),))
            )
        return events

    kinds = sorted(params)
    lo, hi = TTBAR_SECONDARIES
    for i in range(n_events):
        stream, mw = generate_words(stream, 1)
        m = _int_uniform(float(mw[0] >> np.uint32(8)) * 2.0 ** -24, lo, hi)
        stream, words = generate_words(stream, 4 * m)
        u = words_to_unit(words, "fp64")
        particles = []
        for j in range(m):
            kind = kinds[min(int(float(u[4 * j]) * len(kinds)), len(kinds) - 1)]
            energy = 1.0 + 99.0 * float(u[4 * j + 1])
            direction = _unit_direction(float(u[4 * j + 2]), float(u[4 * j + 3]))
            particles.append(ParticleInput(kind, energy, direction))
        events.append(EventInput(event_id=i, particles=tuple(particles)))
    return events


def run_scenario(
    kind: ScenarioKind,
    geometry: Geometry,
    params: Dict[str, Parameterization],
    seed: int,
    backend: Backend = Serial(),
    min_batch: int = DEFAULT_MIN_BATCH,
    events: Optional[int] = None,
    sampling_fraction: float = 1.0,
    load_delay_s: float = 0.0,
) -> dict:
    """Run a full scenario and return its summary report.

    SingleElectron: 1000 one-electron events at 65 GeV, a single resident
    parameterization. TTbar: 500 multi-secondary events drawing on the whole
    parameterization pool, with load-on-first-use counted (and optionally
    slowed by load_delay_s per load to make the effect visible).
    """
    n_events = events if events is not None else (1000 if kind is ScenarioKind.SINGLE_ELECTRON else 500)
    event_inputs = _synth_events(kind, n_events, seed, params)

    state = seed_engine(EngineKind.PHILOX4X32X10, seed)
    loaded: set = set()
    total_hits = 0
    consumed = 0
    allocated = 0
    wall = []
    t0 = time.perf_counter_ns()
    for event in event_inputs:
        for particle in event.particles:
            if particle.kind not in loaded:
                loaded.add(particle.kind)
                if load_delay_s:
                    time.sleep(load_delay_s)
        state, result = simulate_event(
            event, geometry, params, state,
            min_batch=min_batch, backend=backend, sampling_fraction=sampling_fraction,
        )
        total_hits += result.hits
        consumed += result.randoms_consumed
        allocated += result.randoms_allocated
        wall.append(result.wall_ns)
    total_ns = time.perf_counter_ns() - t0

    return {
        "scenario": kind.value,
        "events": n_events,
        "total_hits": total_hits,
        "randoms_consumed": consumed,
        "randoms_allocated": allocated,
        "params_loaded": len(loaded),
        "mean_event_ms": (sum(wall) / len(wall)) / 1e6 if wall else 0.0,
        "total_ms": total_ns / 1e6,
    }


# -- CLI --------------------------------------------------------------------------


def _parse_geometry(text: str) -> Geometry:
    if text.startswith("synth:"):
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"geometry synth spec must be synth:N:R, got {text!r}")
        return synth_geometry(int(parts[1]), int(parts[2]))
    return load_geometry(text)


@click.group()
def main():
    """Parameterized calorimeter simulation benchmark."""


@main.command("run")
@click.option("--scenario", type=click.Choice([k.value for k in ScenarioKind]), default="electron", show_default=True)
@click.option("--geometry", "geometry_text", default=f"synth:{DEFAULT_CELLS}:{DEFAULT_REGIONS}", show_default=True, help="geometry CSV path or synth:N:R")
@click.option("--params", "params_text", default="synth", show_default=True, help="parameterization CSV path or synth")
@click.option("--seed", default=0, show_default=True)
@click.option("--backend", "backend_text", default="serial", show_default=True, help="serial or parallel:N")
@click.option("--min-batch", default=DEFAULT_MIN_BATCH, show_default=True, help="device batch allocation floor")
@click.option("--out", "out_path", type=click.Path(), default=None, help="JSON report path")
def run_cmd(scenario, geometry_text, params_text, seed, backend_text, min_batch, out_path):
    """Run a calorimeter simulation scenario."""
    kind = ScenarioKind(scenario)
    geometry = _parse_geometry(geometry_text)
    params = synth_params(kind) if params_text == "synth" else load_params(params_text)
    report = run_scenario(
        kind, geometry, params, seed,
        backend=parse_backend(backend_text), min_batch=min_batch,
    )
    text = json.dumps(report, indent=2)
    if out_path:
        with open(out_path, "w") as f:
            f.write(text + "\n")
        click.echo(f"wrote {out_path}")
    else:
        click.echo(text)


if __name__ == "__main__":
    main()
