"""RNG burner benchmark: generate-and-transform cycles, timed end to end.

One burner iteration is a full cycle: generator construction, device buffer
allocation, a generation kernel, a range-transform kernel, execution and the
device-to-host copy. The two kernels are chained through read_write accessors
(buffer mode), through an explicit event list (usm mode), or called inline
with no task graph at all (hostdirect mode, the native-baseline stand-in).
All three modes produce bitwise-identical output for a fixed seed; what
changes is only how the dependency is expressed, which is the point being
benchmarked.

Results go to CSV (one row per iteration) and `compare` turns two result
files into slowdown ratios and a portability figure.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import click
import numpy as np

from . import distributions as dist_mod
from .distributions import DistributionSpec, Uniform, dist_label, parse_dist
from .engine import EngineKind, EngineState, generate_words, seed_engine, skip_ahead
from .errors import ConfigError, NoOverlappingKeys, SchemaMismatch
from .execution import AccessMode, Backend, TaskGraph, backend_label, parse_backend
from .metrics import RunRecord, perf_portability, tts_stats, vavs

CSV_HEADER = ["platform", "api", "backend", "engine", "dist", "batch", "iter", "tts_ns"]

API_MODES = ("buffer", "usm", "hostdirect")

_ENGINE_NAMES = {kind.value: kind for kind in EngineKind}


@dataclass
class BurnConfig:
    engine: EngineKind
    dist: DistributionSpec
    api_mode: str
    backend: Backend
    batches: List[int]
    iterations: int = 100
    seed: int = 0
    out_path: Optional[str] = None
    platform: str = "local"

    def __post_init__(self):
        if self.api_mode not in API_MODES:
            raise ConfigError(f"api mode must be one of {API_MODES}, got {self.api_mode!r}")
        if not self.batches or any(b < 1 for b in self.batches):
            raise ConfigError(f"batch sizes must be >= 1, got {self.batches}")
        if self.iterations < 1:
            raise ConfigError(f"iterations must be >= 1, got {self.iterations}")


def _apply_affine(values: np.ndarray, lo: float, hi: float) -> None:
    values *= hi - lo
    values += lo


def uniform_generate_kernel(base_state: EngineState, buf_id: int, precision: str) -> Callable:
    """Kernel writing unit uniforms; chunk c regenerates from stream offset c."""

    def kernel(views: Dict[int, np.ndarray], start: int, stop: int) -> None:
        state = base_state if start == 0 else skip_ahead(base_state, start)
        _, words = generate_words(state, stop - start)
        views[buf_id][start:stop] = dist_mod.words_to_unit(words, precision)

    return kernel


def gaussian_generate_kernel(
    base_state: EngineState, buf_id: int, mean: float, stddev: float, precision: str
) -> Callable:
    """Kernel writing normals; pairs are pure functions of their stream offset."""

    def kernel(views: Dict[int, np.ndarray], start: int, stop: int) -> None:
        first_pair = start // 2
        last_pair = (stop - 1) // 2
        state = skip_ahead(base_state, 2 * first_pair) if first_pair else base_state
        _, words = generate_words(state, 2 * (last_pair - first_pair + 1))
        z = dist_mod.gaussian_from_words(words, mean, stddev, len(words), precision)
        views[buf_id][start:stop] = z[start - 2 * first_pair : stop - 2 * first_pair]

    return kernel


def affine_kernel(buf_id: int, lo: float, hi: float) -> Callable:
    """Range-transform kernel: in-place affine map of [0,1) values onto [lo, hi)."""

    def kernel(views: Dict[int, np.ndarray], start: int, stop: int) -> None:
        _apply_affine(views[buf_id][start:stop], lo, hi)

    return kernel


def _transform_range(spec: DistributionSpec) -> Tuple[float, float]:
    # Gaussian batches keep the two-kernel chain with an identity transform;
    # mean/stddev scaling happens inside the generation kernel.
    if isinstance(spec, Uniform):
        return spec.lo, spec.hi
    return 0.0, 1.0


def burn_once(
    engine: EngineKind,
    spec: DistributionSpec,
    api_mode: str,
    backend: Backend,
    batch: int,
    seed: int,
) -> Tuple[int, np.ndarray]:
    """One timed full cycle; returns (tts_ns, host values)."""
    lo, hi = _transform_range(spec)
    precision = spec.precision
    buf_kind = "f32" if precision == "fp32" else "f64"
    splittable = engine is not EngineKind.MRG32K3A  # no MRG skip-ahead

    t0 = time.perf_counter_ns()
    state = seed_engine(engine, seed)
    if api_mode == "hostdirect":
        if isinstance(spec, Uniform):
            _, block = dist_mod.fill_uniform_unit(state, batch, precision)
        else:
            _, block = dist_mod.fill_gaussian(state, batch, spec.mean, spec.stddev, precision)
        _apply_affine(block.values, lo, hi)
        host = block.values
    else:
        graph = TaskGraph()
        buf = graph.create_buffer(batch, buf_kind)
        if isinstance(spec, Uniform):
            gen = uniform_generate_kernel(state, buf.id, precision)
        else:
            gen = gaussian_generate_kernel(state, buf.id, spec.mean, spec.stddev, precision)
        tr = affine_kernel(buf.id, lo, hi)
        if api_mode == "buffer":
            graph.submit_with_accessors(gen, [(buf, AccessMode.READ_WRITE)], splittable=splittable)
            graph.submit_with_accessors(tr, [(buf, AccessMode.READ_WRITE)])
        else:  # usm
            e1 = graph.submit_with_events(gen, [buf], deps=[], splittable=splittable)
            graph.submit_with_events(tr, [buf], deps=[e1])
        graph.run(backend)
        host = graph.copy_to_host(buf)
    tts = time.perf_counter_ns() - t0
    return tts, host


def run_burner(config: BurnConfig) -> List[RunRecord]:
    """Run the full sweep: every batch size, `iterations` cycles each."""
    records = []
    for batch in config.batches:
        samples = []
        for _ in range(config.iterations):
            tts, _ = burn_once(
                config.engine, config.dist, config.api_mode, config.backend, batch, config.seed
            )
            samples.append(tts)
        records.append(
            RunRecord(
                platform=config.platform,
                api_mode=config.api_mode,
                backend=backend_label(config.backend),
                engine=config.engine.value,
                dist=dist_label(config.dist),
                batch=batch,
                samples=samples,
            )
        )
    if config.out_path:
        write_records_csv(records, config.out_path)
    return records


# -- CSV persistence ---------------------------------------------------------


def write_records_csv(records: Sequence[RunRecord], path: str) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for rec in records:
            for it, tts in enumerate(rec.samples):
                writer.writerow(
                    [rec.platform, rec.api_mode, rec.backend, rec.engine, rec.dist, rec.batch, it, tts]
                )


def read_rows_csv(path: str) -> List[dict]:
    """Parse a results CSV, enforcing the exact header."""
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != CSV_HEADER:
            raise SchemaMismatch(f"{path}: expected header {CSV_HEADER}, got {header}")
        rows = []
        for row in reader:
            if len(row) != len(CSV_HEADER):
                raise SchemaMismatch(f"{path}: malformed row {row!r}")
            rows.append(
                {
                    "platform": row[0],
                    "api": row[1],
                    "backend": row[2],
                    "engine": row[3],
                    "dist": row[4],
                    "batch": int(row[5]),
                    "iter": int(row[6]),
                    "tts_ns": int(row[7]),
                }
            )
    return rows


# -- comparison --------------------------------------------------------------


def _mean_tts_by_key(rows: Sequence[dict], platform: Optional[str] = None) -> Dict[tuple, float]:
    grouped: Dict[tuple, List[int]] = {}
    for row in rows:
        if platform is not None and row["platform"] != platform:
            continue
        grouped.setdefault((row["engine"], row["dist"], row["batch"]), []).append(row["tts_ns"])
    return {key: tts_stats(samples).mean for key, samples in grouped.items()}


def compare(path_a: str, path_b: str, group: Optional[Sequence[str]] = None) -> dict:
    """Compare two result files: per-key slowdown ratios plus portability.

    File A plays the portable role and file B the native-baseline role.
    Rows match on (engine, dist, batch); per-platform efficiencies average
    the per-key efficiencies of rows carrying that platform label in both
    files, and a platform absent from either file counts as unsupported.
    """
    rows_a = read_rows_csv(path_a)
    rows_b = read_rows_csv(path_b)
    means_a = _mean_tts_by_key(rows_a)
    means_b = _mean_tts_by_key(rows_b)
    shared = sorted(set(means_a) & set(means_b))
    if not shared:
        raise NoOverlappingKeys(f"no (engine, dist, batch) keys shared by {path_a} and {path_b}")

    pairs = []
    for key in shared:
        a, b = means_a[key], means_b[key]
        pairs.append(
            {
                "batch": key[2],
                "tts_a_mean_ns": a,
                "tts_b_mean_ns": b,
                "vavs": vavs(a, b),
                "efficiency": b / a,
            }
        )

    platforms_a = {row["platform"] for row in rows_a}
    platforms_b = {row["platform"] for row in rows_b}
    if group is None:
        group = sorted(platforms_a & platforms_b) or sorted(platforms_a)
    effs: Dict[str, Optional[float]] = {}
    for platform in group:
        by_a = _mean_tts_by_key(rows_a, platform)
        by_b = _mean_tts_by_key(rows_b, platform)
        keys = sorted(set(by_a) & set(by_b))
        if not keys:
            effs[platform] = None
        else:
            effs[platform] = sum(by_b[k] / by_a[k] for k in keys) / len(keys)

    return {
        "pairs": pairs,
        "portability": {"platforms": list(group), "P": perf_portability(effs, group)},
    }


# -- CLI ---------------------------------------------------------------------


def _parse_batches(text: str) -> List[int]:
    try:
        return [int(part) for part in text.split(",") if part]
    except ValueError as exc:
        raise ConfigError(f"bad batch list {text!r}") from exc


@click.group()
def main():
    """RNG burner benchmark and result comparison."""


@main.command("run")
@click.option("--engine", type=click.Choice(sorted(_ENGINE_NAMES)), default="philox", show_default=True)
@click.option("--dist", "dist_text", default="uniform:0:1", show_default=True, help="uniform:LO:HI or gaussian:MEAN:STD")
@click.option("--api", type=click.Choice(API_MODES), default="buffer", show_default=True)
@click.option("--backend", "backend_text", default="serial", show_default=True, help="serial or parallel:N")
@click.option("--batches", "batches_text", default="1,100,10000,1000000", show_default=True, help="comma-separated batch sizes")
@click.option("--iters", default=100, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--platform", default="local", show_default=True, help="platform label recorded in the CSV")
@click.option("--out", "out_path", type=click.Path(), default=None, help="CSV output path")
def run_cmd(engine, dist_text, api, backend_text, batches_text, iters, seed, platform, out_path):
    """Run the burner sweep and write per-iteration timings."""
    config = BurnConfig(
        engine=_ENGINE_NAMES[engine],
        dist=parse_dist(dist_text),
        api_mode=api,
        backend=parse_backend(backend_text),
        batches=_parse_batches(batches_text),
        iterations=iters,
        seed=seed,
        out_path=out_path,
        platform=platform,
    )
    records = run_burner(config)
    for rec in records:
        stats = tts_stats(rec.samples)
        click.echo(
            f"{rec.platform} {rec.api_mode} {rec.backend} {rec.engine} {rec.dist} "
            f"batch={rec.batch} mean={stats.mean / 1e6:.3f}ms min={stats.min / 1e6:.3f}ms"
        )
    if out_path:
        click.echo(f"wrote {out_path}")


@main.command("compare")
@click.argument("file_a", type=click.Path(exists=True))
@click.argument("file_b", type=click.Path(exists=True))
@click.option("--group", "group_text", default=None, help="comma-separated platform labels for the portability set")
@click.option("--out", "out_path", type=click.Path(), default=None, help="JSON output path")
def compare_cmd(file_a, file_b, group_text, out_path):
    """Compare two result CSVs (A = portable role, B = native-baseline role)."""
    group = group_text.split(",") if group_text else None
    report = compare(file_a, file_b, group)
    text = json.dumps(report, indent=2)
    if out_path:
        with open(out_path, "w") as f:
            f.write(text + "\n")
        click.echo(f"wrote {out_path}")
    else:
        click.echo(text)


if __name__ == "__main__":
    main()
