"""Portable RNG stack: counter-based engines, distribution kernels, an
emulated device task system and the benchmark workloads built on them."""

from ._kernels import IMPL as kernel_impl
from .engine import (
    EngineKind,
    Mrg32k3aState,
    PhiloxState,
    generate_words,
    next_word,
    philox_block,
    seed_engine,
    skip_ahead,
)
from .distributions import (
    Gaussian,
    RandomBlock,
    Uniform,
    fill_gaussian,
    fill_uniform_unit,
    range_transform,
    word_to_unit,
    words_to_unit,
)
from .execution import AccessMode, BufferHandle, Event, Parallel, Serial, TaskGraph
from .metrics import (
    RunRecord,
    application_efficiency,
    perf_portability,
    tts_stats,
    vavs,
)

__version__ = "0.1.0"

__all__ = [
    "AccessMode",
    "BufferHandle",
    "EngineKind",
    "Event",
    "Gaussian",
    "Mrg32k3aState",
    "Parallel",
    "PhiloxState",
    "RandomBlock",
    "RunRecord",
    "Serial",
    "TaskGraph",
    "Uniform",
    "application_efficiency",
    "fill_gaussian",
    "fill_uniform_unit",
    "generate_words",
    "kernel_impl",
    "next_word",
    "perf_portability",
    "philox_block",
    "range_transform",
    "seed_engine",
    "skip_ahead",
    "tts_stats",
    "vavs",
    "word_to_unit",
    "words_to_unit",
]
