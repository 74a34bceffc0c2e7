"""Distribution kernels: raw engine words to uniform or normal real blocks.

The unit mapping keeps 24 mantissa bits, (w >> 8) * 2**-24, so every unit
value is exactly representable in fp32 and strictly below 1. The fp64 path
reuses the same 24-bit mapping rather than widening to 53 bits: fp32 and fp64
streams then agree bit-for-bit after widening, a deliberate fidelity
trade-off.

Custom output ranges are a separate affine pass (`range_transform`) rather
than a generation option, mirroring host RNG libraries that have no concept
of a range. Normal variates use Box-Muller on consumed uniform pairs; inverse
CDF paths are deliberately unsupported.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

from . import _kernels
from .engine import EngineState, generate_words
from .errors import InvalidParameter, InvalidRange

_UNIT_SCALE = 2.0 ** -24
_TWO_PI = 6.283185307179586

_DTYPES = {"fp32": np.float32, "fp64": np.float64}


def _check_precision(precision: str) -> None:
    if precision not in _DTYPES:
        raise InvalidParameter(f"precision must be fp32 or fp64, got {precision!r}")


@dataclass(frozen=True)
class Uniform:
    """Uniform draw request over [lo, hi)."""

    lo: float
    hi: float
    precision: str = "fp32"

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)) or self.lo >= self.hi:
            raise InvalidRange(f"uniform range requires finite lo < hi, got [{self.lo}, {self.hi})")
        _check_precision(self.precision)


@dataclass(frozen=True)
class Gaussian:
    """Normal draw request with the given mean and standard deviation."""

    mean: float
    stddev: float
    precision: str = "fp32"

    def __post_init__(self):
        if not math.isfinite(self.mean) or not math.isfinite(self.stddev) or self.stddev <= 0:
            raise InvalidParameter(f"gaussian requires finite mean and stddev > 0, got ({self.mean}, {self.stddev})")
        _check_precision(self.precision)


DistributionSpec = Union[Uniform, Gaussian]


@dataclass
class RandomBlock:
    """A generated batch: contiguous values plus count and precision tag."""

    values: np.ndarray
    count: int
    precision: str = "fp32"


def word_to_unit(w: int) -> float:
    """Map one 32-bit word onto [0, 1) with 24 mantissa bits."""
    return (w >> 8) * _UNIT_SCALE


def words_to_unit(words: np.ndarray, precision: str = "fp32") -> np.ndarray:
    """Vectorized word_to_unit; exact in both precisions."""
    _check_precision(precision)
    dtype = _DTYPES[precision]
    return (words >> np.uint32(8)).astype(dtype) * dtype(_UNIT_SCALE)


def fill_uniform_unit(state: EngineState, n: int, precision: str = "fp32") -> Tuple[EngineState, RandomBlock]:
    """Draw n unit uniforms in stream order, advancing the state by n words."""
    if n < 0:
        raise InvalidParameter("count must be non-negative")
    state, words = generate_words(state, n)
    return state, RandomBlock(values=words_to_unit(words, precision), count=n, precision=precision)


def range_transform(block: RandomBlock, lo: float, hi: float) -> RandomBlock:
    """Affine map of unit values onto [lo, hi), in place, order preserved."""
    if not (math.isfinite(lo) and math.isfinite(hi)) or lo >= hi:
        raise InvalidRange(f"range transform requires finite lo < hi, got [{lo}, {hi})")
    block.values *= hi - lo
    block.values += lo
    return block


def gaussian_pair(u1: float, u2: float) -> Tuple[float, float]:
    """Box-Muller transform of one uniform pair to a standard-normal pair.

    Uses u1' = 1 - u1 so the log argument stays in (0, 1] even when u1 is 0.
    """
    r = math.sqrt(-2.0 * math.log(1.0 - u1))
    return r * math.cos(_TWO_PI * u2), r * math.sin(_TWO_PI * u2)


def gaussian_from_words(words: np.ndarray, mean: float, stddev: float, n: int, precision: str = "fp32") -> np.ndarray:
    """Transform 2*ceil(n/2) pre-drawn words into n normals.

    The math runs in float64 and is cast to the requested precision last, so
    a value depends only on its word pair, never on how the batch was split.
    """
    _check_precision(precision)
    u1 = (words[0::2] >> np.uint32(8)).astype(np.float64) * _UNIT_SCALE
    u2 = (words[1::2] >> np.uint32(8)).astype(np.float64) * _UNIT_SCALE
    z0, z1 = _kernels.box_muller(1.0 - u1, u2)
    z = np.empty(2 * len(u1), dtype=np.float64)
    z[0::2] = z0
    z[1::2] = z1
    z *= stddev
    z += mean
    return z[:n].astype(_DTYPES[precision])


def fill_gaussian(
    state: EngineState, n: int, mean: float, stddev: float, precision: str = "fp32"
) -> Tuple[EngineState, RandomBlock]:
    """Draw n normals via Box-Muller pairs, advancing the state by 2*ceil(n/2) words.

    Odd n discards the trailing sine variate of the last pair rather than
    caching it, keeping the operation stateless beyond the word count.
    """
    if n < 0:
        raise InvalidParameter("count must be non-negative")
    if not math.isfinite(mean) or not math.isfinite(stddev) or stddev <= 0:
        raise InvalidParameter(f"gaussian requires finite mean and stddev > 0, got ({mean}, {stddev})")
    _check_precision(precision)
    dtype = _DTYPES[precision]
    nwords = 2 * ((n + 1) // 2)
    state, words = generate_words(state, nwords)
    if n == 0:
        return state, RandomBlock(values=np.empty(0, dtype=dtype), count=0, precision=precision)
    values = gaussian_from_words(words, mean, stddev, n, precision)
    return state, RandomBlock(values=values, count=n, precision=precision)


def dist_label(spec: DistributionSpec) -> str:
    """Canonical CLI/CSV label for a distribution spec."""
    if isinstance(spec, Uniform):
        return f"uniform:{spec.lo:g}:{spec.hi:g}"
    return f"gaussian:{spec.mean:g}:{spec.stddev:g}"


def parse_dist(text: str, precision: str = "fp32") -> DistributionSpec:
    """Parse 'uniform:LO:HI' or 'gaussian:MEAN:STD'."""
    parts = text.split(":")
    if len(parts) != 3:
        raise InvalidParameter(f"distribution must look like uniform:LO:HI or gaussian:MEAN:STD, got {text!r}")
    kind, a, b = parts
    try:
        x, y = float(a), float(b)
    except ValueError as exc:
        raise InvalidParameter(f"bad distribution numbers in {text!r}") from exc
    if kind == "uniform":
        return Uniform(x, y, precision)
    if kind == "gaussian":
        return Gaussian(x, y, precision)
    raise InvalidParameter(f"unknown distribution kind {kind!r}")
