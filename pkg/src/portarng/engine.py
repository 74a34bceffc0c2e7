"""Counter-based and recurrence-based pseudorandom engines.

Two engines are provided. Philox4x32x10 is a counter-based generator: every
128-bit counter value maps through a 10-round mix to a block of four 32-bit
words, so jumping to an arbitrary stream position costs O(1). MRG32k3a is
L'Ecuyer's combined multiple recursive generator; it walks two order-3 modular
recurrences and has no cheap skip-ahead here.

Engine states are plain immutable values. Every operation returns a new state;
nothing is mutated, so states can be copied or moved across threads freely.
Concurrent use of a single state object is not supported (and not needed:
parallel generation partitions the stream with `skip_ahead`).

Engines are deliberately restricted to a single scalar 64-bit seed. There is
no copy-construction of a live stream and no initializer-list seeding,
mirroring the host RNG libraries this layer models.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np

from . import _kernels
from .errors import UnsupportedEngine

MASK32 = 0xFFFFFFFF
MASK64 = 0xFFFFFFFFFFFFFFFF

# Philox4x32x10 round constants: S-box multipliers and per-round Weyl key bumps.
PHILOX_M0 = 0xD2511F53
PHILOX_M1 = 0xCD9E8D57
PHILOX_W0 = 0x9E3779B9
PHILOX_W1 = 0xBB67AE85
PHILOX_ROUNDS = 10

# MRG32k3a moduli and recurrence coefficients.
MRG_M1 = 4294967087
MRG_M2 = 4294944443
MRG_A12 = 1403580
MRG_A13N = 810728
MRG_A21 = 527612
MRG_A23N = 1370589

# Zero seeds would freeze the MRG recurrence; fall back to this classic value.
MRG_DEFAULT_SEED = 12345


class EngineKind(enum.Enum):
    PHILOX4X32X10 = "philox"
    MRG32K3A = "mrg32k3a"


@dataclass(frozen=True)
class PhiloxState:
    """Philox stream position: key pair plus 128-bit block counter.

    `counter` holds four 32-bit lanes, lane 0 least significant, and always
    points at the next block to generate. `lane_index` walks the four words of
    the previously generated block; the value 4 means no block is buffered and
    the next word starts a fresh block at `counter`. `cached_block` may be
    None even for lane_index < 4 (after a skip) and is then regenerated
    lazily from `counter - 1`.
    """

    key: Tuple[int, int]
    counter: Tuple[int, int, int, int]
    lane_index: int
    cached_block: Optional[Tuple[int, int, int, int]] = None


@dataclass(frozen=True)
class Mrg32k3aState:
    """MRG32k3a recurrence windows; components below their modulus, not all zero."""

    s1: Tuple[int, int, int]
    s2: Tuple[int, int, int]


EngineState = Union[PhiloxState, Mrg32k3aState]


def philox_block(key: Tuple[int, int], counter: Tuple[int, int, int, int]) -> Tuple[int, int, int, int]:
    """Apply the 10-round Philox4x32 mix to one counter block (pure function).

    Round i uses key (k0 + i*W0, k1 + i*W1) mod 2**32 and maps the counter
    quadruple through the two 32x32->64 multiply S-boxes.
    """
    k0, k1 = key
    c0, c1, c2, c3 = counter
    for i in range(PHILOX_ROUNDS):
        rk0 = (k0 + i * PHILOX_W0) & MASK32
        rk1 = (k1 + i * PHILOX_W1) & MASK32
        p0 = PHILOX_M0 * c0
        p1 = PHILOX_M1 * c2
        c0 = ((p1 >> 32) ^ c1 ^ rk0) & MASK32
        c1 = p1 & MASK32
        c2 = ((p0 >> 32) ^ c3 ^ rk1) & MASK32
        c3 = p0 & MASK32
    return (c0, c1, c2, c3)


def seed_engine(kind: EngineKind, seed: int) -> EngineState:
    """Build a fresh engine state from a single 64-bit seed.

    Philox: key lane 0 takes the low 32 seed bits, lane 1 the high bits;
    the counter starts at zero with no block cached. MRG32k3a: all six state
    components are set to seed mod MRG_M2 (the smaller modulus), or to 12345
    when that residue is zero, keeping the recurrence out of its fixed point.
    """
    seed &= MASK64
    if kind is EngineKind.PHILOX4X32X10:
        return PhiloxState(key=(seed & MASK32, seed >> 32), counter=(0, 0, 0, 0), lane_index=4)
    if kind is EngineKind.MRG32K3A:
        v = seed % MRG_M2
        if v == 0:
            v = MRG_DEFAULT_SEED
        return Mrg32k3aState(s1=(v, v, v), s2=(v, v, v))
    raise UnsupportedEngine(f"unknown engine kind: {kind!r}")


def _ctr_to_int(counter: Tuple[int, int, int, int]) -> int:
    return counter[0] | counter[1] << 32 | counter[2] << 64 | counter[3] << 96


def _int_to_ctr(value: int) -> Tuple[int, int, int, int]:
    value &= (1 << 128) - 1
    return (value & MASK32, (value >> 32) & MASK32, (value >> 64) & MASK32, (value >> 96) & MASK32)


def _position(state: PhiloxState) -> int:
    """Absolute word index of the next output, counted from the seeded origin."""
    c = _ctr_to_int(state.counter)
    if state.lane_index == 4:
        return 4 * c
    return 4 * ((c - 1) % (1 << 128)) + state.lane_index


def _state_at(key: Tuple[int, int], position: int) -> PhiloxState:
    block, lane = divmod(position, 4)
    if lane == 0:
        return PhiloxState(key=key, counter=_int_to_ctr(block), lane_index=4)
    return PhiloxState(key=key, counter=_int_to_ctr(block + 1), lane_index=lane)


def next_word(state: EngineState) -> Tuple[EngineState, int]:
    """Draw one 32-bit word, returning the advanced state.

    Philox words stream the four lanes of each counter block in order.
    MRG32k3a words are the combined output z = (p1 - p2) mod MRG_M1; callers
    wanting a real in [0, 1) conventionally map z / (MRG_M1 + 1), though the
    distributions layer owns all real-valued conversion.
    """
    if isinstance(state, PhiloxState):
        if state.lane_index == 4:
            block = philox_block(state.key, state.counter)
            ctr = _int_to_ctr(_ctr_to_int(state.counter) + 1)
            return PhiloxState(state.key, ctr, 1, block), block[0]
        block = state.cached_block
        if block is None:
            # Lazily rebuild the block this lane position belongs to.
            origin = _int_to_ctr(_ctr_to_int(state.counter) - 1)
            block = philox_block(state.key, origin)
        word = block[state.lane_index]
        return PhiloxState(state.key, state.counter, state.lane_index + 1, block), word
    if isinstance(state, Mrg32k3aState):
        s1, s2 = state.s1, state.s2
        p1 = (MRG_A12 * s1[1] - MRG_A13N * s1[0]) % MRG_M1
        p2 = (MRG_A21 * s2[2] - MRG_A23N * s2[0]) % MRG_M2
        z = (p1 - p2) % MRG_M1
        return Mrg32k3aState((s1[1], s1[2], p1), (s2[1], s2[2], p2)), z
    raise UnsupportedEngine(f"unknown engine state: {type(state).__name__}")


def mrg_unit(z: int) -> float:
    """Canonical unit-interval mapping for raw MRG32k3a words."""
    return z / (MRG_M1 + 1)


def stream_position(state: PhiloxState) -> int:
    """Word index of the next output, counted from the seeded origin.

    Two Philox states with the same key and stream position produce the same
    future output regardless of whether a block is currently cached.
    """
    if not isinstance(state, PhiloxState):
        raise UnsupportedEngine("stream positions are defined for Philox states")
    return _position(state)


def skip_ahead(state: EngineState, n: int) -> EngineState:
    """Advance a Philox stream by n words in O(1).

    The result behaves exactly as if n words had been drawn and discarded.
    MRG32k3a has no offset support here (matrix-power jumps are out of scope)
    and raises UnsupportedEngine.
    """
    if isinstance(state, Mrg32k3aState):
        raise UnsupportedEngine("skip_ahead is only supported for Philox4x32x10")
    if not isinstance(state, PhiloxState):
        raise UnsupportedEngine(f"unknown engine state: {type(state).__name__}")
    if n < 0:
        raise ValueError("skip count must be non-negative")
    if n == 0:
        return state
    return _state_at(state.key, _position(state) + n)


def generate_words(state: EngineState, n: int) -> Tuple[EngineState, np.ndarray]:
    """Draw n words as a uint32 array; equivalent to n `next_word` calls.

    This is the bulk entry point backed by the compiled kernel core (or its
    numpy fallback); the scalar path above is the behavioural reference.
    """
    if n < 0:
        raise ValueError("word count must be non-negative")
    if isinstance(state, PhiloxState):
        if n == 0:
            return state, np.empty(0, dtype=np.uint32)
        pos = _position(state)
        block, lane = divmod(pos, 4)
        words = _kernels.philox_fill(state.key[0], state.key[1], *_int_to_ctr(block), lane, n)
        return _state_at(state.key, pos + n), words
    if isinstance(state, Mrg32k3aState):
        if n == 0:
            return state, np.empty(0, dtype=np.uint32)
        words, s1, s2 = _kernels.mrg_fill(*state.s1, *state.s2, n)
        return Mrg32k3aState(s1, s2), words
    raise UnsupportedEngine(f"unknown engine state: {type(state).__name__}")
