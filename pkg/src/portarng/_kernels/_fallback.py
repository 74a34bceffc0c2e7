"""Numpy implementations of the hot generation kernels.

Selected by `portarng._kernels` whenever the compiled core is unavailable
(or forced via PORTARNG_KERNELS=fallback). Integer streams are bit-identical
to the compiled core; Box-Muller output may differ from it in the last ulp
because numpy's vectorized log/cos/sin are not the libm ones.
"""

import numpy as np

IMPL = "fallback"

_M0 = 0xD2511F53
_M1 = 0xCD9E8D57
_W0 = 0x9E3779B9
_W1 = 0xBB67AE85

_MASK32 = 0xFFFFFFFF
_MASK64 = 0xFFFFFFFFFFFFFFFF

_TWO_PI = 6.283185307179586

# Blocks per internal chunk; bounds temporary-array memory at ~20 MB.
_CHUNK_BLOCKS = 1 << 18


def _philox_blocks(k0, k1, start_block, nblocks):
    """Output blocks for `nblocks` consecutive counters as a (nblocks, 4) array."""
    idx = np.arange(nblocks, dtype=np.uint64)
    low0 = np.uint64(start_block & _MASK64)
    hi0 = np.uint64((start_block >> 64) & _MASK64)
    low = low0 + idx  # wraps mod 2**64; carry detected below
    hi = hi0 + (low < low0).astype(np.uint64)
    c0 = (low & np.uint64(_MASK32)).astype(np.uint64)
    c1 = (low >> np.uint64(32)).astype(np.uint64)
    c2 = (hi & np.uint64(_MASK32)).astype(np.uint64)
    c3 = (hi >> np.uint64(32)).astype(np.uint64)

    m0 = np.uint64(_M0)
    m1 = np.uint64(_M1)
    mask = np.uint64(_MASK32)
    shift = np.uint64(32)
    for i in range(10):
        rk0 = np.uint64((k0 + i * _W0) & _MASK32)
        rk1 = np.uint64((k1 + i * _W1) & _MASK32)
        p0 = m0 * c0
        p1 = m1 * c2
        c0 = (p1 >> shift) ^ c1 ^ rk0
        c1 = p1 & mask
        c2 = (p0 >> shift) ^ c3 ^ rk1
        c3 = p0 & mask

    out = np.empty((nblocks, 4), dtype=np.uint32)
    out[:, 0] = c0.astype(np.uint32)
    out[:, 1] = c1.astype(np.uint32)
    out[:, 2] = c2.astype(np.uint32)
    out[:, 3] = c3.astype(np.uint32)
    return out


def philox_fill(k0, k1, b0, b1, b2, b3, offset, n):
    """n Philox stream words starting at word `offset` of block (b0..b3)."""
    out = np.empty(n, dtype=np.uint32)
    block = b0 | b1 << 32 | b2 << 64 | b3 << 96
    filled = 0
    pos = offset
    while filled < n:
        take = min(n - filled, _CHUNK_BLOCKS * 4 - pos)
        nblocks = (pos + take + 3) // 4
        flat = _philox_blocks(k0, k1, block, nblocks).ravel()
        out[filled:filled + take] = flat[pos:pos + take]
        filled += take
        block = (block + nblocks) % (1 << 128)
        pos = 0
    return out


def mrg_fill(s10, s11, s12, s20, s21, s22, n):
    """n MRG32k3a words plus the advanced recurrence windows."""
    m1 = 4294967087
    m2 = 4294944443
    a12 = 1403580
    a13n = 810728
    a21 = 527612
    a23n = 1370589
    out = np.empty(n, dtype=np.uint32)
    for i in range(n):
        p1 = (a12 * s11 - a13n * s10) % m1
        s10, s11, s12 = s11, s12, p1
        p2 = (a21 * s22 - a23n * s20) % m2
        s20, s21, s22 = s21, s22, p2
        out[i] = (p1 - p2) % m1
    return out, (s10, s11, s12), (s20, s21, s22)


def box_muller(u1, u2):
    """Map unit-uniform pairs to standard-normal pairs.

    Expects float64 arrays with u1 already flipped to keep the log argument
    in (0, 1]; callers pass 1 - u where u came from the 24-bit word mapping.
    """
    r = np.sqrt(-2.0 * np.log(u1))
    t = _TWO_PI * u2
    return r * np.cos(t), r * np.sin(t)
