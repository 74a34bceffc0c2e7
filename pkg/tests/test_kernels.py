import numpy as np
import pytest

from portarng import _kernels
from portarng._kernels import _fallback

try:
    from portarng._kernels import _core
except ImportError:
    _core = None

needs_core = pytest.mark.skipif(_core is None, reason="compiled kernel core not built")

from oracles import philox_oracle_words


def test_an_implementation_is_selected():
    assert _kernels.IMPL in ("core", "fallback")


@pytest.mark.parametrize("impl", [_fallback] + ([_core] if _core else []))
def test_philox_fill_matches_oracle(impl):
    key = (0xCAFEF00D, 0x12345678)
    for offset, n in [(0, 1), (0, 4), (1, 9), (3, 2), (2, 4097)]:
        words = impl.philox_fill(key[0], key[1], 0, 0, 0, 0, offset, n)
        assert words.dtype == np.uint32
        assert list(words) == philox_oracle_words(key, offset, n)


@needs_core
def test_philox_fill_core_matches_fallback_bitwise():
    rng = np.random.default_rng(17)
    for _ in range(25):
        k0, k1 = (int(x) for x in rng.integers(0, 2**32, 2))
        b = [int(x) for x in rng.integers(0, 2**32, 4)]
        offset = int(rng.integers(0, 4))
        n = int(rng.integers(1, 3000))
        a = _core.philox_fill(k0, k1, *b, offset, n)
        f = _fallback.philox_fill(k0, k1, *b, offset, n)
        assert np.array_equal(a, f)


@needs_core
def test_philox_fill_counter_carry_agrees():
    args = (1, 2, 0xFFFFFFFF, 0xFFFFFFFF, 0xFFFFFFFF, 0, 2, 20)
    assert np.array_equal(_core.philox_fill(*args), _fallback.philox_fill(*args))


@needs_core
def test_mrg_fill_core_matches_fallback():
    state = (12345,) * 6
    a, a1, a2 = _core.mrg_fill(*state, 5000)
    f, f1, f2 = _fallback.mrg_fill(*state, 5000)
    assert np.array_equal(a, f)
    assert tuple(a1) == tuple(f1) and tuple(a2) == tuple(f2)


@needs_core
def test_box_muller_core_matches_fallback_to_ulps():
    rng = np.random.default_rng(23)
    u1 = 1.0 - rng.integers(0, 2**24, 20000).astype(np.float64) / 2**24
    u2 = rng.integers(0, 2**24, 20000).astype(np.float64) / 2**24
    c0, c1 = _core.box_muller(u1, u2)
    f0, f1 = _fallback.box_muller(u1, u2)
    # libm vs numpy SIMD may differ in the last ulp only
    assert np.allclose(c0, f0, rtol=1e-13, atol=1e-13)
    assert np.allclose(c1, f1, rtol=1e-13, atol=1e-13)


def test_fallback_internal_chunking_is_seamless():
    # span several internal chunks and compare against one unchunked reference
    key = (7, 9)
    n = 4 * _fallback._CHUNK_BLOCKS + 11
    words = _fallback.philox_fill(key[0], key[1], 0, 0, 0, 0, 1, n)
    blocks = _fallback._philox_blocks(key[0], key[1], 0, (1 + n + 3) // 4 + 1).ravel()
    assert np.array_equal(words, blocks[1 : 1 + n])
