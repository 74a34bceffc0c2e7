# Compiled generation kernels: Philox4x32x10 block streaming, the MRG32k3a
# recurrence and the Box-Muller pair transform. Mirrors _fallback.py; integer
# output is bit-identical, float output agrees to libm-vs-numpy ulps.

import numpy as np

from libc.math cimport cos, log, sin, sqrt
from libc.stdint cimport int64_t, uint32_t, uint64_t

IMPL = "core"

cdef uint32_t M0 = 0xD2511F53u
cdef uint32_t M1 = 0xCD9E8D57u
cdef uint32_t W0 = 0x9E3779B9u
cdef uint32_t W1 = 0xBB67AE85u

cdef double TWO_PI = 6.283185307179586


cdef inline void _philox_block(uint32_t k0, uint32_t k1, uint32_t* ctr, uint32_t* out) noexcept nogil:
    cdef uint32_t c0 = ctr[0], c1 = ctr[1], c2 = ctr[2], c3 = ctr[3]
    cdef uint32_t t0, t2
    cdef uint64_t p0, p1
    cdef int i
    for i in range(10):
        p0 = (<uint64_t> M0) * c0
        p1 = (<uint64_t> M1) * c2
        t0 = (<uint32_t> (p1 >> 32)) ^ c1 ^ k0
        t2 = (<uint32_t> (p0 >> 32)) ^ c3 ^ k1
        c1 = <uint32_t> p1
        c3 = <uint32_t> p0
        c0 = t0
        c2 = t2
        k0 += W0
        k1 += W1
    out[0] = c0
    out[1] = c1
    out[2] = c2
    out[3] = c3


def philox_fill(k0, k1, b0, b1, b2, b3, offset, n):
    """n Philox stream words starting at word `offset` of block (b0..b3)."""
    out = np.empty(n, dtype=np.uint32)
    cdef uint32_t[::1] view = out
    cdef uint32_t kk0 = <uint32_t> k0, kk1 = <uint32_t> k1
    cdef uint32_t ctr[4]
    cdef uint32_t block[4]
    cdef Py_ssize_t total = n, written = 0
    cdef int lane = offset
    ctr[0] = <uint32_t> b0
    ctr[1] = <uint32_t> b1
    ctr[2] = <uint32_t> b2
    ctr[3] = <uint32_t> b3
    with nogil:
        while written < total:
            _philox_block(kk0, kk1, ctr, block)
            while lane < 4 and written < total:
                view[written] = block[lane]
                written += 1
                lane += 1
            lane = 0
            # 128-bit counter increment with lane carry
            ctr[0] += 1
            if ctr[0] == 0:
                ctr[1] += 1
                if ctr[1] == 0:
                    ctr[2] += 1
                    if ctr[2] == 0:
                        ctr[3] += 1
    return out


def mrg_fill(s10, s11, s12, s20, s21, s22, n):
    """n MRG32k3a words plus the advanced recurrence windows."""
    cdef int64_t m1 = 4294967087, m2 = 4294944443
    cdef int64_t a12 = 1403580, a13n = 810728, a21 = 527612, a23n = 1370589
    cdef int64_t x10 = s10, x11 = s11, x12 = s12
    cdef int64_t x20 = s20, x21 = s21, x22 = s22
    cdef int64_t p1, p2, z
    out = np.empty(n, dtype=np.uint32)
    cdef uint32_t[::1] view = out
    cdef Py_ssize_t i, total = n
    with nogil:
        for i in range(total):
            p1 = (a12 * x11 - a13n * x10) % m1
            if p1 < 0:
                p1 += m1
            x10 = x11
            x11 = x12
            x12 = p1
            p2 = (a21 * x22 - a23n * x20) % m2
            if p2 < 0:
                p2 += m2
            x20 = x21
            x21 = x22
            x22 = p2
            z = p1 - p2
            if z < 0:
                z += m1
            view[i] = <uint32_t> z
    return out, (x10, x11, x12), (x20, x21, x22)


def box_muller(u1, u2):
    """Map unit-uniform pairs to standard-normal pairs (u1 pre-flipped to (0, 1])."""
    cdef double[::1] a = np.ascontiguousarray(u1, dtype=np.float64)
    cdef double[::1] b = np.ascontiguousarray(u2, dtype=np.float64)
    cdef Py_ssize_t m = a.shape[0]
    z0 = np.empty(m, dtype=np.float64)
    z1 = np.empty(m, dtype=np.float64)
    cdef double[::1] v0 = z0
    cdef double[::1] v1 = z1
    cdef double r, t
    cdef Py_ssize_t i
    with nogil:
        for i in range(m):
            r = sqrt(-2.0 * log(a[i]))
            t = TWO_PI * b[i]
            v0[i] = r * cos(t)
            v1[i] = r * sin(t)
    return z0, z1
