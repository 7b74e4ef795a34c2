# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Monte Carlo kernels (Philox4x32-10 streams, per-user rate draws)."""

import numpy as np

from libc.math cimport exp, log, pow
from libc.stdint cimport int8_t, int64_t, uint32_t, uint64_t
from scipy.special.cython_special cimport ndtri

# keep in sync with _layout.py
cdef enum:
    C_WEB = 0
    C_CS = 1
    C_VR = 2
    WEB_MU = 3
    WEB_SIGMA = 4
    WEB_PLO = 5
    WEB_PSPAN = 6
    WEB_MEAN_IAT = 7
    CS_BITS = 8
    CS_LAMBDA = 9
    VR_BITS = 10
    VR_LAMBDA = 11
    X_LOW = 12
    X_SPAN = 13
    X_NEG_INV_ALPHA = 14
    T_LOW = 15
    T_SPAN = 16
    T_NEG_INV_ALPHA = 17
    N_FLOAT = 18

cdef enum:
    I_NCS = 0
    I_NVR = 1
    I_SLOT = 2
    N_INT = 3

cdef enum:
    KIND_WEB = 0
    KIND_CS = 1
    KIND_VR = 2
    KIND_UHD = 3

cdef double TWO_M52 = 2.220446049250313e-16


cdef struct Cursor:
    uint32_t k0
    uint32_t k1
    uint64_t stream
    uint64_t pos
    uint64_t block
    bint filled
    double u[2]


cdef struct Params:
    double f[N_FLOAT]
    int64_t n_cs
    int64_t n_vr
    uint64_t slot


cdef inline void philox(uint64_t block, uint64_t stream, uint32_t k0, uint32_t k1,
                        uint32_t* out) noexcept nogil:
    cdef uint32_t c0 = <uint32_t>block
    cdef uint32_t c1 = <uint32_t>(block >> 32)
    cdef uint32_t c2 = <uint32_t>stream
    cdef uint32_t c3 = <uint32_t>(stream >> 32)
    cdef uint32_t n0, n2
    cdef uint64_t p0, p1
    cdef int r
    for r in range(10):
        p0 = <uint64_t>0xD2511F53 * c0
        p1 = <uint64_t>0xCD9E8D57 * c2
        n0 = <uint32_t>(p1 >> 32) ^ c1 ^ k0
        n2 = <uint32_t>(p0 >> 32) ^ c3 ^ k1
        c1 = <uint32_t>p1
        c3 = <uint32_t>p0
        c0 = n0
        c2 = n2
        k0 = k0 + <uint32_t>0x9E3779B9
        k1 = k1 + <uint32_t>0xBB67AE85
    out[0] = c0
    out[1] = c1
    out[2] = c2
    out[3] = c3


cdef inline double unit(uint32_t hi, uint32_t lo) noexcept nogil:
    cdef uint64_t k = ((<uint64_t>(hi >> 6)) << 26) | (lo >> 6)
    return (<double>k + 0.5) * TWO_M52


cdef inline void cursor_init(Cursor* c, uint64_t seed, uint64_t stream, uint64_t pos) noexcept nogil:
    c.k0 = <uint32_t>seed
    c.k1 = <uint32_t>(seed >> 32)
    c.stream = stream
    c.pos = pos
    c.block = 0
    c.filled = False


cdef inline double next_uniform(Cursor* c) noexcept nogil:
    cdef uint64_t b = c.pos >> 1
    cdef uint32_t w[4]
    cdef double r
    if not c.filled or b != c.block:
        philox(b, c.stream, c.k0, c.k1, w)
        c.u[0] = unit(w[0], w[1])
        c.u[1] = unit(w[2], w[3])
        c.block = b
        c.filled = True
    r = c.u[c.pos & 1]
    c.pos += 1
    return r


cdef inline double batch_rate(Cursor* c, int64_t n, double bits, double lam) noexcept nogil:
    cdef double s = 0.0
    cdef int64_t k
    for k in range(n):
        s -= log(next_uniform(c))
    return bits / (s / lam)


cdef inline double draw_user(Cursor* c, const Params* p, int8_t* kind) noexcept nogil:
    cdef uint64_t start = c.pos
    cdef double u0 = next_uniform(c)
    cdef double rate, u1, u2, x, t
    if u0 < p.f[C_WEB]:
        kind[0] = KIND_WEB
        u1 = next_uniform(c)
        u2 = next_uniform(c)
        x = 8.0 * exp(p.f[WEB_MU] + p.f[WEB_SIGMA] * ndtri(p.f[WEB_PLO] + u1 * p.f[WEB_PSPAN]))
        rate = x / (-p.f[WEB_MEAN_IAT] * log(u2))
    elif u0 < p.f[C_CS]:
        kind[0] = KIND_CS
        rate = batch_rate(c, p.n_cs, p.f[CS_BITS], p.f[CS_LAMBDA])
    elif u0 < p.f[C_VR]:
        kind[0] = KIND_VR
        rate = batch_rate(c, p.n_vr, p.f[VR_BITS], p.f[VR_LAMBDA])
    else:
        kind[0] = KIND_UHD
        u1 = next_uniform(c)
        u2 = next_uniform(c)
        x = p.f[X_LOW] * pow(1.0 - u1 * p.f[X_SPAN], p.f[X_NEG_INV_ALPHA])
        t = p.f[T_LOW] * pow(1.0 - u2 * p.f[T_SPAN], p.f[T_NEG_INV_ALPHA])
        rate = x / t
    c.pos = start + p.slot
    return rate


cdef Params unpack(const double[::1] fp, const int64_t[::1] ip) except *:
    cdef Params p
    cdef int i
    if fp.shape[0] != N_FLOAT or ip.shape[0] != N_INT:
        raise ValueError("parameter vectors have the wrong length")
    for i in range(N_FLOAT):
        p.f[i] = fp[i]
    p.n_cs = ip[I_NCS]
    p.n_vr = ip[I_NVR]
    p.slot = <uint64_t>ip[I_SLOT]
    return p


def uniforms(uint64_t seed, uint64_t stream, uint64_t start, Py_ssize_t n):
    """``n`` consecutive uniforms of ``stream`` starting at position ``start``."""
    out = np.empty(max(n, 0))
    cdef double[::1] o = out
    cdef Cursor c
    cdef Py_ssize_t i
    with nogil:
        cursor_init(&c, seed, stream, start)
        for i in range(n):
            o[i] = next_uniform(&c)
    return out


def user_rates(uint64_t seed, uint64_t stream, uint64_t start, Py_ssize_t n,
               const double[::1] fp, const int64_t[::1] ip):
    """``n`` sequential user draws from one stream, first slot at ``start``."""
    cdef Params p = unpack(fp, ip)
    rates = np.empty(n)
    kinds = np.empty(n, dtype=np.int8)
    cdef double[::1] r = rates
    cdef int8_t[::1] k = kinds
    cdef Cursor c
    cdef Py_ssize_t i
    with nogil:
        cursor_init(&c, seed, stream, start)
        for i in range(n):
            r[i] = draw_user(&c, &p, &k[i])
    return rates, kinds


def aggregate(uint64_t seed, uint64_t run_start, uint64_t run_stop, Py_ssize_t n_ue,
              const double[::1] fp, const int64_t[::1] ip):
    """Per-run sum of ``n_ue`` user rates; run ``i`` reads stream ``i``."""
    cdef Params p = unpack(fp, ip)
    cdef Py_ssize_t n = <Py_ssize_t>(run_stop - run_start)
    totals = np.empty(n)
    cdef double[::1] out = totals
    cdef Cursor c
    cdef Py_ssize_t i, j
    cdef double s
    cdef int8_t kind
    with nogil:
        for i in range(n):
            cursor_init(&c, seed, run_start + <uint64_t>i, 0)
            s = 0.0
            for j in range(n_ue):
                s += draw_user(&c, &p, &kind)
            out[i] = s
    return totals
