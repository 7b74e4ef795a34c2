"""Pure numpy implementation of the Monte Carlo kernels.

Same contract as the compiled ``_kernels`` extension. Uniform variates are
bit-identical between the two; derived rates agree to rounding because the
two use different ``log``/``exp``/``pow`` implementations.
"""

import numpy as np
from scipy.special import ndtri

from ._layout import (
    CS_BITS, CS_LAMBDA, C_CS, C_VR, C_WEB, I_NCS, I_NVR, I_SLOT, KIND_CS,
    KIND_UHD, KIND_VR, KIND_WEB, T_LOW, T_NEG_INV_ALPHA, T_SPAN, VR_BITS,
    VR_LAMBDA, WEB_MEAN_IAT, WEB_MU, WEB_PLO, WEB_PSPAN, WEB_SIGMA, X_LOW,
    X_NEG_INV_ALPHA, X_SPAN,
)

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = 0x9E3779B9
_W1 = 0xBB67AE85
_LO32 = np.uint64(0xFFFFFFFF)
_S6 = np.uint64(6)
_S26 = np.uint64(26)
_S32 = np.uint64(32)
_TWO_M52 = 2.0 ** -52


def philox4x32(block, stream, seed):
    """Philox4x32-10 bijection on the counter (block lo/hi, stream lo/hi).

    Returns the four 32-bit output words as uint64 arrays.
    """
    block = np.asarray(block, dtype=np.uint64)
    stream = np.asarray(stream, dtype=np.uint64)
    block, stream = np.broadcast_arrays(block, stream)
    c0 = block & _LO32
    c1 = block >> _S32
    c2 = stream & _LO32
    c3 = stream >> _S32
    k0 = seed & 0xFFFFFFFF
    k1 = (seed >> 32) & 0xFFFFFFFF
    for _ in range(10):
        p0 = _M0 * c0
        p1 = _M1 * c2
        c0, c1, c2, c3 = (
            (p1 >> _S32) ^ c1 ^ np.uint64(k0),
            p1 & _LO32,
            (p0 >> _S32) ^ c3 ^ np.uint64(k1),
            p0 & _LO32,
        )
        k0 = (k0 + _W0) & 0xFFFFFFFF
        k1 = (k1 + _W1) & 0xFFFFFFFF
    return c0, c1, c2, c3


def _unit(hi, lo):
    # 52 random bits + 0.5 ulp offset: exactly representable, strictly inside (0, 1)
    k = ((hi >> _S6) << _S26) | (lo >> _S6)
    return (k.astype(np.float64) + 0.5) * _TWO_M52


def uniforms_at(seed, stream, index):
    """Uniform variates at arbitrary positions of one or many streams."""
    index = np.asarray(index, dtype=np.uint64)
    w0, w1, w2, w3 = philox4x32(index >> np.uint64(1), stream, seed)
    odd = (index & np.uint64(1)).astype(bool)
    return np.where(odd, _unit(w2, w3), _unit(w0, w1))


def uniforms(seed, stream, start, n):
    """``n`` consecutive uniforms of ``stream`` starting at position ``start``."""
    if n <= 0:
        return np.empty(0)
    first = start >> 1
    last = (start + n - 1) >> 1
    blocks = np.arange(last - first + 1, dtype=np.uint64) + np.uint64(first)
    w0, w1, w2, w3 = philox4x32(blocks, stream, seed)
    out = np.empty(2 * blocks.size)
    out[0::2] = _unit(w0, w1)
    out[1::2] = _unit(w2, w3)
    off = start & 1
    return out[off:off + n]


def _batch_rates(seed, streams, bases, n, batch_bits, lam):
    idx = bases[:, None] + np.arange(1, n + 1, dtype=np.uint64)
    u = uniforms_at(seed, streams[:, None], idx)
    s = np.zeros(len(bases))
    for k in range(n):
        s -= np.log(u[:, k])
    return batch_bits / (s / lam)


def draw_users(seed, streams, bases, fp, ip):
    """Rates and traffic kinds for user draws occupying slots at ``bases``."""
    streams = np.asarray(streams, dtype=np.uint64)
    bases = np.asarray(bases, dtype=np.uint64)
    u0 = uniforms_at(seed, streams, bases)
    kinds = np.full(u0.shape, KIND_UHD, dtype=np.int8)
    kinds[u0 < fp[C_VR]] = KIND_VR
    kinds[u0 < fp[C_CS]] = KIND_CS
    kinds[u0 < fp[C_WEB]] = KIND_WEB
    rates = np.empty(u0.shape)

    m = kinds == KIND_WEB
    if m.any():
        s, b = streams[m], bases[m]
        u1 = uniforms_at(seed, s, b + np.uint64(1))
        u2 = uniforms_at(seed, s, b + np.uint64(2))
        y = fp[WEB_MU] + fp[WEB_SIGMA] * ndtri(fp[WEB_PLO] + u1 * fp[WEB_PSPAN])
        rates[m] = 8.0 * np.exp(y) / (-fp[WEB_MEAN_IAT] * np.log(u2))

    for kind, nk, bits, lam in (
        (KIND_CS, ip[I_NCS], fp[CS_BITS], fp[CS_LAMBDA]),
        (KIND_VR, ip[I_NVR], fp[VR_BITS], fp[VR_LAMBDA]),
    ):
        m = kinds == kind
        if m.any():
            rates[m] = _batch_rates(seed, streams[m], bases[m], int(nk), bits, lam)

    m = kinds == KIND_UHD
    if m.any():
        s, b = streams[m], bases[m]
        u1 = uniforms_at(seed, s, b + np.uint64(1))
        u2 = uniforms_at(seed, s, b + np.uint64(2))
        x = fp[X_LOW] * np.power(1.0 - u1 * fp[X_SPAN], fp[X_NEG_INV_ALPHA])
        t = fp[T_LOW] * np.power(1.0 - u2 * fp[T_SPAN], fp[T_NEG_INV_ALPHA])
        rates[m] = x / t
    return rates, kinds


def user_rates(seed, stream, start, n, fp, ip):
    """``n`` sequential user draws from one stream, first slot at ``start``."""
    slot = int(ip[I_SLOT])
    bases = np.uint64(start) + np.arange(n, dtype=np.uint64) * np.uint64(slot)
    return draw_users(seed, np.full(n, stream, dtype=np.uint64), bases, fp, ip)


def aggregate(seed, run_start, run_stop, n_ue, fp, ip):
    """Per-run sum of ``n_ue`` user rates; run ``i`` reads stream ``i``."""
    runs = np.arange(run_start, run_stop, dtype=np.uint64)
    slot = int(ip[I_SLOT])
    totals = np.zeros(runs.size)
    for j in range(n_ue):
        bases = np.full(runs.size, j * slot, dtype=np.uint64)
        rates, _ = draw_users(seed, runs, bases, fp, ip)
        totals += rates
    return totals
