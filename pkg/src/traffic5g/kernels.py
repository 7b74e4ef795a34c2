"""Monte Carlo kernel backend, chosen once at import.

The compiled ``_kernels`` extension is used when it was built; otherwise the
numpy implementation in ``_fallback`` takes over. Setting the environment
variable ``TRAFFIC5G_PURE_PYTHON=1`` forces the fallback.
"""

import os

import numpy as np
from scipy.special import ndtr

from . import _fallback
from ._layout import (
    CS_BITS, CS_LAMBDA, C_CS, C_VR, C_WEB, I_NCS, I_NVR, I_SLOT, N_FLOAT,
    N_INT, T_LOW, T_NEG_INV_ALPHA, T_SPAN, VR_BITS, VR_LAMBDA, WEB_MEAN_IAT,
    WEB_MU, WEB_PLO, WEB_PSPAN, WEB_SIGMA, X_LOW, X_NEG_INV_ALPHA, X_SPAN,
)

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

if _compiled is not None and not os.environ.get("TRAFFIC5G_PURE_PYTHON"):
    backend = _compiled
    BACKEND = "compiled"
else:
    backend = _fallback
    BACKEND = "python"


def available_backends():
    """Mapping of backend name to module for every importable backend."""
    out = {"python": _fallback}
    if _compiled is not None:
        out["compiled"] = _compiled
    return out


def slot_size(n_cs, n_vr):
    """Uniforms reserved per user draw: selector + the largest per-type need."""
    return 1 + max(2, int(n_cs), int(n_vr))


def pack_mixture(rates, web, cs, vr, uhd):
    """Flatten engaging rates and per-type parameters for the kernels.

    Returns ``(fp, ip)``: a float64 vector and an int64 vector laid out as in
    ``_layout``.
    """
    fp = np.zeros(N_FLOAT)
    ip = np.zeros(N_INT, dtype=np.int64)
    weights = [rates.p_wb, rates.p_cs, rates.p_vr, rates.p_uhd]
    c = list(np.cumsum(weights[:3]))
    # rounding must never route a draw to a trailing zero-weight type
    last = max(i for i, w in enumerate(weights) if w > 0)
    for i in range(last, 3):
        c[i] = 1.0
    fp[C_WEB], fp[C_CS], fp[C_VR] = c

    pk = web.packet
    z_lo = (np.log(pk.a_low) - pk.mu) / pk.sigma
    z_up = (np.log(pk.a_up) - pk.mu) / pk.sigma
    fp[WEB_MU] = pk.mu
    fp[WEB_SIGMA] = pk.sigma
    fp[WEB_PLO] = ndtr(z_lo)
    fp[WEB_PSPAN] = ndtr(z_up) - ndtr(z_lo)
    fp[WEB_MEAN_IAT] = web.iat.mean_iat

    fp[CS_BITS] = cs.batch_n * cs.packet_size
    fp[CS_LAMBDA] = cs.rate_lambda
    fp[VR_BITS] = vr.batch_n * vr.packet_size
    fp[VR_LAMBDA] = vr.rate_lambda

    for (lo, span, nia), law in ((X_LOW, X_SPAN, X_NEG_INV_ALPHA), uhd.packet), \
            ((T_LOW, T_SPAN, T_NEG_INV_ALPHA), uhd.iat):
        fp[lo] = law.a_low
        fp[span] = -np.expm1(law.alpha * np.log(law.a_low / law.a_up))
        fp[nia] = -1.0 / law.alpha

    ip[I_NCS] = cs.batch_n
    ip[I_NVR] = vr.batch_n
    ip[I_SLOT] = slot_size(cs.batch_n, vr.batch_n)
    return fp, ip
