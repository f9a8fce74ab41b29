"""Compiled inner loops for residue-mode series arithmetic.

All kernels take and return ``int64`` arrays whose entries lie in ``[0, M)``.
They assume ``M < 2**31`` so that a single product fits in 63 bits; callers
route larger moduli through the pure-Python paths in :mod:`mpcong.series`.
"""

from __future__ import annotations

import numba
import numpy as np

KERNEL_MODULUS_LIMIT = 1 << 31


@numba.njit(cache=True)
def divide_sparse(num, idx, vals, inv_lead, M):
    """Solve ``out * d = num`` where ``d = 1*lead + sum vals[j] q**idx[j]``.

    ``idx`` is strictly increasing and positive; ``inv_lead`` inverts the
    constant term of ``d`` modulo ``M``.
    """
    n_tot = num.shape[0]
    out = np.empty(n_tot, np.int64)
    k = idx.shape[0]
    for n in range(n_tot):
        acc = num[n]
        for j in range(k):
            g = idx[j]
            if g > n:
                break
            acc = (acc - vals[j] * out[n - g]) % M
        out[n] = (acc * inv_lead) % M
    return out


@numba.njit(cache=True)
def divide_signed(num, idx, sgn, M):
    """Like :func:`divide_sparse` for a divisor ``1 + sum sgn[j] q**idx[j]``
    with ``sgn[j]`` in ``{-1, +1}``; one reduction per output coefficient.

    Requires ``len(idx) * M < 2**62``.
    """
    n_tot = num.shape[0]
    out = np.empty(n_tot, np.int64)
    k = idx.shape[0]
    for n in range(n_tot):
        acc = num[n]
        for j in range(k):
            g = idx[j]
            if g > n:
                break
            if sgn[j] > 0:
                acc -= out[n - g]
            else:
                acc += out[n - g]
        out[n] = acc % M
    return out


@numba.njit(cache=True)
def mul_sparse(dense, idx, vals, length, M):
    """First ``length`` coefficients of ``dense * sum vals[j] q**idx[j]``."""
    out = np.zeros(length, np.int64)
    nd = dense.shape[0]
    for j in range(idx.shape[0]):
        g = idx[j]
        v = vals[j]
        if g >= length:
            continue
        top = min(length - g, nd)
        for i in range(top):
            out[g + i] = (out[g + i] + v * dense[i]) % M
    return out
