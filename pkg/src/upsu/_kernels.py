"""Hot modular-arithmetic kernels over ``uint64`` arrays.

Every kernel exists twice: a loop version compiled with numba and a
vectorised numpy version built from 32-bit limb products.  The numba path is
used when numba imports and ``UPSU_DISABLE_NUMBA`` is unset; both paths are
importable explicitly (``numba_kernels`` / ``numpy_kernels``) so tests and the
benchmark can compare them.

Moduli must be odd and below 2**62.  Multiplication uses Montgomery
reduction with R = 2**64: ``mont_mul(a, b) = a*b/R mod p``.
"""

import os
from types import SimpleNamespace

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and os.environ.get("UPSU_DISABLE_NUMBA", "").lower() not in (
    "1",
    "true",
    "yes",
)

U64 = np.uint64
_M32 = U64(0xFFFFFFFF)
_S32 = U64(32)
_ONE = U64(1)
_ZERO = U64(0)


def montgomery_constants(p):
    """Return ``(pinv, r2)`` with ``pinv = -p^-1 mod 2^64`` and ``r2 = 2^128 mod p``."""
    if p % 2 == 0 or p >= 1 << 62 or p < 3:
        raise ValueError(f"modulus must be odd and in [3, 2^62), got {p}")
    pinv = (-pow(p, -1, 1 << 64)) % (1 << 64)
    r2 = pow(2, 128, p)
    return U64(pinv), U64(r2)


# --------------------------------------------------------------------------
# numpy path


def _np_mul128(a, b):
    a_lo = a & _M32
    a_hi = a >> _S32
    b_lo = b & _M32
    b_hi = b >> _S32
    ll = a_lo * b_lo
    lh = a_lo * b_hi
    hl = a_hi * b_lo
    hh = a_hi * b_hi
    mid = (ll >> _S32) + (lh & _M32) + (hl & _M32)
    lo = (ll & _M32) | ((mid & _M32) << _S32)
    hi = hh + (lh >> _S32) + (hl >> _S32) + (mid >> _S32)
    return hi, lo


def np_mont_mul(a, b, p, pinv):
    a = np.asarray(a, dtype=U64)
    b = np.asarray(b, dtype=U64)
    with np.errstate(over="ignore"):
        hi, lo = _np_mul128(a, b)
        m = lo * pinv
        mh, _ = _np_mul128(m, np.broadcast_to(p, m.shape))
        t = hi + mh + (lo != _ZERO).astype(U64)
    return np.where(t >= p, t - p, t)


def np_mulmod(a, b, p, pinv, r2):
    return np_mont_mul(np_mont_mul(a, b, p, pinv), r2, p, pinv)


def _bitrev_indices(n):
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.int64)
    for k in range(bits):
        rev |= ((idx >> k) & 1) << (bits - 1 - k)
    return rev


def np_ntt(a, tw, p, pinv):
    """Forward transform along axis 0 of an ``(n, s)`` array; returns a new array."""
    n, s = a.shape
    out = a[_bitrev_indices(n)]
    h = 1
    while h < n:
        blocks = out.reshape(n // (2 * h), 2, h, s)
        u = blocks[:, 0]
        v = np_mont_mul(blocks[:, 1], tw[h : 2 * h].reshape(1, h, 1), p, pinv)
        x = u + v
        x = np.where(x >= p, x - p, x)
        y = u + (p - v)
        y = np.where(y >= p, y - p, y)
        out = np.stack([x, y], axis=1).reshape(n, s)
        h *= 2
    return out


def np_conv(a, b, p, pinv, r2):
    """Schoolbook convolution of ``(na, s)`` and ``(nb, s)`` along axis 0."""
    if a.shape[0] > b.shape[0]:
        a, b = b, a
    na, nb = a.shape[0], b.shape[0]
    out = np.zeros((na + nb - 1, b.shape[1]), dtype=U64)
    for i in range(na):
        t = np_mont_mul(a[i], b, p, pinv)
        seg = out[i : i + nb] + t
        out[i : i + nb] = np.where(seg >= p, seg - p, seg)
    return np_mont_mul(out, r2, p, pinv)


numpy_kernels = SimpleNamespace(
    name="numpy", mont_mul=np_mont_mul, mulmod=np_mulmod, ntt=np_ntt, conv=np_conv
)


# --------------------------------------------------------------------------
# numba path

if HAVE_NUMBA:
    _njit = numba.njit(cache=True, inline="always")

    @_njit
    def _mulhi(a, b):
        a_lo = a & _M32
        a_hi = a >> _S32
        b_lo = b & _M32
        b_hi = b >> _S32
        ll = a_lo * b_lo
        lh = a_lo * b_hi
        hl = a_hi * b_lo
        mid = (ll >> _S32) + (lh & _M32) + (hl & _M32)
        return a_hi * b_hi + (lh >> _S32) + (hl >> _S32) + (mid >> _S32)

    @_njit
    def _mont_mul1(a, b, p, pinv):
        lo = a * b
        hi = _mulhi(a, b)
        m = lo * pinv
        t = hi + _mulhi(m, p)
        if lo != _ZERO:
            t += _ONE
        if t >= p:
            t -= p
        return t

    @numba.njit(cache=True)
    def _nb_mont_mul_flat(a, b, p, pinv):
        out = np.empty(a.size, dtype=np.uint64)
        for i in range(a.size):
            out[i] = _mont_mul1(a[i], b[i], p, pinv)
        return out

    @numba.njit(cache=True)
    def _nb_mulmod_flat(a, b, p, pinv, r2):
        out = np.empty(a.size, dtype=np.uint64)
        for i in range(a.size):
            out[i] = _mont_mul1(_mont_mul1(a[i], b[i], p, pinv), r2, p, pinv)
        return out

    @numba.njit(cache=True)
    def _nb_ntt_inplace(a, tw, p, pinv):
        n, s = a.shape
        j = 0
        for i in range(1, n):
            bit = n >> 1
            while j & bit:
                j ^= bit
                bit >>= 1
            j |= bit
            if i < j:
                for c in range(s):
                    tmp = a[i, c]
                    a[i, c] = a[j, c]
                    a[j, c] = tmp
        h = 1
        while h < n:
            for start in range(0, n, 2 * h):
                for k in range(h):
                    w = tw[h + k]
                    r0 = start + k
                    r1 = r0 + h
                    for c in range(s):
                        u = a[r0, c]
                        v = _mont_mul1(a[r1, c], w, p, pinv)
                        x = u + v
                        if x >= p:
                            x -= p
                        y = u + (p - v)
                        if y >= p:
                            y -= p
                        a[r0, c] = x
                        a[r1, c] = y
            h *= 2

    @numba.njit(cache=True)
    def _nb_conv(a, b, p, pinv, r2):
        na, s = a.shape
        nb = b.shape[0]
        out = np.zeros((na + nb - 1, s), dtype=np.uint64)
        for i in range(na):
            for j in range(nb):
                for c in range(s):
                    t = out[i + j, c] + _mont_mul1(a[i, c], b[j, c], p, pinv)
                    if t >= p:
                        t -= p
                    out[i + j, c] = t
        for i in range(na + nb - 1):
            for c in range(s):
                out[i, c] = _mont_mul1(out[i, c], r2, p, pinv)
        return out

    def nb_mont_mul(a, b, p, pinv):
        a, b = np.broadcast_arrays(np.asarray(a, dtype=U64), np.asarray(b, dtype=U64))
        shape = a.shape
        out = _nb_mont_mul_flat(np.ascontiguousarray(a).ravel(), np.ascontiguousarray(b).ravel(), U64(p), U64(pinv))
        return out.reshape(shape)

    def nb_mulmod(a, b, p, pinv, r2):
        a, b = np.broadcast_arrays(np.asarray(a, dtype=U64), np.asarray(b, dtype=U64))
        shape = a.shape
        out = _nb_mulmod_flat(
            np.ascontiguousarray(a).ravel(), np.ascontiguousarray(b).ravel(), U64(p), U64(pinv), U64(r2)
        )
        return out.reshape(shape)

    def nb_ntt(a, tw, p, pinv):
        out = np.array(a, dtype=U64, order="C", copy=True)
        _nb_ntt_inplace(out, tw, U64(p), U64(pinv))
        return out

    def nb_conv(a, b, p, pinv, r2):
        return _nb_conv(
            np.ascontiguousarray(a, dtype=U64), np.ascontiguousarray(b, dtype=U64), U64(p), U64(pinv), U64(r2)
        )

    numba_kernels = SimpleNamespace(
        name="numba", mont_mul=nb_mont_mul, mulmod=nb_mulmod, ntt=nb_ntt, conv=nb_conv
    )
else:  # pragma: no cover
    numba_kernels = None


active = numba_kernels if USE_NUMBA else numpy_kernels
