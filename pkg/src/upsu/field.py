"""Prime-field arithmetic on ``uint64`` coefficient arrays.

Arrays are laid out ``(coefficients, slots)``: axis 0 indexes powers of Z and
axis 1 indexes independent lanes (batched plaintext slots).  One-dimensional
inputs are treated as a single lane.
"""

from dataclasses import dataclass

import gmpy2
import numpy as np

from . import _kernels

U64 = np.uint64

#: 62-bit prime with p - 1 divisible by 2**20, so transforms up to length 2**20 exist.
DEFAULT_PRIME = 4611686018405367809

#: Degree at or below which multiplication stays schoolbook.
DEFAULT_THRESHOLD = 32


@dataclass(frozen=True)
class ProductCost:
    """Coefficient-level operation counts for one polynomial product.

    ``mul`` counts products of two operand coefficients, ``cmul`` products of
    an operand coefficient by a known constant (transform twiddles) and ``add``
    additions/subtractions.  For a ciphertext x ciphertext product ``mul`` are
    homomorphic products; for cleartext x ciphertext everything touching the
    ciphertext side is a scalar product.
    """

    path: str
    mul: int
    cmul: int
    add: int


class PrimeField:
    """The field F_p together with the fast-multiplication machinery for it."""

    def __init__(self, p=DEFAULT_PRIME, threshold=DEFAULT_THRESHOLD, kernels=None):
        p = int(p)
        if not gmpy2.is_prime(p) or p == 2:
            raise ValueError(f"modulus {p} is not an odd prime")
        if p >= 1 << 62:
            raise ValueError("modulus must be below 2**62")
        self.p = p
        self.threshold = int(threshold)
        self.kern = kernels or _kernels.active
        self._p = U64(p)
        self._pinv, self._r2 = _kernels.montgomery_constants(p)
        self.two_adicity = ((p - 1) & -(p - 1)).bit_length() - 1
        self._root = self._find_two_adic_root() if self.two_adicity else None
        self._tables = {}

    def __repr__(self):
        return f"PrimeField({self.p})"

    def __eq__(self, other):
        return isinstance(other, PrimeField) and other.p == self.p

    def __hash__(self):
        return hash(("PrimeField", self.p))

    @property
    def bits(self):
        return self.p.bit_length()

    # ------------------------------------------------------------ scalars

    def inv(self, x):
        x = int(x) % self.p
        if x == 0:
            raise ZeroDivisionError("0 has no inverse")
        return pow(x, -1, self.p)

    def reduce(self, values):
        """Map arbitrary Python ints into a reduced ``uint64`` array."""
        if isinstance(values, np.ndarray) and values.dtype == U64:
            if values.size and int(values.max()) >= self.p:
                return values % self._p
            return values
        return np.array([int(v) % self.p for v in np.ravel(values)], dtype=U64).reshape(np.shape(values))

    # ------------------------------------------------------------ vectors

    def add(self, a, b):
        s = np.asarray(a, dtype=U64) + np.asarray(b, dtype=U64)
        return np.where(s >= self._p, s - self._p, s)

    def sub(self, a, b):
        a = np.asarray(a, dtype=U64)
        b = np.asarray(b, dtype=U64)
        s = a + (self._p - b)
        return np.where(s >= self._p, s - self._p, s)

    def neg(self, a):
        a = np.asarray(a, dtype=U64)
        return np.where(a == 0, a, self._p - a)

    def mul(self, a, b):
        return self.kern.mulmod(a, b, self._p, self._pinv, self._r2)

    # ------------------------------------------------------------ products

    def _find_two_adic_root(self):
        s = self.two_adicity
        e = (self.p - 1) >> s
        for g in range(2, 1000):
            w = pow(g, e, self.p)
            if pow(w, 1 << (s - 1), self.p) != 1:
                return w
        raise RuntimeError("no 2-adic root of unity found")  # pragma: no cover

    def _to_mont(self, x):
        return (int(x) << 64) % self.p

    def _ntt_tables(self, n):
        tables = self._tables.get(n)
        if tables is None:
            p = self.p
            w = pow(self._root, (1 << self.two_adicity) // n, p)
            tables = (
                self._twiddles(w, n),
                self._twiddles(pow(w, -1, p), n),
                U64((pow(n, -1, p) << 128) % p),
            )
            self._tables[n] = tables
        return tables

    def _twiddles(self, w, n):
        p = self.p
        tw = np.zeros(max(n, 2), dtype=U64)
        h = 1
        while h < n:
            step = pow(w, n // (2 * h), p)
            x = 1
            for j in range(h):
                tw[h + j] = self._to_mont(x)
                x = x * step % p
            h *= 2
        return tw

    def product_path(self, na, nb):
        """Which algorithm :meth:`conv` uses for operands of ``na`` and ``nb`` coefficients."""
        if min(na, nb) <= self.threshold + 1:
            return "naive"
        size = 1 << (na + nb - 2).bit_length()
        if size.bit_length() - 1 <= self.two_adicity:
            return "ntt"
        return "karatsuba"

    def product_cost(self, na, nb, both_encrypted=True):
        """Operation counts of the product as :meth:`conv` carries it out.

        For ``both_encrypted`` the forward transform is applied to both
        operands; otherwise only to the encrypted one (the cleartext transform
        is free for the evaluator).
        """
        if na == 0 or nb == 0:
            return ProductCost("naive", 0, 0, 0)
        path = self.product_path(na, nb)
        if path == "naive":
            return ProductCost(path, na * nb, 0, na * nb - (na + nb - 1))
        if path == "ntt":
            size = 1 << (na + nb - 2).bit_length()
            logn = size.bit_length() - 1
            transforms = 2 if both_encrypted else 1
            butterflies = (size // 2) * logn
            return ProductCost(
                path, size, (transforms + 1) * butterflies + size, (transforms + 1) * 2 * butterflies
            )
        mul, add = _karatsuba_cost(max(na, nb), self.threshold)
        return ProductCost(path, mul, 0, add)

    def conv(self, a, b):
        """Product of two coefficient arrays along axis 0.

        Both arguments are ``(n, s)`` or 1-D; 1-D operands are broadcast
        across the lanes of the other.
        """
        a2, b2, squeeze = self._lanes(a, b)
        na, nb = a2.shape[0], b2.shape[0]
        if na == 0 or nb == 0:
            out = np.zeros((0, a2.shape[1]), dtype=U64)
        else:
            path = self.product_path(na, nb)
            if path == "naive":
                out = self.conv_naive(a2, b2)
            elif path == "ntt":
                out = self._conv_ntt(a2, b2)
            else:
                out = self._conv_karatsuba(a2, b2)
        return out[:, 0] if squeeze else out

    def conv_naive(self, a, b):
        a2, b2, squeeze = self._lanes(a, b)
        if a2.shape[0] == 0 or b2.shape[0] == 0:
            out = np.zeros((0, a2.shape[1]), dtype=U64)
        else:
            out = self.kern.conv(a2, b2, self._p, self._pinv, self._r2)
        return out[:, 0] if squeeze else out

    def _lanes(self, a, b):
        a = np.asarray(a, dtype=U64)
        b = np.asarray(b, dtype=U64)
        squeeze = a.ndim == 1 and b.ndim == 1
        a2 = a.reshape(-1, 1) if a.ndim == 1 else a
        b2 = b.reshape(-1, 1) if b.ndim == 1 else b
        lanes = max(a2.shape[1], b2.shape[1])
        if a2.shape[1] != lanes:
            a2 = np.broadcast_to(a2, (a2.shape[0], lanes))
        if b2.shape[1] != lanes:
            b2 = np.broadcast_to(b2, (b2.shape[0], lanes))
        return np.ascontiguousarray(a2), np.ascontiguousarray(b2), squeeze

    def _conv_ntt(self, a, b):
        na, nb = a.shape[0], b.shape[0]
        lanes = a.shape[1]
        size = 1 << (na + nb - 2).bit_length()
        fwd, inv, scale = self._ntt_tables(size)
        fa = np.zeros((size, lanes), dtype=U64)
        fb = np.zeros((size, lanes), dtype=U64)
        fa[:na] = a
        fb[:nb] = b
        fa = self.kern.ntt(fa, fwd, self._p, self._pinv)
        fb = self.kern.ntt(fb, fwd, self._p, self._pinv)
        prod = self.kern.mont_mul(fa, fb, self._p, self._pinv)
        out = self.kern.ntt(prod, inv, self._p, self._pinv)
        out = self.kern.mont_mul(out[: na + nb - 1], scale, self._p, self._pinv)
        return out

    def _conv_karatsuba(self, a, b):
        na, nb = a.shape[0], b.shape[0]
        if min(na, nb) <= self.threshold + 1:
            return self.conv_naive(a, b)
        half = max(na, nb) // 2
        a0, a1 = a[:half], a[half:]
        b0, b1 = b[:half], b[half:]
        if a1.shape[0] == 0 or b1.shape[0] == 0:
            # unbalanced operands: split the longer one only
            if a1.shape[0] == 0:
                lo, hi = self._conv_karatsuba(a, b0), self._conv_karatsuba(a, b1)
            else:
                lo, hi = self._conv_karatsuba(a0, b), self._conv_karatsuba(a1, b)
            out = np.zeros((na + nb - 1, a.shape[1]), dtype=U64)
            out[: lo.shape[0]] = lo
            out[half : half + hi.shape[0]] = self.add(out[half : half + hi.shape[0]], hi)
            return out
        z0 = self._conv_karatsuba(a0, b0)
        z2 = self._conv_karatsuba(a1, b1)
        sa = _padded_add(self, a0, a1)
        sb = _padded_add(self, b0, b1)
        z1 = self._conv_karatsuba(sa, sb)
        z1 = _padded_sub(self, _padded_sub(self, z1, z0), z2)
        out = np.zeros((na + nb - 1, a.shape[1]), dtype=U64)
        out[: z0.shape[0]] = z0
        seg = out[half : half + z1.shape[0]]
        out[half : half + z1.shape[0]] = self.add(seg, z1[: seg.shape[0]])
        seg = out[2 * half : 2 * half + z2.shape[0]]
        out[2 * half : 2 * half + z2.shape[0]] = self.add(seg, z2[: seg.shape[0]])
        return out

    # ------------------------------------------------------------ sampling

    def random_elements(self, rng, count):
        return rng.field_elements(self.p, count)


def _padded_add(field, x, y):
    n = max(x.shape[0], y.shape[0])
    out = np.zeros((n, x.shape[1]), dtype=U64)
    out[: x.shape[0]] = x
    out[: y.shape[0]] = field.add(out[: y.shape[0]], y)
    return out


def _padded_sub(field, x, y):
    n = max(x.shape[0], y.shape[0])
    out = np.zeros((n, x.shape[1]), dtype=U64)
    out[: x.shape[0]] = x
    out[: y.shape[0]] = field.sub(out[: y.shape[0]], y)
    # trailing coefficients of the full-length result are never negative here
    return out


def _karatsuba_cost(n, threshold):
    if n <= threshold + 1:
        return n * n, n * n - (2 * n - 1)
    half = n // 2
    m0, a0 = _karatsuba_cost(half, threshold)
    m1, a1 = _karatsuba_cost(n - half + 1, threshold)
    m2, a2 = _karatsuba_cost(n - half, threshold)
    return m0 + m1 + m2, a0 + a1 + a2 + 4 * n
