"""Cleartext polynomials over a prime field.

A :class:`Polynomial` is an immutable, normalised coefficient vector (lowest
degree first, no trailing zeros).  The zero polynomial has no coefficients and
degree ``-1``.
"""

import struct

import numpy as np

from .errors import DegreeOrder, DivisorNotMonic, EmptySet, NotInvertible
from .field import U64


class Polynomial:
    __slots__ = ("field", "coeffs")

    def __init__(self, coeffs, field):
        arr = field.reduce(np.asarray(coeffs, dtype=object) if _needs_reduce(coeffs) else coeffs)
        arr = np.array(arr, dtype=U64).reshape(-1)
        nz = np.flatnonzero(arr)
        arr = arr[: nz[-1] + 1] if nz.size else arr[:0]
        arr.setflags(write=False)
        self.field = field
        self.coeffs = arr

    @classmethod
    def _raw(cls, arr, field):
        """Wrap an already-reduced ``uint64`` array (trailing zeros are stripped)."""
        obj = cls.__new__(cls)
        arr = np.asarray(arr, dtype=U64).reshape(-1)
        nz = np.flatnonzero(arr)
        arr = arr[: nz[-1] + 1] if nz.size else arr[:0]
        arr.setflags(write=False)
        obj.field = field
        obj.coeffs = arr
        return obj

    @classmethod
    def zero(cls, field):
        return cls._raw(np.zeros(0, dtype=U64), field)

    @classmethod
    def one(cls, field):
        return cls._raw(np.ones(1, dtype=U64), field)

    @classmethod
    def monomial(cls, k, field, c=1):
        arr = np.zeros(k + 1, dtype=U64)
        arr[k] = c % field.p
        return cls._raw(arr, field)

    # ------------------------------------------------------------ basics

    @property
    def degree(self):
        return len(self.coeffs) - 1

    def is_zero(self):
        return len(self.coeffs) == 0

    @property
    def lead(self):
        return int(self.coeffs[-1]) if len(self.coeffs) else 0

    def is_monic(self):
        return self.lead == 1

    def coeff(self, i):
        return int(self.coeffs[i]) if 0 <= i < len(self.coeffs) else 0

    def to_list(self):
        return [int(c) for c in self.coeffs]

    def padded(self, n):
        """Coefficient array of exactly ``n`` entries (zero-padded or truncated)."""
        out = np.zeros(n, dtype=U64)
        k = min(n, len(self.coeffs))
        out[:k] = self.coeffs[:k]
        return out

    def __repr__(self):
        if self.is_zero():
            return "Polynomial(0)"
        terms = []
        for i, c in enumerate(self.to_list()):
            if c:
                terms.append(f"{c}" if i == 0 else f"{c}*Z^{i}")
        return "Polynomial(" + " + ".join(terms) + f"; p={self.field.p})"

    def __eq__(self, other):
        if isinstance(other, Polynomial):
            return self.field == other.field and np.array_equal(self.coeffs, other.coeffs)
        if isinstance(other, int):
            return self == Polynomial([other], self.field)
        return NotImplemented

    def __hash__(self):
        return hash((self.field.p, self.coeffs.tobytes()))

    # ------------------------------------------------------------ ring ops

    def _lift(self, other):
        if isinstance(other, Polynomial):
            return other
        if isinstance(other, (int, np.integer)):
            return Polynomial([int(other)], self.field)
        return NotImplemented

    def __add__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        n = max(len(self.coeffs), len(other.coeffs))
        return Polynomial._raw(self.field.add(self.padded(n), other.padded(n)), self.field)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial._raw(self.field.neg(self.coeffs), self.field)

    def __sub__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        n = max(len(self.coeffs), len(other.coeffs))
        return Polynomial._raw(self.field.sub(self.padded(n), other.padded(n)), self.field)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, np.integer)):
            return self.scale(int(other))
        if not isinstance(other, Polynomial):
            return NotImplemented
        return poly_mul(self, other)

    __rmul__ = __mul__

    def scale(self, c):
        c = int(c) % self.field.p
        return Polynomial._raw(self.field.mul(self.coeffs, U64(c)), self.field)

    def __call__(self, y):
        return horner_eval(self, y)

    def __divmod__(self, other):
        return fast_div_rem(self, other)

    # ------------------------------------------------------------ reindexing

    def reverse(self, d=None):
        """``Z^d * self(1/Z)``; ``d`` defaults to the degree and must be at least it."""
        if d is None:
            d = self.degree
        if d < self.degree:
            raise DegreeOrder(f"cannot reverse a degree-{self.degree} polynomial at order {d}")
        if d < 0:
            return Polynomial.zero(self.field)
        return Polynomial._raw(self.padded(d + 1)[::-1].copy(), self.field)

    def truncate(self, t):
        """``self mod Z^t``."""
        return Polynomial._raw(self.coeffs[: max(t, 0)].copy(), self.field)

    def slice(self, lo, hi):
        """``sum_{i=lo}^{hi} c_i Z^(i-lo)`` (both bounds inclusive)."""
        return Polynomial._raw(self.coeffs[lo : hi + 1].copy(), self.field)

    def shift(self, k):
        """``self * Z^k``."""
        if self.is_zero():
            return self
        return Polynomial._raw(np.concatenate([np.zeros(k, dtype=U64), self.coeffs]), self.field)

    # ------------------------------------------------------------ wire format

    def to_bytes(self):
        return struct.pack("<I", len(self.coeffs)) + self.coeffs.astype("<u8").tobytes()

    @classmethod
    def from_bytes(cls, buf, field, offset=0):
        """Decode one polynomial; returns ``(poly, new_offset)``."""
        (n,) = struct.unpack_from("<I", buf, offset)
        offset += 4
        end = offset + 8 * n
        if end > len(buf):
            raise ValueError("truncated polynomial encoding")
        arr = np.frombuffer(bytes(buf[offset:end]), dtype="<u8").astype(U64)
        if n and int(arr.max()) >= field.p:
            raise ValueError("coefficient out of range")
        return cls._raw(arr, field), end


def _needs_reduce(coeffs):
    if isinstance(coeffs, np.ndarray) and coeffs.dtype == U64:
        return False
    return True


# ---------------------------------------------------------------- products


def poly_mul(a, b):
    """Exact product; schoolbook below the field threshold, NTT/Karatsuba above."""
    if a.is_zero() or b.is_zero():
        return Polynomial.zero(a.field)
    return Polynomial._raw(a.field.conv(a.coeffs, b.coeffs), a.field)


def poly_mul_naive(a, b):
    if a.is_zero() or b.is_zero():
        return Polynomial.zero(a.field)
    return Polynomial._raw(a.field.conv_naive(a.coeffs, b.coeffs), a.field)


def mul_trunc(a, b, t):
    """``a*b mod Z^t`` (only the low ``t`` coefficients of each factor matter)."""
    return poly_mul(a.truncate(t), b.truncate(t)).truncate(t)


class ProductTree:
    """Subproduct tree of ``prod (Z - y_j)``.

    ``levels[0]`` is ``[root]`` and ``levels[k]`` holds the ``2**k`` nodes of
    depth ``k``; the last level holds the leaves.  When the number of roots is
    not a power of two the leaf list is completed with the constant ``1``.
    """

    def __init__(self, roots, field):
        roots = [int(r) % field.p for r in roots]
        if not roots:
            raise EmptySet("product tree needs at least one root")
        self.field = field
        self.roots = roots
        size = 1 << (len(roots) - 1).bit_length()
        one = Polynomial.one(field)
        leaves = [Polynomial._raw(np.array([(-r) % field.p, 1], dtype=U64), field) for r in roots]
        leaves += [one] * (size - len(roots))
        levels = [leaves]
        while len(levels[-1]) > 1:
            prev = levels[-1]
            levels.append([poly_mul(prev[2 * i], prev[2 * i + 1]) for i in range(len(prev) // 2)])
        levels.reverse()
        self.levels = levels

    @property
    def root(self):
        return self.levels[0][0]

    @property
    def height(self):
        return len(self.levels) - 1

    @property
    def leaf_count(self):
        return len(self.levels[-1])

    def node(self, k, i):
        return self.levels[k][i]


def poly_from_roots(roots, field):
    return ProductTree(roots, field)


def poly_from_roots_naive(roots, field):
    acc = Polynomial.one(field)
    for r in roots:
        acc = poly_mul_naive(acc, Polynomial([-int(r), 1], field))
    return acc


# ---------------------------------------------------------------- division


def truncated_inverse(b, t, start=None):
    """``u`` with ``b*u = 1 mod Z^t`` by Newton iteration.

    ``start`` may supply an inverse already correct modulo ``Z^k`` for some
    power of two ``k``; iteration then resumes from there.
    """
    if t <= 0:
        raise ValueError("precision must be positive")
    b0 = b.coeff(0)
    if b0 == 0:
        raise NotInvertible("constant term is zero")
    field = b.field
    if start is None:
        u = Polynomial([field.inv(b0)], field)
        k = 1
    else:
        u, k = start
    while k < t:
        k = min(2 * k, t)
        err = mul_trunc(b, u, k)
        u = mul_trunc(u, 2 - err, k)
    return u.truncate(t)


def fast_div_rem(a, b):
    """Euclidean division by a monic ``b`` via reversal and Newton inversion."""
    if not b.is_monic():
        raise DivisorNotMonic("divisor must be monic")
    field = a.field
    m = b.degree
    if m == 0:
        return a, Polynomial.zero(field)
    n = a.degree
    if n < m:
        return Polynomial.zero(field), a
    t = n - m + 1
    inv = truncated_inverse(b.reverse(m), t)
    qrev = mul_trunc(a.reverse(n), inv, t)
    q = qrev.reverse(t - 1)
    r = (a - mul_trunc(b, q, m)).truncate(m)
    return q, r


# ---------------------------------------------------------------- evaluation


def horner_eval(h, y):
    p = h.field.p
    y = int(y) % p
    acc = 0
    for c in reversed(h.to_list()):
        acc = (acc * y + c) % p
    return acc


def multipoint_eval(h, points, tree=None):
    """``[h(y) for y in points]`` by remaindering down a product tree."""
    points = list(points)
    if not points:
        return []
    field = h.field
    if tree is None:
        tree = ProductTree(points, field)
    rems = [fast_div_rem(h, tree.root)[1]]
    for level in tree.levels[1:]:
        nxt = []
        for i, node in enumerate(level):
            nxt.append(fast_div_rem(rems[i // 2], node)[1] if node.degree > 0 else Polynomial.zero(field))
        rems = nxt
    return [rems[i].coeff(0) for i in range(len(points))]
