"""Homomorphic polynomial algorithms.

Every function takes the evaluator of the party running it as first argument;
operation counts and depth are recorded there.  Slicing, reversal and
truncation of encrypted coefficient vectors are free reindexing.

* :func:`f_bsmev` evaluates a cleartext polynomial on a batch of encrypted
  points (depth ``ceil(log2 n) + 1``).
* :func:`f_mod` reduces a cleartext polynomial modulo an encrypted monic one
  by Newton division.
* :func:`l_mev` evaluates an LHE-encrypted polynomial at cleartext points with
  the transposed product-tree scheme; it never multiplies two ciphertexts.
* :func:`f_mev` evaluates a cleartext polynomial at encrypted points through
  an encrypted subproduct tree.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegreeOrder, EmptySet, FloodedCiphertext
from .poly import Polynomial, ProductTree, truncated_inverse


@dataclass(frozen=True)
class InverseHint:
    """Encryption of ``reverse(P_S)^-1 mod Z^(2^level)`` supplied by the sender."""

    ct: object
    level: int


@dataclass(frozen=True)
class FactoredPolynomial:
    """A monic polynomial kept as a list of monic factors of degree at most ``block``."""

    factors: tuple

    @classmethod
    def from_roots(cls, roots, field):
        """Group the roots into about sqrt(n) factors of degree ``2**ceil(L/2)``, ``L = ceil(log2 n)``.

        The factors are one level of the product tree over ``roots`` (the
        constant padding nodes are dropped).
        """
        roots = list(roots)
        if not roots:
            return cls(())
        tree = ProductTree(roots, field)
        lg = tree.height
        level = lg - (lg + 1) // 2
        return cls(tuple(f for f in tree.levels[level] if f.degree > 0))

    @property
    def degree(self):
        return sum(f.degree for f in self.factors)

    @property
    def block(self):
        return max((f.degree for f in self.factors), default=0)

    def product(self, field):
        acc = Polynomial.one(field)
        for f in self.factors:
            acc = acc * f
        return acc


def _no_flood(*cts):
    for c in cts:
        if c.flooded:
            raise FloodedCiphertext("input ciphertext is flooded")


def _balanced_product(ev, items):
    while len(items) > 1:
        nxt = [ev.mul(items[i], items[i + 1]) for i in range(0, len(items) - 1, 2)]
        if len(items) % 2:
            nxt.append(items[-1])
        items = nxt
    return items[0]


# ---------------------------------------------------------------- F.BSMEv


def power_table(ev, y, top):
    """``{j: y**j}`` for ``1 <= j <= top``, each at depth ``ceil(log2 j)``."""
    powers = {1: y}
    for j in range(2, top + 1):
        hi = 1 << (j.bit_length() - 1)
        if hi == j:
            powers[j] = ev.mul(powers[j // 2], powers[j // 2])
        else:
            powers[j] = ev.mul(powers[hi], powers[j - hi])
    return powers


def f_bsmev(ev, factors, y):
    """Slot-wise evaluation of ``prod(factors)`` at the batch ``y``."""
    _no_flood(y)
    if not factors.factors:
        raise EmptySet("no factors to evaluate")
    powers = power_table(ev, y, factors.block)
    evals = []
    for f in factors.factors:
        acc = None
        for j, c in enumerate(f.to_list()[1:], start=1):
            term = ev.cmul(c, powers[j])
            acc = term if acc is None else ev.add(acc, term)
        evals.append(ev.add_plain(acc, f.coeff(0)))
    return _balanced_product(ev, evals)


# ---------------------------------------------------------------- mod_F


def _newton_rem(ev, a, b, start):
    """``a mod B`` for encrypted monic ``b`` (m+1 coefficients), ``deg a > m``.

    ``start`` is ``(U, k)`` with ``U = reverse(B)^-1 mod Z^(2^k)`` or None.
    """
    n, m = a.degree, len(b) - 1
    t = n - m + 1
    top = (t - 1).bit_length() - 1
    bbar = b.reverse(m)
    if start is None:
        u, k = ev.encrypt(np.ones((1, b.slots), dtype=np.uint64)), 0
    else:
        u, k = start
        k = min(k, top)
        u = u.truncate(1 << k)
    while k < top:
        half = 1 << k
        err = ev.mul(bbar.truncate(2 * half), u).slice(half, 2 * half - 1)
        corr = ev.mul(u, err).truncate(half)
        u = ev.sub(u, corr.shift(half))
        k += 1
    half = 1 << top
    s = ev.cmul(a.reverse(n).truncate(t), u).truncate(t)
    err = ev.mul(bbar.truncate(2 * half), u).slice(half, 2 * half - 1)
    tail = ev.mul(err, s.truncate(t - half)).truncate(t - half)
    qbar = ev.sub(s, tail.shift(half))
    q = qbar.reverse(t - 1)
    qb = ev.mul(q, b).truncate(m)
    return ev.plain_sub(a.truncate(m), qb)


def f_mod(ev, a, b_enc, hint=None):
    """Encrypted ``a mod B`` (``m`` coefficients) for cleartext ``a`` and encrypted monic ``B``."""
    _no_flood(b_enc)
    m = len(b_enc) - 1
    if a.degree <= m:
        raise DegreeOrder(f"deg a = {a.degree} must exceed deg B = {m}")
    start = None
    if hint is not None:
        _no_flood(hint.ct)
        start = (hint.ct, hint.level)
    return _newton_rem(ev, a, b_enc, start)


# ---------------------------------------------------------------- L.MEv


def l_mev(ev, h_enc, points, tree=None):
    """Encrypted values ``h(y)`` for the cleartext points, as one LHE vector.

    ``h_enc`` holds exactly ``len(points)`` coefficients and the number of
    points is a power of two.  Cleartext coefficients enter the LHE products
    as their canonical lifts.
    """
    m = len(points)
    if m == 0 or m & (m - 1):
        raise DegreeOrder("number of points must be a power of two")
    if len(h_enc) != m:
        raise DegreeOrder(f"encrypted polynomial has {len(h_enc)} coefficients, expected {m}")
    if tree is None:
        raise ValueError("a product tree over the points is required")
    if tree.leaf_count != m:
        raise DegreeOrder("product tree does not match the points")
    root = tree.root
    binv = truncated_inverse(root.reverse(m), m)
    a = ev.poly_cmul(binv.reverse(m - 1), h_enc, lo=m - 1, hi=2 * m - 2)
    vals = [a.reverse(m - 1)]
    for level in tree.levels[1:]:
        nxt = []
        for i, node in enumerate(level):
            d = node.degree
            sib = level[i ^ 1]
            nxt.append(ev.poly_cmul(sib.reverse(sib.degree), vals[i // 2], lo=d, hi=2 * d - 1))
        vals = nxt
    return type(vals[0]).concat(vals)


# ---------------------------------------------------------------- F.MEv


def encrypted_subproduct_tree(ev, y_encs, with_root=True):
    """Levels by height: ``tree[0]`` are the leaves ``Z - y_i``, ``tree[l]`` the root."""
    level = [ev.plain_sub(np.array([0, 1], dtype=np.uint64), y) for y in y_encs]
    tree = [level]
    height = len(y_encs).bit_length() - 1
    for k in range(1, height + 1):
        if k == height and not with_root:
            break
        prev = tree[-1]
        tree.append([ev.mul(prev[2 * i], prev[2 * i + 1]) for i in range(len(prev) // 2)])
    return tree


def encrypted_inverse_sequence(ev, y_encs, ptree, with_root=True):
    """``seq[k][i]`` encrypts ``reverse(P_node)^-1 mod Z^(2^k)`` for node ``i`` of height ``k``.

    Height 0 is the plaintext constant 1 and is represented by ``None``.
    """
    m = len(y_encs)
    height = m.bit_length() - 1
    seq = [[None] * m]
    if height == 0 or (height == 1 and not with_root):
        return seq
    v1 = [
        ev.add_plain(ev.add(y_encs[2 * i], y_encs[2 * i + 1]).shift(1), np.array([1], dtype=np.uint64))
        for i in range(m // 2)
    ]
    seq.append(v1)
    last = height if with_root else height - 1
    for k in range(1, last):
        half = 1 << k
        cur = []
        for i in range(len(seq[k]) // 2):
            va, vb = seq[k][2 * i], seq[k][2 * i + 1]
            pa, pb = ptree[k][2 * i], ptree[k][2 * i + 1]
            k0 = ev.mul(va, vb).truncate(2 * half)
            k1 = ev.mul(pa.reverse(half).truncate(2 * half), va).slice(half, 2 * half - 1)
            k2 = ev.mul(pb.reverse(half).truncate(2 * half), vb).slice(half, 2 * half - 1)
            corr = ev.mul(k0.truncate(half), ev.add(k1, k2)).truncate(half)
            cur.append(ev.sub(k0, corr.shift(half)))
        seq.append(cur)
    return seq


def _descend(ev, r_top, ptree, vseq):
    """Remainders down the tree; ``ptree`` holds the levels below the root."""
    height = len(ptree)
    rems = [r_top]
    for k in range(height - 1, -1, -1):
        d = 1 << k
        nxt = []
        for i in range(2 * len(rems)):
            r = rems[i // 2]
            v = vseq[k][i]
            rrev = r.reverse(2 * d - 1).truncate(d)
            qbar = rrev if v is None else ev.mul(v, rrev).truncate(d)
            q = qbar.reverse(d - 1)
            nxt.append(ev.sub(r.truncate(d), ev.mul(ptree[k][i], q).truncate(d)))
        rems = nxt
    return rems


def f_mev(ev, a, y_encs, hint=None, root=None, strict=True):
    """Encryptions of ``a(y_i)`` for encrypted points ``y_encs`` (a power-of-two count).

    ``hint`` (an :class:`InverseHint` for the full point set) and ``root``
    (an encryption of the monic ``prod (Z - y_i)``) replace the top of the
    encrypted tree and the inverse sequence.  With ``strict=False`` inputs
    with ``deg a <= m`` are accepted.
    """
    m = len(y_encs)
    if m == 0 or m & (m - 1):
        raise DegreeOrder("number of points must be a power of two")
    _no_flood(*y_encs)
    if hint is not None:
        _no_flood(hint.ct)
    if root is not None:
        _no_flood(root)
    n = a.degree
    if strict and n <= m:
        raise DegreeOrder(f"deg a = {n} must exceed the number of points {m}")
    height = m.bit_length() - 1
    ptree = encrypted_subproduct_tree(ev, y_encs, with_root=root is None)
    proot = root if root is not None else ptree[height][0]
    vseq = encrypted_inverse_sequence(ev, y_encs, ptree, with_root=hint is None and n > m)
    if n > m:
        if hint is not None:
            start = (hint.ct, hint.level)
        elif height == 0:
            start = None
        else:
            start = (vseq[height][0], height)
        r_top = _newton_rem(ev, a, proot, start)
    elif n == m:
        r_top = ev.add_plain(ev.neg(ev.cmul(a.lead, proot) if a.lead != 1 else proot), a).truncate(m)
    else:
        r_top = ev.encrypt(a.padded(m).reshape(-1, 1))
    return _descend(ev, r_top, ptree[:height], vseq)
