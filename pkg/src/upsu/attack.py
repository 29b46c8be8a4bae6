"""Intersection leakage of hash-partitioned set union.

A sender that cuckoo-hashes its set into ``k`` bins with three public hash
functions holds at most one element per bin.  A receiver that simple-hashes
its own set with the same functions learns that four of its elements are
not all in the sender's set whenever their bins fit inside three bins.
"""

import hashlib
import itertools
import math
from dataclasses import dataclass, field

import mpmath
import numpy as np

from .errors import CuckooFailure
from .rng import Csprng

NUM_HASHES = 3
EVICTION_FACTOR = 500
PRECISION = 200


def _encode(x):
    if isinstance(x, (bytes, bytearray)):
        return b"b" + bytes(x)
    if isinstance(x, str):
        return b"s" + x.encode()
    x = int(x)
    return b"i" + x.to_bytes(x.bit_length() // 8 + 1, "big", signed=True)


class HashScheme:
    """Three independent keyed hashes into ``[k]`` (BLAKE2b, one key per function)."""

    def __init__(self, k, seed=0):
        if k < 1:
            raise ValueError("need at least one bin")
        self.k = int(k)
        self.seed = seed
        master = hashlib.sha256(b"upsu-hash/" + repr(seed).encode()).digest()
        self._keys = [hashlib.sha256(master + bytes([i])).digest() for i in range(NUM_HASHES)]

    def hash(self, i, x):
        d = hashlib.blake2b(_encode(x), digest_size=16, key=self._keys[i]).digest()
        return int.from_bytes(d, "little") % self.k

    def bins(self, x):
        """``(h1(x), h2(x), h3(x))`` with repetitions kept."""
        enc = _encode(x)
        return tuple(
            int.from_bytes(hashlib.blake2b(enc, digest_size=16, key=key).digest(), "little") % self.k
            for key in self._keys
        )

    def bin_set(self, x):
        return frozenset(self.bins(x))


class CuckooTable:
    """k bins, at most one element each; random-walk eviction without stash."""

    def __init__(self, scheme, rng=None, max_evictions=None):
        self.scheme = scheme
        self.k = scheme.k
        self.slots = [None] * self.k
        self.where = {}
        self.rng = rng if rng is not None else Csprng(("cuckoo", scheme.seed))
        if max_evictions is None:
            max_evictions = int(EVICTION_FACTOR * max(1.0, math.log2(self.k)))
        self.max_evictions = max_evictions

    def __len__(self):
        return len(self.where)

    def __contains__(self, x):
        return x in self.where

    def insert(self, x):
        """Place ``x``; raises :class:`CuckooFailure` and leaves the table unchanged on failure."""
        if x in self.where:
            raise ValueError(f"{x!r} already stored")
        cand = self.scheme.bins(x)
        for b in cand:
            if self.slots[b] is None:
                self._put(x, b)
                return b
        undo = []
        cur, prev = x, None
        for _ in range(self.max_evictions):
            choices = [b for b in dict.fromkeys(self.scheme.bins(cur)) if b != prev] or [prev]
            b = choices[self.rng.randbelow(len(choices))]
            out = self.slots[b]
            undo.append((b, out))
            self._put(cur, b)
            if out is None:
                return self.where[x]
            del self.where[out]
            free = [c for c in self.scheme.bins(out) if self.slots[c] is None]
            if free:
                undo.append((free[0], None))
                self._put(out, free[0])
                return self.where[x]
            cur, prev = out, b
        for b, old in reversed(undo):
            occupant = self.slots[b]
            if occupant is not None and self.where.get(occupant) == b:
                del self.where[occupant]
            self.slots[b] = old
            if old is not None:
                self.where[old] = b
        raise CuckooFailure(f"eviction budget of {self.max_evictions} exhausted")

    def _put(self, x, b):
        self.slots[b] = x
        self.where[x] = b

    def check(self):
        for x, b in self.where.items():
            assert self.slots[b] == x and b in self.scheme.bins(x)
        assert sum(s is not None for s in self.slots) == len(self.where)


def cuckoo_insert(table, element):
    table.insert(element)
    return table


def cuckoo_success_rate(m, k, trials, seed=0):
    """Fraction of ``trials`` seeded tables that hold ``m`` fresh elements."""
    ok = 0
    for t in range(trials):
        table = CuckooTable(HashScheme(k, seed=(seed, t)))
        try:
            for x in range(m):
                table.insert(x)
        except CuckooFailure:
            continue
        ok += 1
    return ok / trials


class SimpleTable:
    """Every element is stored in each of its (distinct) bins."""

    def __init__(self, scheme, elements=()):
        self.scheme = scheme
        self.k = scheme.k
        self.bins = [[] for _ in range(self.k)]
        self.sets = {}
        self.by_set = {}
        for x in elements:
            self.add(x)

    def __len__(self):
        return len(self.sets)

    def add(self, x):
        if x in self.sets:
            raise ValueError(f"{x!r} already stored")
        s = self.scheme.bin_set(x)
        self.sets[x] = s
        self.by_set.setdefault(s, []).append(x)
        for b in sorted(s):
            self.bins[b].append(x)

    def placements(self):
        return sum(len(b) for b in self.bins)


@dataclass(frozen=True)
class Witness:
    elements: tuple
    bins: tuple

    def verify(self, scheme):
        if len(set(self.elements)) != 4 or len(set(self.bins)) > 3:
            return False
        return all(scheme.bin_set(x) <= set(self.bins) for x in self.elements)


def _triples_containing(s, k):
    s = sorted(s)
    need = min(3, k) - len(s)
    rest = [b for b in range(k) if b not in s]
    for extra in itertools.combinations(rest, need):
        yield tuple(sorted(s + list(extra)))


def _inside(table, triple):
    out = []
    for r in range(1, len(triple) + 1):
        for sub in itertools.combinations(triple, r):
            out.extend(table.by_set.get(frozenset(sub), ()))
    return out


def detect_leak(table):
    """Smallest bin triple (lexicographically) holding four elements, or ``None``.

    Any witness triple contains the bin set of some stored element, so only
    triples extending an occurring bin set are examined.
    """
    if len(table) < 4:
        return None
    cands = set()
    for s in table.by_set:
        cands.update(_triples_containing(s, table.k))
    for t in sorted(cands):
        inside = _inside(table, t)
        if len(inside) >= 4:
            order = {x: i for i, x in enumerate(table.sets)}
            return Witness(tuple(sorted(inside, key=order.__getitem__)[:4]), t)
    return None


@dataclass(frozen=True)
class LeakProbability:
    n: int
    k: int
    probability: mpmath.mpf
    complement: mpmath.mpf

    @property
    def log2_probability(self):
        return mpmath.log(self.probability, 2)

    @property
    def log2_complement(self):
        return mpmath.log(self.complement, 2)

    @property
    def log10_complement(self):
        return mpmath.log10(self.complement)

    def __float__(self):
        return float(self.probability)


def default_bins(m):
    """``k = m + ceil(log2 m)``."""
    return m + (math.ceil(math.log2(m)) if m > 1 else 0)


def _binom_terms(n, p, lo, hi):
    """Binomial pmf terms ``lo..hi`` by the ratio recurrence."""
    q = 1 - p
    t = mpmath.binomial(n, lo) * p**lo * q ** (n - lo)
    out = [t]
    for i in range(lo, hi):
        t = t * (n - i) / (i + 1) * p / q
        out.append(t)
    return out


def leak_probability(n, k, prec=PRECISION):
    """P(V >= 4) for V ~ Binomial(n, (3/k)^3), with the complement kept separately.

    The four-term head is summed directly.  When it dominates, the tail is
    summed term by term instead of subtracted, so probabilities far below
    ``2**-prec`` keep full relative precision on both sides.
    """
    if n < 4 or k < 3:
        raise ValueError("need n >= 4 and k >= 3")
    with mpmath.workprec(prec):
        p = (mpmath.mpf(3) / k) ** 3
        if p >= 1:
            return LeakProbability(n, k, mpmath.mpf(1), mpmath.mpf(0))
        head = mpmath.fsum(_binom_terms(n, p, 0, 3))
        if head < 0.5:
            return LeakProbability(n, k, 1 - head, head)
        eps = mpmath.mpf(2) ** (-prec)
        q = 1 - p
        t = mpmath.binomial(n, 4) * p**4 * q ** (n - 4)
        tail, i = t, 4
        while i < n and t > eps * tail:
            t = t * (n - i) / (i + 1) * p / q
            tail += t
            i += 1
        return LeakProbability(n, k, tail, head)


def leak_probability_direct(n, k, prec=PRECISION):
    """The same quantity by summing the first four binomial terms (test oracle)."""
    with mpmath.workprec(prec):
        p = (mpmath.mpf(3) / k) ** 3
        head = mpmath.fsum(mpmath.binomial(n, i) * p**i * (1 - p) ** (n - i) for i in range(4))
        return 1 - head, head


@dataclass(frozen=True)
class Estimate:
    n: int
    k: int
    trials: int
    seed: int
    hits: int

    @property
    def frequency(self):
        return self.hits / self.trials

    def sigma(self, p):
        return math.sqrt(p * (1 - p) / self.trials)


def estimate_leak_probability(n, k, trials, seed=0, batch=None):
    """Monte-Carlo frequency of >= 4 of ``n`` elements hashing into bins {0, 1, 2}.

    Each element draws its three hash values independently and uniformly from
    ``[k]``; the fixed triple matches the single-triple model.
    """
    rng = np.random.default_rng(seed)
    if batch is None:
        batch = max(1, min(trials, 4_000_000 // max(1, 3 * n)))
    hits = 0
    left = trials
    while left:
        b = min(batch, left)
        h = rng.integers(0, k, size=(b, n, NUM_HASHES), dtype=np.int64)
        inside = (h < 3).all(axis=2).sum(axis=1)
        hits += int((inside >= 4).sum())
        left -= b
    return Estimate(n, k, trials, seed, hits)


def estimate_any_triple_frequency(n, k, trials, seed=0):
    """Fraction of random ``n``-sets whose simple table has any leak witness."""
    hits = 0
    for t in range(trials):
        scheme = HashScheme(k, seed=(seed, t))
        if detect_leak(SimpleTable(scheme, range(n))) is not None:
            hits += 1
    return Estimate(n, k, trials, seed, hits)


def attack_bound(k, n):
    """Additions sufficient by pigeonhole: ``3k^3 + 2 - n`` (never negative)."""
    return max(0, 3 * k**3 + 2 - n)


@dataclass
class AttackResult:
    start: int
    additions: list = field(default_factory=list)
    witness: Witness = None
    table: SimpleTable = None


def _fresh(known):
    x = 0
    while True:
        if x not in known:
            yield x
        x += 1


def attack_until_leak(known_set, scheme, pool=None):
    """Add distinct elements from ``pool`` one at a time until a witness appears.

    ``pool`` defaults to the non-negative integers not already known.
    """
    known = list(known_set)
    table = SimpleTable(scheme, known)
    result = AttackResult(start=len(known), table=table)
    seen = set(known)
    it = iter(pool) if pool is not None else _fresh(seen)
    while True:
        w = detect_leak(table)
        if w is not None:
            result.witness = w
            return result
        x = next(it)
        if x in seen:
            continue
        seen.add(x)
        table.add(x)
        result.additions.append(x)
