"""Backend-neutral pieces: operation counters, keys, ciphertext containers."""

from dataclasses import asdict, dataclass, field

import numpy as np

from ..errors import DegreeOrder, KeyMismatch

KEY_TAG_LEN = 16


@dataclass
class OpCounter:
    """Homomorphic-operation tallies for one party.

    A SIMD operation on a batched ciphertext counts once.  ``add`` covers
    additions, subtractions and negations, ``cmul`` cleartext x ciphertext
    products, ``mul`` ciphertext x ciphertext products.
    """

    add: int = 0
    cmul: int = 0
    mul: int = 0
    enc: int = 0
    dec: int = 0
    flood: int = 0

    @property
    def homomorphic(self):
        return self.add + self.cmul + self.mul

    def as_dict(self):
        d = asdict(self)
        d["homomorphic"] = self.homomorphic
        return d

    def copy(self):
        return OpCounter(**asdict(self))

    def __add__(self, other):
        return OpCounter(**{k: getattr(self, k) + getattr(other, k) for k in asdict(self)})


@dataclass(frozen=True)
class PublicKey:
    scheme: str
    tag: bytes
    params: dict = field(default_factory=dict, compare=False, hash=False)

    def __getattr__(self, name):
        params = self.__dict__.get("params", {})
        if name in params:
            return params[name]
        raise AttributeError(name)


@dataclass(frozen=True)
class SecretKey:
    scheme: str
    tag: bytes
    params: dict = field(default_factory=dict, compare=False, hash=False, repr=False)

    def __getattr__(self, name):
        params = self.__dict__.get("params", {})
        if name in params:
            return params[name]
        raise AttributeError(name)


@dataclass(frozen=True)
class KeyPair:
    public: PublicKey
    secret: SecretKey

    @property
    def tag(self):
        return self.public.tag


def check_tags(expected, *cts):
    for ct in cts:
        if ct.key_tag != expected:
            raise KeyMismatch("ciphertext was produced under a different key")


class LheCiphertext:
    """A vector of LHE ciphertexts (a polynomial when read as coefficients).

    ``values`` holds one backend payload per entry; ``pad`` is the payload of
    a trivial encryption of zero, used when reindexing introduces new slots.
    """

    __slots__ = ("values", "key_tag", "pad")

    def __init__(self, values, key_tag, pad):
        self.values = values
        self.key_tag = key_tag
        self.pad = pad

    def _new(self, values):
        return LheCiphertext(values, self.key_tag, self.pad)

    def __len__(self):
        return len(self.values)

    def __getitem__(self, idx):
        if isinstance(idx, slice):
            return self._new(self.values[idx])
        return self._new(self.values[idx : idx + 1] if idx >= 0 else self.values[idx:][:1])

    def __iter__(self):
        for i in range(len(self.values)):
            yield self[i]

    def slice(self, lo, hi):
        return self._new(self.values[lo : hi + 1])

    def truncate(self, t):
        return self._new(self.values[:t])

    def reverse(self, d=None):
        n = len(self.values)
        d = n - 1 if d is None else d
        if d + 1 < n:
            raise DegreeOrder("reversal order below length")
        vals = self.values[::-1]
        if d + 1 > n:
            vals = _concat(vals, _fill(self.values, d + 1 - n, self.pad), front=True)
        return self._new(vals)

    @staticmethod
    def concat(parts):
        first = parts[0]
        vals = first.values
        for p in parts[1:]:
            check_tags(first.key_tag, p)
            vals = _concat(vals, p.values)
        return first._new(vals)


def _fill(like, n, value):
    out = np.empty(n, dtype=like.dtype)
    out[:] = [value] * n if like.dtype == object else value
    return out


def _concat(a, b, front=False):
    if front:
        a, b = b, a
    return np.concatenate([a, b])


class FheCiphertext:
    """A vector of batched FHE ciphertexts with shared metadata.

    ``data`` has shape ``(ncoeffs, slots)``; row ``i`` is the ciphertext
    coefficient of ``Z**i``.  A plain batched ciphertext is the one-row case.
    ``depth`` and ``noise`` are the maxima over the rows.
    """

    __slots__ = ("data", "depth", "noise", "flooded", "key_tag")

    def __init__(self, data, depth, noise, flooded, key_tag):
        data = np.asarray(data, dtype=np.uint64)
        if data.ndim == 1:
            data = data.reshape(1, -1)
        data.setflags(write=False)
        self.data = data
        self.depth = int(depth)
        self.noise = int(noise)
        self.flooded = bool(flooded)
        self.key_tag = key_tag

    def _new(self, data):
        return FheCiphertext(data, self.depth, self.noise, self.flooded, self.key_tag)

    def __len__(self):
        return self.data.shape[0]

    @property
    def slots(self):
        return self.data.shape[1]

    @property
    def metadata(self):
        return (self.depth, self.noise, self.flooded, self.key_tag)

    def coefficient(self, i):
        return self._new(self.data[i : i + 1])

    def slice(self, lo, hi):
        """Coefficients ``lo..hi`` inclusive, reindexed from zero."""
        return self._new(self.data[lo : hi + 1])

    def truncate(self, t):
        return self._new(self.data[:t])

    def shift(self, k):
        pad = np.zeros((k, self.slots), dtype=np.uint64)
        return self._new(np.concatenate([pad, self.data]))

    def reverse(self, d=None):
        n = len(self)
        d = n - 1 if d is None else d
        if d + 1 < n:
            raise DegreeOrder("reversal order below length")
        out = np.zeros((d + 1, self.slots), dtype=np.uint64)
        out[d + 1 - n :] = self.data[::-1]
        return self._new(out)

    @staticmethod
    def concat(parts):
        first = parts[0]
        check_tags(first.key_tag, *parts[1:])
        return FheCiphertext(
            np.concatenate([p.data for p in parts]),
            max(p.depth for p in parts),
            max(p.noise for p in parts),
            any(p.flooded for p in parts),
            first.key_tag,
        )
