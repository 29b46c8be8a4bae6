"""Transparent (NON-CONFIDENTIAL) backends over F_p.

Ciphertexts carry their plaintexts in the clear next to the metadata a real
scheme would expose: depth, a noise counter, the flooded flag and the key
tag.  They exist to verify correctness, depth and operation counts exactly.
Never use them to protect data.
"""

import struct

import numpy as np

from ..errors import FloodedCiphertext, KeyMismatch
from ..field import U64
from ..poly import Polynomial
from .base import KEY_TAG_LEN, FheCiphertext, KeyPair, LheCiphertext, OpCounter, PublicKey, SecretKey, check_tags

LHE_ID = 0x01
FHE_ID = 0x11

DEFAULT_SLOTS = 1024


def _as_clear(field, clear):
    if isinstance(clear, Polynomial):
        return clear.coeffs
    if isinstance(clear, (int, np.integer)):
        return np.array([int(clear) % field.p], dtype=U64)
    return field.reduce(np.asarray(clear) if not isinstance(clear, np.ndarray) else clear)


# ---------------------------------------------------------------------- LHE


class TransparentLhe:
    """Linearly homomorphic stand-in whose plaintext space is F_p itself."""

    name = "transparent"
    backend_id = LHE_ID

    def __init__(self, field):
        self.field = field

    @property
    def plaintext_modulus(self):
        return self.field.p

    def keygen(self, rng):
        tag = rng.token(KEY_TAG_LEN)
        return KeyPair(
            PublicKey("transparent-lhe", tag, {"p": self.field.p}),
            SecretKey("transparent-lhe", tag),
        )

    def evaluator(self, public_key, secret_key=None, counter=None):
        if public_key.scheme != "transparent-lhe" or public_key.p != self.field.p:
            raise KeyMismatch("public key does not belong to this backend")
        return TransparentLheEvaluator(self, public_key, secret_key, counter)

    # wire format: per entry id byte, key tag, 8-byte little-endian value

    def entry_size(self, public_key):
        return 1 + KEY_TAG_LEN + 8

    def serialize(self, ct, public_key=None):
        head = bytes([LHE_ID]) + ct.key_tag
        return struct.pack("<I", len(ct)) + b"".join(head + struct.pack("<Q", int(v)) for v in ct.values)

    def deserialize(self, buf, public_key, offset=0):
        (n,) = struct.unpack_from("<I", buf, offset)
        offset += 4
        vals = np.empty(n, dtype=U64)
        for i in range(n):
            if offset + 25 > len(buf):
                raise ValueError("truncated LHE ciphertext")
            if buf[offset] != LHE_ID:
                raise ValueError("unexpected backend id")
            if bytes(buf[offset + 1 : offset + 17]) != public_key.tag:
                raise KeyMismatch("ciphertext key tag does not match")
            (v,) = struct.unpack_from("<Q", buf, offset + 17)
            if v >= self.field.p:
                raise ValueError("LHE value out of range")
            vals[i] = v
            offset += 25
        return LheCiphertext(vals, public_key.tag, 0), offset

    def serialize_public_key(self, pk):
        return bytes([LHE_ID]) + pk.tag + struct.pack("<Q", self.field.p)

    def deserialize_public_key(self, buf):
        if len(buf) != 1 + KEY_TAG_LEN + 8 or buf[0] != LHE_ID:
            raise ValueError("malformed transparent LHE public key")
        (p,) = struct.unpack_from("<Q", buf, 1 + KEY_TAG_LEN)
        if p != self.field.p:
            raise KeyMismatch("peer uses a different field")
        return PublicKey("transparent-lhe", bytes(buf[1 : 1 + KEY_TAG_LEN]), {"p": p})


class TransparentLheEvaluator:
    def __init__(self, scheme, public_key, secret_key=None, counter=None):
        self.scheme = scheme
        self.field = scheme.field
        self.pk = public_key
        self.sk = secret_key
        self.ops = counter if counter is not None else OpCounter()
        if secret_key is not None and secret_key.tag != public_key.tag:
            raise KeyMismatch("secret key does not match public key")

    @property
    def plaintext_modulus(self):
        return self.field.p

    def _wrap(self, values):
        return LheCiphertext(np.asarray(values, dtype=U64), self.pk.tag, 0)

    def encrypt(self, values, rng=None):
        vals = self.field.reduce(np.atleast_1d(np.asarray(values, dtype=object)))
        self.ops.enc += len(vals)
        return self._wrap(vals)

    def decrypt(self, ct):
        if self.sk is None:
            raise KeyMismatch("no secret key for decryption")
        check_tags(self.sk.tag, ct)
        self.ops.dec += len(ct)
        return [int(v) for v in ct.values]

    def rerandomize(self, a, rng=None):
        check_tags(self.pk.tag, a)
        self.ops.enc += len(a)
        return self._wrap(a.values)

    def add_plain(self, a, values):
        check_tags(self.pk.tag, a)
        self.ops.add += len(a)
        return self._wrap(self.field.add(a.values, self.field.reduce(np.asarray(values, dtype=object))))

    def add(self, a, b):
        check_tags(self.pk.tag, a, b)
        self.ops.add += len(a)
        return self._wrap(self.field.add(a.values, b.values))

    def sub(self, a, b):
        check_tags(self.pk.tag, a, b)
        self.ops.add += len(a)
        return self._wrap(self.field.sub(a.values, b.values))

    def neg(self, a):
        check_tags(self.pk.tag, a)
        self.ops.add += len(a)
        return self._wrap(self.field.neg(a.values))

    def scalar_mul(self, k, a):
        """Entry-wise ``k_i * a_i``; ``k`` is a scalar or a vector of ints."""
        check_tags(self.pk.tag, a)
        k = self.field.reduce(np.asarray(k, dtype=object)) if not isinstance(k, np.ndarray) else self.field.reduce(k)
        self.ops.cmul += len(a)
        return self._wrap(self.field.mul(np.broadcast_to(k, a.values.shape), a.values))

    def poly_cmul(self, clear, a, lo=None, hi=None):
        """Cleartext polynomial times encrypted polynomial, coefficients ``lo..hi``."""
        check_tags(self.pk.tag, a)
        c = _as_clear(self.field, clear)
        cost = self.field.product_cost(len(c), len(a), both_encrypted=False)
        self.ops.cmul += cost.mul + cost.cmul
        self.ops.add += cost.add
        full = self.field.conv(c, a.values) if len(c) and len(a) else np.zeros(0, dtype=U64)
        lo = 0 if lo is None else lo
        hi = len(full) - 1 if hi is None else hi
        out = np.zeros(max(hi - lo + 1, 0), dtype=U64)
        seg = full[lo : hi + 1]
        out[: len(seg)] = seg
        return self._wrap(out)


# ---------------------------------------------------------------------- FHE


class TransparentFhe:
    """Batched levelled-FHE stand-in over F_p with depth and noise bookkeeping."""

    name = "transparent"
    backend_id = FHE_ID

    def __init__(self, field, slots=DEFAULT_SLOTS):
        self.field = field
        self.slots = int(slots)

    def keygen(self, rng):
        tag = rng.token(KEY_TAG_LEN)
        params = {"p": self.field.p, "slots": self.slots}
        return KeyPair(PublicKey("transparent-fhe", tag, params), SecretKey("transparent-fhe", tag))

    def evaluator(self, public_key, secret_key=None, counter=None):
        if public_key.scheme != "transparent-fhe" or public_key.p != self.field.p:
            raise KeyMismatch("public key does not belong to this backend")
        return TransparentFheEvaluator(self, public_key, secret_key, counter)

    # wire format: per coefficient id byte, key tag, slot count, slots,
    # depth (u16), noise (u16), flooded (u8); all little-endian

    def coefficient_size(self, slots):
        return 1 + KEY_TAG_LEN + 4 + 8 * slots + 5

    @staticmethod
    def row_size(slots):
        """Encoded bytes of one coefficient row holding ``slots`` slots."""
        return 1 + KEY_TAG_LEN + 4 + 8 * slots + 5

    def serialize(self, ct, public_key=None):
        parts = [struct.pack("<I", len(ct))]
        head = bytes([FHE_ID]) + ct.key_tag + struct.pack("<I", ct.slots)
        tail = struct.pack("<HHB", min(ct.depth, 0xFFFF), min(ct.noise, 0xFFFF), int(ct.flooded))
        for row in ct.data:
            parts.append(head + row.astype("<u8").tobytes() + tail)
        return b"".join(parts)

    def deserialize(self, buf, public_key, offset=0):
        (n,) = struct.unpack_from("<I", buf, offset)
        offset += 4
        rows, meta = [], None
        for _ in range(n):
            if offset + 21 > len(buf) or buf[offset] != FHE_ID:
                raise ValueError("malformed FHE ciphertext")
            if bytes(buf[offset + 1 : offset + 17]) != public_key.tag:
                raise KeyMismatch("ciphertext key tag does not match")
            (s,) = struct.unpack_from("<I", buf, offset + 17)
            start = offset + 21
            end = start + 8 * s
            if end + 5 > len(buf) or s > self.slots:
                raise ValueError("malformed FHE ciphertext")
            row = np.frombuffer(bytes(buf[start:end]), dtype="<u8").astype(U64)
            if s and int(row.max()) >= self.field.p:
                raise ValueError("slot value out of range")
            depth, noise, flooded = struct.unpack_from("<HHB", buf, end)
            rows.append(row)
            m = (depth, noise, flooded)
            meta = m if meta is None else tuple(max(x, y) for x, y in zip(meta, m))
            offset = end + 5
        if not rows:
            raise ValueError("empty FHE ciphertext")
        if len({r.size for r in rows}) != 1:
            raise ValueError("ragged FHE ciphertext")
        return FheCiphertext(np.stack(rows), meta[0], meta[1], meta[2], public_key.tag), offset

    def serialize_public_key(self, pk):
        return bytes([FHE_ID]) + pk.tag + struct.pack("<QI", self.field.p, self.slots)

    def deserialize_public_key(self, buf):
        if len(buf) != 1 + KEY_TAG_LEN + 12 or buf[0] != FHE_ID:
            raise ValueError("malformed transparent FHE public key")
        p, slots = struct.unpack_from("<QI", buf, 1 + KEY_TAG_LEN)
        if p != self.field.p:
            raise KeyMismatch("peer uses a different field")
        return PublicKey("transparent-fhe", bytes(buf[1 : 1 + KEY_TAG_LEN]), {"p": p, "slots": slots})


class TransparentFheEvaluator:
    """Homomorphic operations for one party, with counting and depth tracking.

    ``max_depth`` is the largest depth of any ciphertext this evaluator
    produced (flooding does not reset it).
    """

    def __init__(self, scheme, public_key, secret_key=None, counter=None):
        self.scheme = scheme
        self.field = scheme.field
        self.pk = public_key
        self.sk = secret_key
        self.ops = counter if counter is not None else OpCounter()
        self.max_depth = 0
        if secret_key is not None and secret_key.tag != public_key.tag:
            raise KeyMismatch("secret key does not match public key")

    @property
    def slots(self):
        return self.scheme.slots

    def _out(self, data, depth, noise, flooded=False):
        self.max_depth = max(self.max_depth, depth)
        return FheCiphertext(data, depth, noise, flooded, self.pk.tag)

    def _check_slots(self, n):
        if n > self.scheme.slots:
            from ..errors import CapacityExceeded

            raise CapacityExceeded(f"{n} values exceed the {self.scheme.slots} available slots")

    def encrypt(self, values, rng=None):
        """Encrypt one batch of slot values (1-D) or a coefficient-by-slot array (2-D)."""
        arr = np.asarray(values)
        if arr.dtype != U64:
            arr = self.field.reduce(np.asarray(values, dtype=object))
        else:
            arr = self.field.reduce(arr)
        if arr.ndim == 1:
            arr = arr.reshape(1, -1)
        self._check_slots(arr.shape[1])
        self.ops.enc += arr.shape[0]
        return FheCiphertext(arr.copy(), 0, 0, False, self.pk.tag)

    def encrypt_poly(self, poly, length=None, rng=None):
        """Encrypt each coefficient of a cleartext polynomial into a one-slot ciphertext."""
        coeffs = poly.padded(length if length is not None else len(poly.coeffs))
        return self.encrypt(coeffs.reshape(-1, 1), rng)

    def decrypt(self, ct):
        if self.sk is None:
            raise KeyMismatch("no secret key for decryption")
        check_tags(self.sk.tag, ct)
        self.ops.dec += len(ct)
        return np.array(ct.data, dtype=U64)

    def _binary(self, a, b, op):
        check_tags(self.pk.tag, a, b)
        n = max(len(a), len(b))
        lanes = max(a.slots, b.slots)
        out = np.zeros((n, lanes), dtype=U64)
        out[: len(a)] = a.data
        out[: len(b)] = op(out[: len(b)], b.data)
        self.ops.add += min(len(a), len(b))
        return self._out(out, max(a.depth, b.depth), max(a.noise, b.noise), a.flooded or b.flooded)

    def add(self, a, b):
        return self._binary(a, b, self.field.add)

    def sub(self, a, b):
        if len(b) > len(a):
            a = a._new(np.concatenate([a.data, np.zeros((len(b) - len(a), a.slots), dtype=U64)]))
        return self._binary(a, b, self.field.sub)

    def neg(self, a):
        check_tags(self.pk.tag, a)
        self.ops.add += len(a)
        return self._out(self.field.neg(a.data), a.depth, a.noise, a.flooded)

    def _clear_2d(self, clear, lanes):
        arr = np.asarray(clear)
        if isinstance(clear, Polynomial) or arr.ndim <= 1:
            c = _as_clear(self.field, clear).reshape(-1, 1)
            return np.broadcast_to(c, (c.shape[0], lanes))
        return self.field.reduce(arr)

    def add_plain(self, a, clear):
        """``a + clear``; a 1-D / polynomial ``clear`` applies to every slot."""
        check_tags(self.pk.tag, a)
        c = self._clear_2d(clear, a.slots)
        n = max(len(a), c.shape[0])
        out = np.zeros((n, a.slots), dtype=U64)
        out[: len(a)] = a.data
        out[: c.shape[0]] = self.field.add(out[: c.shape[0]], c)
        self.ops.add += min(len(a), c.shape[0])
        return self._out(out, a.depth, a.noise, a.flooded)

    def plain_sub(self, clear, a):
        """``clear - a``."""
        return self.add_plain(self.neg(a), clear)

    def mul(self, a, b):
        """Ciphertext product: slot-wise, and a polynomial product along the coefficients."""
        check_tags(self.pk.tag, a, b)
        if a.flooded or b.flooded:
            raise FloodedCiphertext("cannot multiply a flooded ciphertext")
        cost = self.field.product_cost(len(a), len(b), both_encrypted=True)
        self.ops.mul += cost.mul
        self.ops.cmul += cost.cmul
        self.ops.add += cost.add
        data = self.field.conv(a.data, b.data)
        return self._out(data, max(a.depth, b.depth) + 1, max(a.noise, b.noise) + 1)

    def cmul(self, clear, a):
        """Cleartext polynomial (or scalar) times ciphertext; ``clear`` is shared by all slots."""
        check_tags(self.pk.tag, a)
        if a.flooded:
            raise FloodedCiphertext("cannot multiply a flooded ciphertext")
        c = _as_clear(self.field, clear)
        cost = self.field.product_cost(len(c), len(a), both_encrypted=False)
        self.ops.cmul += cost.mul + cost.cmul
        self.ops.add += cost.add
        if len(c) == 0:
            data = np.zeros((1, a.slots), dtype=U64)
        else:
            data = self.field.conv(c, a.data)
        return self._out(data, a.depth + 1, a.noise + 1)

    def flood(self, a):
        """Re-randomise for circuit privacy: same plaintext, canonical metadata."""
        check_tags(self.pk.tag, a)
        self.ops.flood += len(a)
        return FheCiphertext(a.data, 0, 0, True, self.pk.tag)
