"""Paillier additively homomorphic encryption (g = N + 1) over Z_N."""

import struct

import gmpy2
import numpy as np

from ..errors import KeyMismatch, ParamsTooSmall
from .base import KEY_TAG_LEN, KeyPair, LheCiphertext, OpCounter, PublicKey, SecretKey, check_tags

PAILLIER_ID = 0x02
DEFAULT_BITS = 2048

_ONE = gmpy2.mpz(1)


def _random_prime(rng, bits):
    while True:
        c = rng.getrandbits(bits) | (3 << (bits - 2)) | 1
        if gmpy2.is_prime(c, 40):
            return gmpy2.mpz(c)


def _objs(values):
    out = np.empty(len(values), dtype=object)
    out[:] = list(values)
    return out


class PaillierLhe:
    """Paillier keys, encryption and the vector extension of its homomorphisms.

    ``min_bits`` is the smallest modulus the caller accepts; the default
    follows from requiring ``p**2 < N`` for the field modulus ``p``.
    """

    name = "paillier"
    backend_id = PAILLIER_ID

    def __init__(self, field, bits=DEFAULT_BITS, min_bits=None):
        self.field = field
        self.bits = int(bits)
        self.min_bits = 2 * field.bits + 2 if min_bits is None else int(min_bits)
        if self.bits < self.min_bits:
            raise ParamsTooSmall(f"Paillier modulus of {self.bits} bits is below the required {self.min_bits}")

    def keygen(self, rng):
        half = self.bits // 2
        while True:
            p1 = _random_prime(rng, half)
            q1 = _random_prime(rng, self.bits - half)
            n = p1 * q1
            if p1 != q1 and n.bit_length() == self.bits and gmpy2.gcd(n, (p1 - 1) * (q1 - 1)) == 1:
                break
        tag = rng.token(KEY_TAG_LEN)
        pk = PublicKey("paillier", tag, {"n": n, "n2": n * n})
        p2, q2 = p1 * p1, q1 * q1
        sk = SecretKey(
            "paillier",
            tag,
            {
                "p": p1,
                "q": q1,
                "p2": p2,
                "q2": q2,
                # h_p = L_p(g^(p-1) mod p^2)^-1 mod p, likewise for q
                "hp": gmpy2.invert((gmpy2.powmod(n + 1, p1 - 1, p2) - 1) // p1, p1),
                "hq": gmpy2.invert((gmpy2.powmod(n + 1, q1 - 1, q2) - 1) // q1, q1),
                "pinv_q": gmpy2.invert(p1, q1),
                "p2inv_q2": gmpy2.invert(p2, q2),
            },
        )
        return KeyPair(pk, sk)

    def evaluator(self, public_key, secret_key=None, counter=None):
        if public_key.scheme != "paillier":
            raise KeyMismatch("public key does not belong to this backend")
        if public_key.n.bit_length() < self.min_bits:
            raise ParamsTooSmall("peer's Paillier modulus is too small")
        return PaillierEvaluator(public_key, secret_key, counter)

    # wire format: per entry id byte, key tag, 4-byte big-endian length and
    # the ciphertext big-endian, left-padded to the byte length of N^2

    @staticmethod
    def _width(public_key):
        return (public_key.n2.bit_length() + 7) // 8

    def entry_size(self, public_key):
        return 1 + KEY_TAG_LEN + 4 + self._width(public_key)

    def serialize(self, ct, public_key):
        w = self._width(public_key)
        head = bytes([PAILLIER_ID]) + ct.key_tag + struct.pack(">I", w)
        return struct.pack("<I", len(ct)) + b"".join(head + int(v).to_bytes(w, "big") for v in ct.values)

    def deserialize(self, buf, public_key, offset=0):
        (n,) = struct.unpack_from("<I", buf, offset)
        offset += 4
        vals = []
        for _ in range(n):
            if offset + 21 > len(buf) or buf[offset] != PAILLIER_ID:
                raise ValueError("malformed Paillier ciphertext")
            if bytes(buf[offset + 1 : offset + 17]) != public_key.tag:
                raise KeyMismatch("ciphertext key tag does not match")
            (w,) = struct.unpack_from(">I", buf, offset + 17)
            start = offset + 21
            if start + w > len(buf):
                raise ValueError("truncated Paillier ciphertext")
            v = gmpy2.mpz(int.from_bytes(bytes(buf[start : start + w]), "big"))
            if not 0 < v < public_key.n2:
                raise ValueError("Paillier ciphertext out of range")
            vals.append(v)
            offset = start + w
        return LheCiphertext(_objs(vals), public_key.tag, _ONE), offset

    def serialize_public_key(self, pk):
        nb = int(pk.n).to_bytes((pk.n.bit_length() + 7) // 8, "big")
        return bytes([PAILLIER_ID]) + pk.tag + struct.pack(">I", len(nb)) + nb

    def deserialize_public_key(self, buf):
        if len(buf) < 1 + KEY_TAG_LEN + 4 or buf[0] != PAILLIER_ID:
            raise ValueError("malformed Paillier public key")
        (ln,) = struct.unpack_from(">I", buf, 1 + KEY_TAG_LEN)
        body = bytes(buf[1 + KEY_TAG_LEN + 4 :])
        if len(body) != ln:
            raise ValueError("malformed Paillier public key")
        n = gmpy2.mpz(int.from_bytes(body, "big"))
        if n.bit_length() < self.min_bits:
            raise ParamsTooSmall("peer's Paillier modulus is too small")
        return PublicKey("paillier", bytes(buf[1 : 1 + KEY_TAG_LEN]), {"n": n, "n2": n * n})


class PaillierEvaluator:
    def __init__(self, public_key, secret_key=None, counter=None):
        self.pk = public_key
        self.sk = secret_key
        self.n = public_key.n
        self.n2 = public_key.n2
        self.ops = counter if counter is not None else OpCounter()
        if secret_key is not None and secret_key.tag != public_key.tag:
            raise KeyMismatch("secret key does not match public key")

    @property
    def plaintext_modulus(self):
        return int(self.n)

    def _wrap(self, values):
        return LheCiphertext(_objs(values), self.pk.tag, _ONE)

    def _noise(self, rng):
        """``r^N mod N^2`` for fresh uniform ``r``; CRT-accelerated for the key owner."""
        n = self.n
        r = gmpy2.mpz(rng.randrange(1, int(n)))
        sk = self.sk
        if sk is None:
            return gmpy2.powmod(r, n, self.n2)
        xp = gmpy2.powmod(r, n, sk.p2)
        xq = gmpy2.powmod(r, n, sk.q2)
        return xp + sk.p2 * ((xq - xp) * sk.p2inv_q2 % sk.q2)

    def encrypt(self, values, rng):
        n, n2 = self.n, self.n2
        out = []
        for m in np.atleast_1d(np.asarray(values, dtype=object)):
            out.append((1 + (gmpy2.mpz(int(m)) % n) * n) * self._noise(rng) % n2)
        self.ops.enc += len(out)
        return self._wrap(out)

    def rerandomize(self, a, rng):
        """Multiply each entry by a fresh encryption of zero."""
        check_tags(self.pk.tag, a)
        self.ops.enc += len(a)
        n2 = self.n2
        return self._wrap([c * self._noise(rng) % n2 for c in a.values])

    def add_plain(self, a, values):
        """Entry-wise ``a_i + v_i`` for cleartext integers ``v`` (no re-randomisation)."""
        check_tags(self.pk.tag, a)
        self.ops.add += len(a)
        n, n2 = self.n, self.n2
        return self._wrap([c * (1 + (gmpy2.mpz(int(v)) % n) * n) % n2 for c, v in zip(a.values, values)])

    def decrypt(self, ct):
        if self.sk is None:
            raise KeyMismatch("no secret key for decryption")
        check_tags(self.sk.tag, ct)
        sk = self.sk
        p, q = sk.p, sk.q
        self.ops.dec += len(ct)
        out = []
        for c in ct.values:
            mp = (gmpy2.powmod(c, p - 1, sk.p2) - 1) // p * sk.hp % p
            mq = (gmpy2.powmod(c, q - 1, sk.q2) - 1) // q * sk.hq % q
            out.append(int(mp + p * ((mq - mp) * sk.pinv_q % q)))
        return out

    def add(self, a, b):
        check_tags(self.pk.tag, a, b)
        self.ops.add += len(a)
        n2 = self.n2
        return self._wrap([x * y % n2 for x, y in zip(a.values, b.values)])

    def neg(self, a):
        check_tags(self.pk.tag, a)
        self.ops.add += len(a)
        return self._wrap([gmpy2.invert(x, self.n2) for x in a.values])

    def sub(self, a, b):
        check_tags(self.pk.tag, a, b)
        self.ops.add += len(a)
        n2 = self.n2
        return self._wrap([x * gmpy2.invert(y, n2) % n2 for x, y in zip(a.values, b.values)])

    def scalar_mul(self, k, a):
        check_tags(self.pk.tag, a)
        ks = np.broadcast_to(np.asarray(k, dtype=object), (len(a),))
        self.ops.cmul += len(a)
        n, n2 = self.n, self.n2
        return self._wrap([gmpy2.powmod(c, gmpy2.mpz(int(s)) % n, n2) for s, c in zip(ks, a.values)])

    def poly_cmul(self, clear, a, lo=None, hi=None):
        """Cleartext polynomial (non-negative integer coefficients) times ciphertext vector.

        Only output coefficients ``lo..hi`` are computed.
        """
        check_tags(self.pk.tag, a)
        coeffs = clear.to_list() if hasattr(clear, "to_list") else [int(c) for c in np.atleast_1d(clear)]
        coeffs = [gmpy2.mpz(c) % self.n for c in coeffs]
        la, lb = len(coeffs), len(a)
        lo = 0 if lo is None else lo
        hi = la + lb - 2 if hi is None else hi
        n2 = self.n2
        cts = a.values
        tables = {}
        out = []
        for k in range(lo, hi + 1):
            terms = [(k - i, coeffs[i]) for i in range(max(0, k - lb + 1), min(la - 1, k) + 1) if coeffs[i]]
            if len(terms) <= _STRAUS_MIN:
                acc = _ONE
                for j, e in terms:
                    acc = acc * gmpy2.powmod(cts[j], e, n2) % n2
            else:
                acc = _multi_pow(cts, terms, tables, n2)
            t = max(0, min(la - 1, k) - max(0, k - lb + 1) + 1)
            self.ops.cmul += t
            self.ops.add += max(t - 1, 0)
            out.append(acc)
        return self._wrap(out)


_WINDOW = 4
_STRAUS_MIN = 2


def _multi_pow(cts, terms, tables, n2):
    """``prod cts[j]^e mod n2`` by simultaneous fixed-window exponentiation.

    The squarings are shared across terms and the per-base window tables are
    cached in ``tables`` so that overlapping products reuse them.
    """
    mask = (1 << _WINDOW) - 1
    rows = []
    for j, _ in terms:
        tab = tables.get(j)
        if tab is None:
            c = cts[j]
            tab = [_ONE, c]
            for _ in range(mask - 1):
                tab.append(tab[-1] * c % n2)
            tables[j] = tab
        rows.append(tab)
    exps = [e for _, e in terms]
    nwin = -(-max(e.bit_length() for e in exps) // _WINDOW)
    acc = _ONE
    for w in range(nwin - 1, -1, -1):
        if acc != 1:
            for _ in range(_WINDOW):
                acc = acc * acc % n2
        shift = w * _WINDOW
        for tab, e in zip(rows, exps):
            d = (e >> shift) & mask
            if d:
                acc = acc * tab[d] % n2
    return acc
