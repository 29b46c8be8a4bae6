"""Seedable cryptographic randomness.

A ChaCha20 keystream keyed by ``sha256(seed)``; with no seed the key comes
from the OS.  Seeding exists for reproducible tests and transcripts only.
"""

import hashlib
import os

import numpy as np
from cryptography.hazmat.primitives.ciphers import Cipher, algorithms

_ZERO_BLOCK = bytes(4096)


class Csprng:
    def __init__(self, seed=None):
        if seed is None:
            key = os.urandom(32)
        elif isinstance(seed, bytes):
            key = hashlib.sha256(seed).digest()
        else:
            key = hashlib.sha256(repr(seed).encode()).digest()
        self._key = key
        self._stream = Cipher(algorithms.ChaCha20(key, bytes(16)), mode=None).encryptor()

    def spawn(self, label):
        """Independent child stream; same parent state and label give the same child."""
        return Csprng(hashlib.sha256(self._key + b"/" + str(label).encode()).digest())

    def bytes(self, n):
        out = bytearray()
        while len(out) < n:
            out += self._stream.update(_ZERO_BLOCK[: min(4096, n - len(out))])
        return bytes(out)

    def getrandbits(self, k):
        if k <= 0:
            return 0
        raw = int.from_bytes(self.bytes((k + 7) // 8), "little")
        return raw & ((1 << k) - 1)

    def randbelow(self, n):
        if n <= 0:
            raise ValueError("randbelow needs a positive bound")
        k = (n - 1).bit_length()
        while True:
            r = self.getrandbits(k)
            if r < n:
                return r

    def randrange(self, lo, hi):
        return lo + self.randbelow(hi - lo)

    def field_elements(self, p, count):
        """``count`` uniform values in [0, p) as ``uint64`` (rejection sampling)."""
        bits = (p - 1).bit_length()
        mask = np.uint64((1 << bits) - 1)
        out = np.empty(0, dtype=np.uint64)
        while out.size < count:
            need = count - out.size
            batch = need + need // 2 + 8
            raw = np.frombuffer(self.bytes(8 * batch), dtype="<u8") & mask
            out = np.concatenate([out, raw[raw < np.uint64(p)][:need]])
        return out

    def permutation(self, m):
        perm = list(range(m))
        for i in range(m - 1, 0, -1):
            j = self.randbelow(i + 1)
            perm[i], perm[j] = perm[j], perm[i]
        return perm

    def token(self, n=16):
        return self.bytes(n)
