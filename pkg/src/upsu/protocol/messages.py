"""Round messages and their byte encodings.

Payloads are concatenations of self-delimiting ciphertext encodings; the
layout depends only on (protocol, round, backend, sender capacity).
Decoders validate the shape and raise :class:`ProtocolAbort` on mismatch.
"""

import struct
from dataclasses import dataclass

from ..errors import KeyMismatch, ProtocolAbort
from ..he.base import LheCiphertext

KX_R = 0x01
KX_S = 0x02
M1_TAG = 0x10
M2_TAG = 0x20
M3_TAG = 0x30

ROUND_NAMES = {KX_R: "kx_r", KX_S: "kx_s", M1_TAG: "m1", M2_TAG: "m2", M3_TAG: "m3"}


@dataclass(frozen=True)
class M1:
    """Sender's encoded set: ``y`` (P1 batch), ``ys`` (P3 list), ``ps`` + ``hint`` (P2/P3)."""

    y: object = None
    ys: tuple = None
    ps: object = None
    hint: object = None

    def ciphertext_count(self):
        n = 0
        if self.y is not None:
            n += 1
        if self.ys is not None:
            n += len(self.ys)
        if self.ps is not None:
            n += len(self.ps) + len(self.hint)
        return n


@dataclass(frozen=True)
class M2:
    """Receiver's masked reduction: ``h`` (P1 batch / P2 polynomial) or ``hs`` (P3), and LHE masks."""

    masks: LheCiphertext
    h: object = None
    hs: tuple = None

    def ciphertext_count(self):
        n = len(self.masks)
        if self.h is not None:
            n += len(self.h)
        if self.hs is not None:
            n += len(self.hs)
        return n


@dataclass(frozen=True)
class M3:
    """Sender's permuted LHE vectors; ``nu`` is present only in the three-ciphertext regime."""

    e: LheCiphertext
    eta: LheCiphertext
    nu: LheCiphertext = None

    def ciphertext_count(self):
        return len(self.e) + len(self.eta) + (len(self.nu) if self.nu is not None else 0)


def _fhe_list(fhe, cts):
    return struct.pack("<I", len(cts)) + b"".join(fhe.serialize(c) for c in cts)


def _read_fhe_list(fhe, buf, pk, offset):
    (n,) = struct.unpack_from("<I", buf, offset)
    offset += 4
    out = []
    for _ in range(n):
        c, offset = fhe.deserialize(buf, pk, offset)
        out.append(c)
    return tuple(out), offset


def _guard(fn):
    def wrapped(*args, **kw):
        try:
            return fn(*args, **kw)
        except ProtocolAbort:
            raise
        except (ValueError, KeyMismatch, struct.error, IndexError) as exc:
            raise ProtocolAbort(f"malformed message: {exc}") from exc

    wrapped.__name__ = fn.__name__
    wrapped.__doc__ = fn.__doc__
    return wrapped


def _expect(cond, what):
    if not cond:
        raise ProtocolAbort(f"unexpected message shape: {what}")


def _done(buf, offset):
    _expect(offset == len(buf), "trailing bytes")


# ------------------------------------------------------------------ M1


def encode_m1(msg, params, fhe):
    if params.protocol == 1:
        return fhe.serialize(msg.y)
    body = fhe.serialize(msg.ps) + fhe.serialize(msg.hint)
    if params.protocol == 3:
        body = _fhe_list(fhe, msg.ys) + body
    return body


@_guard
def decode_m1(buf, params, fhe, pk):
    m = params.sender_capacity
    off = 0
    if params.protocol == 1:
        y, off = fhe.deserialize(buf, pk, off)
        _done(buf, off)
        _expect(len(y) == 1 and y.slots == m, "P1 batch")
        return M1(y=y)
    ys = None
    if params.protocol == 3:
        ys, off = _read_fhe_list(fhe, buf, pk, off)
        _expect(len(ys) == m and all(len(c) == 1 and c.slots == 1 for c in ys), "P3 points")
    ps, off = fhe.deserialize(buf, pk, off)
    hint, off = fhe.deserialize(buf, pk, off)
    _done(buf, off)
    _expect(len(ps) == m + 1 and ps.slots == 1, "set polynomial")
    _expect(len(hint) == 1 << params.level and hint.slots == 1, "inverse hint")
    return M1(y=None, ys=ys, ps=ps, hint=hint)


# ------------------------------------------------------------------ M2


def encode_m2(msg, params, fhe, lhe, lhe_pk):
    if params.protocol == 3:
        head = _fhe_list(fhe, msg.hs)
    else:
        head = fhe.serialize(msg.h)
    return head + lhe.serialize(msg.masks, lhe_pk)


@_guard
def decode_m2(buf, params, fhe, fhe_pk, lhe, lhe_pk):
    m = params.sender_capacity
    off = 0
    h = hs = None
    if params.protocol == 3:
        hs, off = _read_fhe_list(fhe, buf, fhe_pk, off)
        _expect(len(hs) == m and all(len(c) == 1 and c.slots == 1 for c in hs), "P3 evaluations")
    else:
        h, off = fhe.deserialize(buf, fhe_pk, off)
        if params.protocol == 1:
            _expect(len(h) == 1 and h.slots == m, "P1 evaluations")
        else:
            _expect(len(h) == m and h.slots == 1, "P2 remainder")
    masks, off = lhe.deserialize(buf, lhe_pk, off)
    _done(buf, off)
    _expect(len(masks) == m, "mask count")
    return M2(masks=masks, h=h, hs=hs)


# ------------------------------------------------------------------ M3


def m3_has_nu(params):
    return params.backend == "paillier" and params.protocol != 2


def encode_m3(msg, params, lhe, lhe_pk):
    body = lhe.serialize(msg.e, lhe_pk) + lhe.serialize(msg.eta, lhe_pk)
    if m3_has_nu(params):
        body += lhe.serialize(msg.nu, lhe_pk)
    return body


@_guard
def decode_m3(buf, params, lhe, lhe_pk):
    m = params.sender_capacity
    e, off = lhe.deserialize(buf, lhe_pk, 0)
    eta, off = lhe.deserialize(buf, lhe_pk, off)
    nu = None
    if m3_has_nu(params):
        nu, off = lhe.deserialize(buf, lhe_pk, off)
    _done(buf, off)
    _expect(len(e) == m and len(eta) == m and (nu is None or len(nu) == m), "M3 vectors")
    return M3(e=e, eta=eta, nu=nu)


# ------------------------------------------------------------------ sizes


def payload_size(tag, params, fhe, lhe, lhe_pk):
    """Analytic payload length of a round; depends on (protocol, m̄, keys) only."""
    m = params.sender_capacity
    single = 4 + fhe.row_size(1)
    lhe_vec = 4 + m * lhe.entry_size(lhe_pk)
    poly_part = 4 + (m + 1) * fhe.row_size(1) + 4 + (1 << params.level) * fhe.row_size(1)
    if tag == M1_TAG:
        if params.protocol == 1:
            return 4 + fhe.row_size(m)
        return poly_part + (4 + m * single if params.protocol == 3 else 0)
    if tag == M2_TAG:
        if params.protocol == 1:
            head = 4 + fhe.row_size(m)
        elif params.protocol == 2:
            head = 4 + m * fhe.row_size(1)
        else:
            head = 4 + m * single
        return head + lhe_vec
    if tag == M3_TAG:
        return (3 if m3_has_nu(params) else 2) * lhe_vec
    raise ValueError(f"no fixed size for round tag {tag:#x}")


@_guard
def decode_public_key(scheme, buf):
    return scheme.deserialize_public_key(buf)
