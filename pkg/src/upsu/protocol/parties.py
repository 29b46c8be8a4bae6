"""The five protocol phases and the two role state machines.

The receiver owns the LHE secret key and learns the union; the sender owns
the FHE secret key and learns nothing.  Phase functions take a party context
(keys, evaluators, randomness); :class:`Receiver` and :class:`Sender` wrap
them behind a byte-in / byte-out interface for transports.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import ProtocolAbort
from ..field import U64
from ..he.base import LheCiphertext, OpCounter
from ..he.psi import NotPresent, psi_map, recover_y
from ..homo_poly import FactoredPolynomial, InverseHint, f_bsmev, f_mev, f_mod, l_mev
from ..poly import Polynomial, ProductTree, multipoint_eval, truncated_inverse
from ..rng import Csprng
from . import messages as msgs
from .messages import M1, M2, M3


@dataclass
class ReceiverKeys:
    lhe: object
    fhe_public: object


@dataclass
class SenderKeys:
    fhe: object
    lhe_public: object


def setup(rng, params, lhe_keys=None, fhe_keys=None):
    """Generate both key pairs; returns ``(receiver_keys, sender_keys)``."""
    lhe_keys = lhe_keys or params.lhe_scheme().keygen(rng.spawn("lhe-keys"))
    fhe_keys = fhe_keys or params.fhe_scheme().keygen(rng.spawn("fhe-keys"))
    return ReceiverKeys(lhe_keys, fhe_keys.public), SenderKeys(fhe_keys, lhe_keys.public)


class ReceiverContext:
    def __init__(self, params, keys, rng):
        self.params = params
        self.keys = keys
        self.rng = rng
        self.lhe_scheme = params.lhe_scheme()
        self.fhe_scheme = params.fhe_scheme()
        self.fhe_ops = OpCounter()
        self.lhe_ops = OpCounter()
        self.fhe = self.fhe_scheme.evaluator(keys.fhe_public, counter=self.fhe_ops)
        self.lhe = self.lhe_scheme.evaluator(keys.lhe.public, keys.lhe.secret, counter=self.lhe_ops)


class SenderContext:
    def __init__(self, params, keys, rng):
        self.params = params
        self.keys = keys
        self.rng = rng
        self.lhe_scheme = params.lhe_scheme()
        self.fhe_scheme = params.fhe_scheme()
        self.fhe_ops = OpCounter()
        self.lhe_ops = OpCounter()
        self.fhe = self.fhe_scheme.evaluator(keys.fhe.public, keys.fhe.secret, counter=self.fhe_ops)
        self.lhe = self.lhe_scheme.evaluator(keys.lhe_public, counter=self.lhe_ops)
        self._padded = None
        self._tree = None

    def padded(self, Y):
        """``Y`` repeated-first-element padded to capacity (sentinel if empty)."""
        if self._padded is None:
            m = self.params.sender_capacity
            fill = Y[0] if Y else self.params.sentinel
            self._padded = list(Y) + [fill] * (m - len(Y))
        return self._padded

    def tree(self, Y):
        if self._tree is None:
            self._tree = ProductTree(self.padded(Y), self.params.field)
        return self._tree


# ---------------------------------------------------------------- Encode


def _encode_set_poly(ctx, Y):
    m = ctx.params.sender_capacity
    ps = ctx.tree(Y).root
    u = truncated_inverse(ps.reverse(m), 1 << ctx.params.level)
    return ctx.fhe.encrypt_poly(ps), ctx.fhe.encrypt_poly(u, length=1 << ctx.params.level)


def encode_p1(Y, ctx):
    return M1(y=ctx.fhe.encrypt(np.array(ctx.padded(Y), dtype=U64)))


def encode_p2(Y, ctx):
    ps, hint = _encode_set_poly(ctx, Y)
    return M1(ps=ps, hint=hint)


def encode_p3(Y, ctx):
    ys = tuple(ctx.fhe.encrypt(np.array([y], dtype=U64)) for y in ctx.padded(Y))
    ps, hint = _encode_set_poly(ctx, Y)
    return M1(ys=ys, ps=ps, hint=hint)


# ---------------------------------------------------------------- Reduce


def _lhe_encrypt_field(ctx, values):
    # under Paillier the field values travel as their Psi images
    q = ctx.params.field.p
    return ctx.lhe.encrypt([psi_map(int(v), q) for v in values], ctx.rng)


def _receiver_poly(ctx, X):
    field = ctx.params.field
    return ProductTree(X, field).root if X else Polynomial.one(field)


def _hint(ctx, m1):
    return InverseHint(m1.hint, ctx.params.level) if ctx.params.use_hint else None


def reduce_p1(X, m1, ctx):
    field = ctx.params.field
    k = field.random_elements(ctx.rng, ctx.params.sender_capacity)
    masked = ctx.fhe.encrypt(k)
    if X:
        masked = ctx.fhe.add(masked, f_bsmev(ctx.fhe, FactoredPolynomial.from_roots(X, field), m1.y))
    else:
        masked = ctx.fhe.add_plain(masked, np.array([1], dtype=U64))
    return M2(h=ctx.fhe.flood(masked), masks=_lhe_encrypt_field(ctx, k))


def reduce_p2(X, m1, ctx):
    field = ctx.params.field
    m = ctx.params.sender_capacity
    pr = _receiver_poly(ctx, X)
    n = pr.degree
    if n > m:
        rem = f_mod(ctx.fhe, pr, m1.ps, _hint(ctx, m1))
    elif n == m:
        rem = ctx.fhe.add_plain(ctx.fhe.neg(m1.ps), pr).truncate(m)
    else:
        rem = ctx.fhe.encrypt(pr.padded(m).reshape(-1, 1))
    mask = field.random_elements(ctx.rng, m)
    h = ctx.fhe.flood(ctx.fhe.add(rem, ctx.fhe.encrypt(mask.reshape(-1, 1))))
    return M2(h=h, masks=_lhe_encrypt_field(ctx, mask))


def reduce_p3(X, m1, ctx):
    field = ctx.params.field
    m = ctx.params.sender_capacity
    pr = _receiver_poly(ctx, X)
    root = m1.ps if ctx.params.use_hint else None
    evals = f_mev(ctx.fhe, pr, list(m1.ys), hint=_hint(ctx, m1), root=root, strict=False)
    k = field.random_elements(ctx.rng, m)
    hs = tuple(ctx.fhe.flood(ctx.fhe.add(e, ctx.fhe.encrypt(k[i : i + 1]))) for i, e in enumerate(evals))
    return M2(hs=hs, masks=_lhe_encrypt_field(ctx, k))


# ---------------------------------------------------------------- Map


def _permute(ct, perm):
    vals = ct.values.copy()
    vals[np.asarray(perm)] = ct.values
    return LheCiphertext(vals, ct.key_tag, ct.pad)


def _finish_map(ctx, Y, e):
    # products with cleartext y are deterministic in e; each output is
    # re-randomised so the receiver cannot test candidate values against them
    params = ctx.params
    lhe, rng = ctx.lhe, ctx.rng
    ys = ctx.padded(Y)
    perm = rng.permutation(params.sender_capacity)
    if params.backend == "paillier" and params.protocol == 2:
        # integers from the transposed evaluation exceed p: hide all but e mod p
        r1, r2, _ = _smudge(params)
        p = params.field.p
        e = lhe.add_plain(e, [p * rng.randbelow(r1) for _ in ys])
        eta = lhe.add_plain(lhe.scalar_mul(ys, e), [p * rng.randbelow(r2) for _ in ys])
        return M3(e=_permute(e, perm), eta=_permute(lhe.rerandomize(eta, rng), perm))
    eta = lhe.rerandomize(lhe.scalar_mul(ys, e), rng)
    nu = None
    if msgs.m3_has_nu(params):
        nu = _permute(lhe.rerandomize(lhe.scalar_mul(ys, lhe.neg(e)), rng), perm)
    return M3(e=_permute(e, perm), eta=_permute(eta, perm), nu=nu)


def _smudge(params):
    from .params import p2_smudge_ranges

    return p2_smudge_ranges(params.field.p, params.sender_capacity, params.statistical)


def map_p1(Y, m2, ctx):
    h = ctx.fhe.decrypt(m2.h)[0]
    e = ctx.lhe.sub(_lhe_encrypt_field(ctx, h), m2.masks)
    return _finish_map(ctx, Y, e)


def map_p2(Y, m2, ctx):
    field = ctx.params.field
    ys = ctx.padded(Y)
    tree = ctx.tree(Y)
    hpoly = Polynomial._raw(ctx.fhe.decrypt(m2.h)[:, 0], field)
    h = multipoint_eval(hpoly, ys, tree)
    masked = l_mev(ctx.lhe, m2.masks, ys, tree)
    e = ctx.lhe.sub(_lhe_encrypt_field(ctx, h), masked)
    return _finish_map(ctx, Y, e)


def map_p3(Y, m2, ctx):
    h = [int(ctx.fhe.decrypt(c)[0, 0]) for c in m2.hs]
    e = ctx.lhe.sub(_lhe_encrypt_field(ctx, h), m2.masks)
    return _finish_map(ctx, Y, e)


# ---------------------------------------------------------------- Union


def _centre(v, n):
    return v - n if v > n // 2 else v


def union(X, m3, ctx):
    params = ctx.params
    p = params.field.p
    es = ctx.lhe.decrypt(m3.e)
    etas = ctx.lhe.decrypt(m3.eta)
    found = set()
    if params.backend == "transparent":
        for e, eta in zip(es, etas):
            if e:
                found.add(eta * pow(e, -1, p) % p)
    elif params.protocol == 2:
        n = ctx.lhe.plaintext_modulus
        for e, eta in zip(es, etas):
            e = _centre(e, n) % p
            if e:
                found.add(_centre(eta, n) * pow(e, -1, p) % p)
    else:
        n = ctx.lhe.plaintext_modulus
        for e, eta, nu in zip(es, etas, ctx.lhe.decrypt(m3.nu)):
            y = recover_y(e, eta, nu, n, p)
            if y is not NotPresent:
                found.add(y)
    found.discard(params.sentinel)
    return set(X) | found


ENCODE = {1: encode_p1, 2: encode_p2, 3: encode_p3}
REDUCE = {1: reduce_p1, 2: reduce_p2, 3: reduce_p3}
MAP = {1: map_p1, 2: map_p2, 3: map_p3}


# ---------------------------------------------------------------- roles


class _Role:
    def _advance(self, expected, nxt):
        if self.state != expected:
            raise ProtocolAbort(f"message out of order: in state {self.state!r}")
        self.state = nxt

    def _sent(self, tag, payload, count=None):
        self.sent[msgs.ROUND_NAMES[tag]] = len(payload)
        if count is not None:
            self.sent_ciphertexts[msgs.ROUND_NAMES[tag]] = count
        return payload


class Receiver(_Role):
    """Receiver state machine: ``start`` -> ``on_key`` -> ``on_m1`` -> ``on_m3``."""

    def __init__(self, params, X, rng=None, lhe_keys=None):
        self.params = params
        self.X = params.check_elements(X, params.receiver_capacity, "receiver")
        self.rng = rng or Csprng()
        self.lhe_keys = lhe_keys
        self.ctx = None
        self.state = "init"
        self.sent = {}
        self.sent_ciphertexts = {}
        self.result = None

    def start(self):
        self._advance("init", "await_key")
        scheme = self.params.lhe_scheme()
        if self.lhe_keys is None:
            self.lhe_keys = scheme.keygen(self.rng.spawn("lhe-keys"))
        return self._sent(msgs.KX_R, scheme.serialize_public_key(self.lhe_keys.public))

    def on_key(self, payload):
        self._advance("await_key", "await_m1")
        fhe_pk = msgs.decode_public_key(self.params.fhe_scheme(), payload)
        self.ctx = ReceiverContext(self.params, ReceiverKeys(self.lhe_keys, fhe_pk), self.rng)

    def on_m1(self, payload):
        self._advance("await_m1", "await_m3")
        ctx = self.ctx
        m1 = msgs.decode_m1(payload, self.params, ctx.fhe_scheme, ctx.keys.fhe_public)
        m2 = REDUCE[self.params.protocol](self.X, m1, ctx)
        body = msgs.encode_m2(m2, self.params, ctx.fhe_scheme, ctx.lhe_scheme, ctx.keys.lhe.public)
        return self._sent(msgs.M2_TAG, body, m2.ciphertext_count())

    def on_m3(self, payload):
        self._advance("await_m3", "done")
        ctx = self.ctx
        m3 = msgs.decode_m3(payload, self.params, ctx.lhe_scheme, ctx.keys.lhe.public)
        self.result = union(self.X, m3, ctx)
        return self.result

    @property
    def max_depth(self):
        return self.ctx.fhe.max_depth if self.ctx else 0


class Sender(_Role):
    """Sender state machine: ``on_key`` (returns own key) -> ``encode`` -> ``on_m2``."""

    def __init__(self, params, Y, rng=None, fhe_keys=None):
        self.params = params
        self.Y = params.check_elements(Y, params.sender_capacity, "sender")
        self.rng = rng or Csprng()
        self.fhe_keys = fhe_keys
        self.ctx = None
        self.state = "await_key"
        self.sent = {}
        self.sent_ciphertexts = {}

    def on_key(self, payload):
        self._advance("await_key", "ready")
        lhe_pk = msgs.decode_public_key(self.params.lhe_scheme(), payload)
        scheme = self.params.fhe_scheme()
        if self.fhe_keys is None:
            self.fhe_keys = scheme.keygen(self.rng.spawn("fhe-keys"))
        self.ctx = SenderContext(self.params, SenderKeys(self.fhe_keys, lhe_pk), self.rng)
        return self._sent(msgs.KX_S, scheme.serialize_public_key(self.fhe_keys.public))

    def encode(self):
        self._advance("ready", "await_m2")
        m1 = ENCODE[self.params.protocol](self.Y, self.ctx)
        body = msgs.encode_m1(m1, self.params, self.ctx.fhe_scheme)
        return self._sent(msgs.M1_TAG, body, m1.ciphertext_count())

    def on_m2(self, payload):
        self._advance("await_m2", "done")
        ctx = self.ctx
        m2 = msgs.decode_m2(
            payload, self.params, ctx.fhe_scheme, ctx.keys.fhe.public, ctx.lhe_scheme, ctx.keys.lhe_public
        )
        m3 = MAP[self.params.protocol](self.Y, m2, ctx)
        body = msgs.encode_m3(m3, self.params, ctx.lhe_scheme, ctx.keys.lhe_public)
        return self._sent(msgs.M3_TAG, body, m3.ciphertext_count())
