"""In-process driver: both roles exchanging serialized messages, plus metrics."""

from dataclasses import asdict, dataclass, field

from ..rng import Csprng
from .params import ProtocolParams
from .parties import Receiver, Sender

METRICS_SCHEMA = 1


@dataclass(frozen=True)
class RunMetrics:
    """Frozen record of one run.

    ``receiver_ops`` counts the receiver's homomorphic operations (FHE and
    LHE additions, cleartext and ciphertext products); ``sender_ops`` counts
    every sender operation including encryptions and decryptions.  Byte
    counts are payload sizes per round (frames add seven bytes each).
    """

    protocol: int
    backend: str
    n: int
    m: int
    capacity: int
    max_depth: int
    receiver_ops: int
    sender_ops: int
    receiver_fhe: dict = field(default_factory=dict)
    receiver_lhe: dict = field(default_factory=dict)
    sender_fhe: dict = field(default_factory=dict)
    sender_lhe: dict = field(default_factory=dict)
    bytes: dict = field(default_factory=dict)
    ciphertexts: dict = field(default_factory=dict)

    @property
    def receiver_bytes(self):
        return self.bytes.get("kx_r", 0) + self.bytes.get("m2", 0)

    @property
    def sender_bytes(self):
        return self.bytes.get("kx_s", 0) + self.bytes.get("m1", 0) + self.bytes.get("m3", 0)

    @property
    def comm_bytes(self):
        return self.receiver_bytes + self.sender_bytes

    def as_dict(self):
        d = asdict(self)
        d.update(
            schema=METRICS_SCHEMA,
            receiver_bytes=self.receiver_bytes,
            sender_bytes=self.sender_bytes,
            comm_bytes=self.comm_bytes,
        )
        return d


def _total(counter):
    return counter.add + counter.cmul + counter.mul + counter.enc + counter.dec


def collect_metrics(receiver, sender):
    rc, sc = receiver.ctx, sender.ctx
    params = receiver.params
    return RunMetrics(
        protocol=params.protocol,
        backend=params.backend,
        n=len(receiver.X),
        m=len(sender.Y),
        capacity=params.sender_capacity,
        max_depth=receiver.max_depth,
        receiver_ops=rc.fhe_ops.homomorphic + rc.lhe_ops.homomorphic,
        sender_ops=_total(sc.fhe_ops) + _total(sc.lhe_ops),
        receiver_fhe=rc.fhe_ops.as_dict(),
        receiver_lhe=rc.lhe_ops.as_dict(),
        sender_fhe=sc.fhe_ops.as_dict(),
        sender_lhe=sc.lhe_ops.as_dict(),
        bytes={**receiver.sent, **sender.sent},
        ciphertexts={**receiver.sent_ciphertexts, **sender.sent_ciphertexts},
    )


def run_local(X, Y, params=None, seed=None, lhe_keys=None, fhe_keys=None, **kw):
    """Run all phases in-process; returns ``(union, RunMetrics)``.

    ``params`` defaults to ``ProtocolParams(**kw)``.  Key pairs may be
    supplied to skip key generation (useful for large test sweeps).
    """
    if params is None:
        params = ProtocolParams(**kw)
    root = Csprng(seed)
    receiver = Receiver(params, X, root.spawn("receiver"), lhe_keys=lhe_keys)
    sender = Sender(params, Y, root.spawn("sender"), fhe_keys=fhe_keys)
    kx_s = sender.on_key(receiver.start())
    receiver.on_key(kx_s)
    m2 = receiver.on_m1(sender.encode())
    out = receiver.on_m3(sender.on_m2(m2))
    return out, collect_metrics(receiver, sender)
