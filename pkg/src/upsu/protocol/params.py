"""Public run parameters shared by both parties."""

from dataclasses import dataclass, field

from ..errors import CapacityExceeded, ConfigError
from ..field import PrimeField
from ..he.paillier import DEFAULT_BITS, PaillierLhe
from ..he.transparent import DEFAULT_SLOTS, TransparentFhe, TransparentLhe

PROTOCOLS = (1, 2, 3)
BACKENDS = ("transparent", "paillier")


def is_power_of_two(x):
    return x >= 1 and x & (x - 1) == 0


def lmev_bound(p, m):
    """Upper bound on the integers produced by the transposed evaluation over Z.

    All cleartext coefficients and encrypted inputs are lifts in [0, p).
    """
    bound = m * (p - 1) ** 2
    d = m // 2
    while d >= 1:
        bound *= (d + 1) * (p - 1)
        d //= 2
    return bound


def p2_smudge_ranges(p, m, lam):
    """``(R1, R2, limit)``: smudging ranges for Protocol 2 over Paillier and the
    largest absolute value the receiver may decrypt."""
    b = lmev_bound(p, m) + p
    r1 = (1 << lam) * (-(-b // p))
    e_max = b + p * r1
    r2 = (1 << lam) * e_max
    limit = p * e_max + p * r2
    return r1, r2, limit


def p2_paillier_min_bits(p, m, lam):
    _, _, limit = p2_smudge_ranges(p, m, lam)
    return (2 * limit + 1).bit_length() + 1


@dataclass(frozen=True)
class ProtocolParams:
    """Everything both parties must agree on before a run.

    ``sender_capacity`` is the public bound on |Y| (a power of two),
    ``receiver_capacity`` the bound on |X| (None for unbounded).
    """

    protocol: int = 1
    backend: str = "transparent"
    field: PrimeField = field(default_factory=PrimeField)
    sender_capacity: int = 32
    receiver_capacity: int = None
    slots: int = DEFAULT_SLOTS
    paillier_bits: int = None
    statistical: int = 40
    use_hint: bool = True

    def __post_init__(self):
        if self.protocol not in PROTOCOLS:
            raise ConfigError(f"unknown protocol {self.protocol!r}")
        if self.backend not in BACKENDS:
            raise ConfigError(f"unknown backend {self.backend!r}")
        if not is_power_of_two(self.sender_capacity):
            raise ConfigError("sender capacity must be a power of two")
        if self.receiver_capacity is not None:
            if not is_power_of_two(self.receiver_capacity):
                raise ConfigError("receiver capacity must be a power of two")
            if self.receiver_capacity < self.sender_capacity:
                raise CapacityExceeded("receiver capacity is below the sender capacity")
        if self.protocol == 1 and self.sender_capacity > self.slots:
            raise CapacityExceeded(f"capacity {self.sender_capacity} exceeds {self.slots} FHE slots")

    @property
    def sentinel(self):
        """Public padding value for an empty sender set; not a valid input element."""
        return self.field.p - 1

    @property
    def level(self):
        return (self.sender_capacity - 1).bit_length()

    def paillier_min_bits(self):
        base = 2 * self.field.bits + 2
        if self.protocol == 2:
            return max(base, p2_paillier_min_bits(self.field.p, self.sender_capacity, self.statistical))
        return base

    def lhe_scheme(self):
        if self.backend == "transparent":
            return TransparentLhe(self.field)
        need = self.paillier_min_bits()
        bits = self.paillier_bits if self.paillier_bits is not None else max(DEFAULT_BITS, need)
        return PaillierLhe(self.field, bits=bits, min_bits=need)

    def fhe_scheme(self):
        return TransparentFhe(self.field, slots=self.slots)

    def check_elements(self, elements, capacity, who):
        out = []
        seen = set()
        p = self.field.p
        for x in elements:
            x = int(x)
            if not 0 <= x < p - 1:
                raise ConfigError(f"{who} element {x} outside [0, p-1)")
            if x in seen:
                raise ConfigError(f"duplicate {who} element {x}")
            seen.add(x)
            out.append(x)
        if capacity is not None and len(out) > capacity:
            raise CapacityExceeded(f"{who} set of size {len(out)} exceeds capacity {capacity}")
        return out
