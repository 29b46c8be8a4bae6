"""Bridge between the field F_q and the Paillier plaintext ring Z_N.

For a prime field the map Psi is the canonical lift to [0, q).  After
decrypting ``e = Psi(a) - Psi(b) mod N`` together with ``eta = Psi(y) e`` and
``nu = Psi(y) (N - e)``, the element ``y`` is recovered over the integers
from whichever of the two branches did not wrap around N.
"""

from ..errors import Inconsistent, OutOfRange


class _NotPresent:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "NotPresent"

    def __bool__(self):
        return False


NotPresent = _NotPresent()


def psi_map(x, q):
    x = int(x)
    if not 0 <= x < q:
        raise OutOfRange(f"{x} is not a field element modulo {q}")
    return x


def psi_unmap(v, q):
    v = int(v)
    if not 0 <= v < q:
        raise OutOfRange(f"{v} is outside [0, {q})")
    return v


def recover_y(e, eta, nu, n, q):
    """Return ``y`` or :data:`NotPresent`; raises :class:`Inconsistent` otherwise."""
    e, eta, nu = int(e), int(eta), int(nu)
    if e == 0:
        return NotPresent
    if 1 <= e < q:
        y, rem = divmod(eta, e)
    elif n - q <= e < n:
        y, rem = divmod(nu, n - e)
    else:
        raise Inconsistent("difference outside both recovery windows")
    if rem or y >= q:
        raise Inconsistent("non-exact recovery")
    return psi_unmap(y, q)
