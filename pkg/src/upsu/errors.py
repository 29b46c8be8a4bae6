"""Exception hierarchy.  Everything raised on purpose derives from :class:`UpsuError`."""


class UpsuError(Exception):
    pass


class EmptySet(UpsuError):
    """An operation needs at least one element."""


class NotInvertible(UpsuError):
    """Constant term is zero, so no power-series inverse exists."""


class DivisorNotMonic(UpsuError):
    pass


class DegreeOrder(UpsuError):
    """Operand degrees violate the precondition of a division-type routine."""


class ParamsTooSmall(UpsuError):
    """A modulus or key is too small for the requested operation."""


class KeyMismatch(UpsuError):
    pass


class FloodedCiphertext(UpsuError):
    """A flooded ciphertext may only be decrypted or added."""


class OutOfRange(UpsuError):
    pass


class Inconsistent(UpsuError):
    """Decrypted values do not fit any branch of the recovery rule."""


class CapacityExceeded(UpsuError):
    pass


class CuckooFailure(UpsuError):
    pass


class ConfigError(UpsuError):
    pass


class ProtocolAbort(UpsuError):
    """The peer sent something unexpected; the session is abandoned."""


class FrameError(ProtocolAbort):
    pass
