"""Homomorphic-encryption backends.

``TransparentLhe`` / ``TransparentFhe`` share the plaintext space F_p; the
Paillier LHE works over Z_N and is reconciled with F_p through :mod:`.psi`.
A lattice FHE would plug in by providing the same evaluator surface as
:class:`TransparentFheEvaluator`.
"""

from .base import FheCiphertext, KeyPair, LheCiphertext, OpCounter, PublicKey, SecretKey
from .paillier import PaillierLhe
from .psi import NotPresent, psi_map, psi_unmap, recover_y
from .transparent import TransparentFhe, TransparentLhe

__all__ = [
    "FheCiphertext",
    "KeyPair",
    "LheCiphertext",
    "NotPresent",
    "OpCounter",
    "PaillierLhe",
    "PublicKey",
    "SecretKey",
    "TransparentFhe",
    "TransparentLhe",
    "psi_map",
    "psi_unmap",
    "recover_y",
]
