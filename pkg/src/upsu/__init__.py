"""Unbalanced private set union with homomorphic polynomial evaluation.

The receiver holds a large set X, the sender a small set Y; the receiver
learns X | Y and nothing about X & Y, the sender learns nothing.
"""

from .errors import UpsuError
from .field import DEFAULT_PRIME, PrimeField
from .poly import Polynomial
from .protocol import ProtocolParams, RunMetrics, run_local

__version__ = "0.1.0"

__all__ = ["DEFAULT_PRIME", "PrimeField", "Polynomial", "ProtocolParams", "RunMetrics", "UpsuError", "run_local"]
