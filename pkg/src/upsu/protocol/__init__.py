"""Unbalanced private set union: three protocols over pluggable backends."""

from .messages import M1, M2, M3
from .params import ProtocolParams
from .parties import (
    Receiver,
    ReceiverContext,
    ReceiverKeys,
    Sender,
    SenderContext,
    SenderKeys,
    encode_p1,
    encode_p2,
    encode_p3,
    map_p1,
    map_p2,
    map_p3,
    reduce_p1,
    reduce_p2,
    reduce_p3,
    setup,
    union,
)
from .run import RunMetrics, run_local

__all__ = [
    "M1",
    "M2",
    "M3",
    "ProtocolParams",
    "Receiver",
    "ReceiverContext",
    "ReceiverKeys",
    "RunMetrics",
    "Sender",
    "SenderContext",
    "SenderKeys",
    "encode_p1",
    "encode_p2",
    "encode_p3",
    "map_p1",
    "map_p2",
    "map_p3",
    "reduce_p1",
    "reduce_p2",
    "reduce_p3",
    "run_local",
    "setup",
    "union",
]
