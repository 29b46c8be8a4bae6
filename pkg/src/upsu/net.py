"""Length-prefixed frames over TCP binding the protocol roles to a socket.

A frame is a 4-byte big-endian body length followed by the body: round
tag, protocol id, format version, payload.  One session is exactly five
frames: the two key announcements and the three protocol rounds.
"""

import logging
import os
import socket
import struct
import time
from dataclasses import dataclass, field

from .errors import FrameError, ProtocolAbort, UpsuError
from .protocol import messages as msgs
from .protocol.parties import Receiver, Sender

log = logging.getLogger(__name__)

VERSION = 1
DEFAULT_TIMEOUT = 60.0
TIMEOUT_ENV = "UPSU_TIMEOUT"
MAX_FRAME = 1 << 31
_LEN = struct.Struct(">I")
_HEAD = struct.Struct(">BBB")

KNOWN_TAGS = frozenset(msgs.ROUND_NAMES)


@dataclass(frozen=True)
class Frame:
    tag: int
    protocol: int
    payload: bytes
    version: int = VERSION


def encode_frame(tag, protocol, payload, version=VERSION):
    body = _HEAD.pack(tag, protocol, version) + payload
    return _LEN.pack(len(body)) + body


def decode_frame(data):
    """Parse one complete frame (length prefix included)."""
    if len(data) < _LEN.size:
        raise FrameError("truncated frame header")
    (n,) = _LEN.unpack_from(data)
    if len(data) != _LEN.size + n:
        raise FrameError(f"frame length {n} does not match {len(data) - _LEN.size} body bytes")
    return _parse_body(data[_LEN.size :])


def _parse_body(body):
    if len(body) < _HEAD.size:
        raise FrameError("frame body shorter than its header")
    tag, protocol, version = _HEAD.unpack_from(body)
    if version != VERSION:
        raise FrameError(f"unsupported frame version {version}")
    if tag not in KNOWN_TAGS:
        raise FrameError(f"unknown round tag {tag:#04x}")
    return Frame(tag, protocol, bytes(body[_HEAD.size :]), version)


def _recv_exact(sock, n):
    buf = bytearray()
    while len(buf) < n:
        chunk = sock.recv(min(n - len(buf), 1 << 20))
        if not chunk:
            raise FrameError(f"connection closed after {len(buf)} of {n} bytes")
        buf += chunk
    return bytes(buf)


def read_frame(sock):
    (n,) = _LEN.unpack(_recv_exact(sock, _LEN.size))
    if n > MAX_FRAME:
        raise FrameError(f"frame of {n} bytes exceeds the limit")
    return _parse_body(_recv_exact(sock, n))


def send_frame(sock, tag, protocol, payload):
    data = encode_frame(tag, protocol, payload)
    sock.sendall(data)
    return len(data)


def timeout_from_env(default=DEFAULT_TIMEOUT):
    raw = os.environ.get(TIMEOUT_ENV)
    if not raw:
        return default
    try:
        value = float(raw)
    except ValueError:
        raise ValueError(f"{TIMEOUT_ENV} must be a number of seconds, got {raw!r}") from None
    return value if value > 0 else None


def parse_endpoint(text):
    host, sep, port = str(text).rpartition(":")
    if not sep or not port.isdigit():
        raise ValueError(f"endpoint must look like HOST:PORT, got {text!r}")
    return (host.strip("[]") or "127.0.0.1", int(port))


@dataclass
class SessionResult:
    """Outcome of one session.  ``union`` is set only on the receiver after success."""

    status: str
    union: set = None
    error: str = None
    frames_sent: int = 0
    frames_received: int = 0
    bytes_sent: int = 0
    sent: dict = field(default_factory=dict)

    @property
    def ok(self):
        return self.status == "ok"


class _Channel:
    def __init__(self, sock, protocol, result):
        self.sock = sock
        self.protocol = protocol
        self.result = result

    def send(self, tag, payload):
        self.result.bytes_sent += send_frame(self.sock, tag, self.protocol, payload)
        self.result.frames_sent += 1

    def expect(self, tag):
        frame = read_frame(self.sock)
        self.result.frames_received += 1
        if frame.protocol != self.protocol:
            raise ProtocolAbort(f"peer runs protocol {frame.protocol}, expected {self.protocol}")
        if frame.tag != tag:
            raise ProtocolAbort(f"expected round {msgs.ROUND_NAMES[tag]}, got {msgs.ROUND_NAMES[frame.tag]}")
        return frame.payload


def _receiver_session(conn, X, params, rng, lhe_keys):
    result = SessionResult("aborted")
    ch = _Channel(conn, params.protocol, result)
    role = Receiver(params, X, rng, lhe_keys=lhe_keys)
    try:
        ch.send(msgs.KX_R, role.start())
        role.on_key(ch.expect(msgs.KX_S))
        ch.send(msgs.M2_TAG, role.on_m1(ch.expect(msgs.M1_TAG)))
        union = role.on_m3(ch.expect(msgs.M3_TAG))
    except (UpsuError, OSError, struct.error) as exc:
        result.error = f"{type(exc).__name__}: {exc}"
        log.warning("receiver session aborted: %s", result.error)
        return result, role
    result.status, result.union, result.sent = "ok", union, dict(role.sent)
    return result, role


def serve_receiver(
    endpoint, X, params, rng=None, lhe_keys=None, timeout=None, persist=False, max_sessions=None, on_listen=None,
    on_session=None,
):
    """Listen on ``endpoint`` and run the receiver role for incoming senders.

    Without ``persist`` a single session is served and its
    :class:`SessionResult` returned.  With ``persist`` sessions are served
    until ``max_sessions`` (forever if None); every result is passed to
    ``on_session`` and the list of results is returned.  ``on_listen`` gets
    the bound address, which matters when port 0 is requested.
    """
    from .rng import Csprng

    rng = rng or Csprng()
    params.check_elements(X, params.receiver_capacity, "receiver")
    timeout = timeout_from_env() if timeout is None else timeout
    host, port = parse_endpoint(endpoint) if isinstance(endpoint, str) else endpoint
    if lhe_keys is None and persist:
        lhe_keys = params.lhe_scheme().keygen(rng.spawn("lhe-keys"))
    results = []
    with socket.create_server((host, port)) as srv:
        srv.settimeout(timeout)
        if on_listen is not None:
            on_listen(srv.getsockname()[:2])
        count = 0
        while True:
            try:
                conn, peer = srv.accept()
            except OSError as exc:
                res = SessionResult("aborted", error=f"{type(exc).__name__}: {exc}")
                results.append(res)
                if on_session is not None:
                    on_session(res)
                break
            with conn:
                conn.settimeout(timeout)
                log.info("session %d from %s", count, peer)
                res, _ = _receiver_session(conn, X, params, rng.spawn(("session", count)), lhe_keys)
            results.append(res)
            if on_session is not None:
                on_session(res)
            count += 1
            if not persist or (max_sessions is not None and count >= max_sessions):
                break
    return results if persist else results[0]


def _connect(host, port, timeout):
    deadline = None if timeout is None else time.monotonic() + timeout
    delay = 0.05
    while True:
        try:
            return socket.create_connection((host, port), timeout=timeout)
        except (ConnectionRefusedError, socket.timeout):
            if deadline is not None and time.monotonic() + delay > deadline:
                raise
            time.sleep(delay)
            delay = min(delay * 2, 1.0)


def run_sender(endpoint, Y, params, rng=None, fhe_keys=None, timeout=None):
    """Connect to a receiver and run the sender role; no set is output on this side."""
    from .rng import Csprng

    rng = rng or Csprng()
    timeout = timeout_from_env() if timeout is None else timeout
    host, port = parse_endpoint(endpoint) if isinstance(endpoint, str) else endpoint
    result = SessionResult("aborted")
    role = Sender(params, Y, rng, fhe_keys=fhe_keys)
    try:
        with _connect(host, port, timeout) as sock:
            sock.settimeout(timeout)
            ch = _Channel(sock, params.protocol, result)
            ch.send(msgs.KX_S, role.on_key(ch.expect(msgs.KX_R)))
            ch.send(msgs.M1_TAG, role.encode())
            ch.send(msgs.M3_TAG, role.on_m2(ch.expect(msgs.M2_TAG)))
    except (UpsuError, OSError, struct.error) as exc:
        result.error = f"{type(exc).__name__}: {exc}"
        log.warning("sender session aborted: %s", result.error)
        return result
    result.status, result.sent = "ok", dict(role.sent)
    return result
