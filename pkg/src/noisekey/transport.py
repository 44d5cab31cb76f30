"""Message framing and delivery for the two-party protocol.

Every message travels in one frame::

    magic 0x4E 0x4B | version 0x01 | msg_type | payload_len (u32 BE) | payload

All integers are big-endian and all bit blocks are serialized as a u64 bit
length followed by their MSB-first packed bytes.  The same codec backs the
in-process pump, the TCP demo and the ``.nkt`` transcript files, and a
read-only tap interface lets an observer consume every frame in order
without being able to inject or reorder.
"""

from __future__ import annotations

import socket
import struct
from dataclasses import dataclass
from enum import IntEnum
from typing import Callable, Protocol

from .bitstream import BitBlock

MAGIC = b"\x4e\x4b"
VERSION = 0x01
MAX_PAYLOAD = 2**24
DEFAULT_PORT = 47923
TRANSCRIPT_SUFFIX = ".nkt"


class MsgType(IntEnum):
    HELLO = 0x01
    RANDOM_BLOCK = 0x02
    MASKED_PAIRS = 0x03
    ACCEPT_MASK = 0x04
    ROUND_DONE = 0x05
    PA_PARAMS = 0x06
    KEY_CHECK = 0x07
    KEY_OK = 0x08
    ABORT = 0x09


class AbortReason(IntEnum):
    CONFIG_MISMATCH = 0x01
    TAMPER_ALARM = 0x02
    CONFIRM_FAILED = 0x03
    PROTOCOL_ERROR = 0x04
    EMPTY_KEY = 0x05


# -- decode errors, one class per failure mode -------------------------------


class FrameError(Exception):
    """Base class for all structured frame decode failures."""


class BadMagic(FrameError):
    pass


class BadVersion(FrameError):
    pass


class UnknownType(FrameError):
    pass


class OversizeFrame(FrameError):
    pass


class TruncatedFrame(FrameError):
    pass


class MalformedPayload(FrameError):
    pass


class TrailingData(FrameError):
    pass


class ChannelClosed(Exception):
    """Peer hung up before the conversation finished."""


# -- messages -----------------------------------------------------------------


@dataclass(frozen=True)
class Hello:
    config_digest: bytes  # 32 bytes


@dataclass(frozen=True)
class RandomBlock:
    block: BitBlock


@dataclass(frozen=True)
class MaskedPairs:
    round_no: int
    n_rep: int
    payload: BitBlock


@dataclass(frozen=True)
class AcceptMask:
    round_no: int
    mask: BitBlock


@dataclass(frozen=True)
class RoundDone:
    round_no: int


@dataclass(frozen=True)
class PaSeed:
    input_len: int
    output_len: int
    seed: BitBlock


@dataclass(frozen=True)
class KeyCheck:
    digest: BitBlock


@dataclass(frozen=True)
class KeyOk:
    pass


@dataclass(frozen=True)
class Abort:
    reason: AbortReason


Message = (
    Hello
    | RandomBlock
    | MaskedPairs
    | AcceptMask
    | RoundDone
    | PaSeed
    | KeyCheck
    | KeyOk
    | Abort
)

_TYPE_OF = {
    Hello: MsgType.HELLO,
    RandomBlock: MsgType.RANDOM_BLOCK,
    MaskedPairs: MsgType.MASKED_PAIRS,
    AcceptMask: MsgType.ACCEPT_MASK,
    RoundDone: MsgType.ROUND_DONE,
    PaSeed: MsgType.PA_PARAMS,
    KeyCheck: MsgType.KEY_CHECK,
    KeyOk: MsgType.KEY_OK,
    Abort: MsgType.ABORT,
}


def _pack_block(block: BitBlock) -> bytes:
    return struct.pack(">Q", block.length) + block.data


class _Reader:
    """Sequential payload reader that turns short reads into typed errors."""

    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise MalformedPayload("payload ended early")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def u16(self) -> int:
        return struct.unpack(">H", self.take(2))[0]

    def u64(self) -> int:
        return struct.unpack(">Q", self.take(8))[0]

    def block(self) -> BitBlock:
        length = self.u64()
        nbytes = (length + 7) // 8
        try:
            return BitBlock(length, self.take(nbytes))
        except ValueError as exc:
            raise MalformedPayload(str(exc)) from exc

    def done(self) -> None:
        if self.pos != len(self.data):
            raise MalformedPayload(
                f"{len(self.data) - self.pos} unexpected trailing payload bytes"
            )


def _encode_payload(msg: Message) -> bytes:
    if isinstance(msg, Hello):
        if len(msg.config_digest) != 32:
            raise ValueError("config digest must be 32 bytes")
        return msg.config_digest
    if isinstance(msg, RandomBlock):
        return _pack_block(msg.block)
    if isinstance(msg, MaskedPairs):
        return struct.pack(">HH", msg.round_no, msg.n_rep) + _pack_block(msg.payload)
    if isinstance(msg, AcceptMask):
        return struct.pack(">H", msg.round_no) + _pack_block(msg.mask)
    if isinstance(msg, RoundDone):
        return struct.pack(">H", msg.round_no)
    if isinstance(msg, PaSeed):
        return struct.pack(">QQ", msg.input_len, msg.output_len) + _pack_block(msg.seed)
    if isinstance(msg, KeyCheck):
        return _pack_block(msg.digest)
    if isinstance(msg, KeyOk):
        return b""
    if isinstance(msg, Abort):
        return struct.pack(">H", int(msg.reason))
    raise TypeError(f"not a protocol message: {msg!r}")


def _decode_payload(msg_type: MsgType, payload: bytes) -> Message:
    r = _Reader(payload)
    if msg_type is MsgType.HELLO:
        msg: Message = Hello(r.take(32))
    elif msg_type is MsgType.RANDOM_BLOCK:
        msg = RandomBlock(r.block())
    elif msg_type is MsgType.MASKED_PAIRS:
        round_no, n_rep = r.u16(), r.u16()
        if n_rep < 1:
            raise MalformedPayload("repetition factor must be positive")
        msg = MaskedPairs(round_no, n_rep, r.block())
    elif msg_type is MsgType.ACCEPT_MASK:
        msg = AcceptMask(r.u16(), r.block())
    elif msg_type is MsgType.ROUND_DONE:
        msg = RoundDone(r.u16())
    elif msg_type is MsgType.PA_PARAMS:
        msg = PaSeed(r.u64(), r.u64(), r.block())
    elif msg_type is MsgType.KEY_CHECK:
        msg = KeyCheck(r.block())
    elif msg_type is MsgType.KEY_OK:
        msg = KeyOk()
    elif msg_type is MsgType.ABORT:
        code = r.u16()
        try:
            msg = Abort(AbortReason(code))
        except ValueError as exc:
            raise MalformedPayload(f"unknown abort reason {code}") from exc
    else:  # pragma: no cover - enum is exhaustive
        raise UnknownType(f"unhandled message type {msg_type}")
    r.done()
    return msg


def encode_frame(msg: Message) -> bytes:
    """Serialize one message to its wire frame."""
    payload = _encode_payload(msg)
    if len(payload) > MAX_PAYLOAD:
        raise ValueError(f"payload of {len(payload)} bytes exceeds the frame limit")
    return MAGIC + bytes([VERSION, _TYPE_OF[type(msg)]]) + struct.pack(">I", len(payload)) + payload


def decode_frame(data: bytes) -> Message:
    """Parse exactly one frame; anything else raises a typed FrameError."""
    msg, used = _decode_one(data)
    if used != len(data):
        raise TrailingData(f"{len(data) - used} bytes after the frame")
    return msg


def _decode_one(data: bytes) -> tuple[Message, int]:
    if len(data) < 8:
        raise TruncatedFrame("incomplete frame header")
    if data[:2] != MAGIC:
        raise BadMagic(f"bad magic {data[:2].hex()}")
    if data[2] != VERSION:
        raise BadVersion(f"unsupported version {data[2]}")
    try:
        msg_type = MsgType(data[3])
    except ValueError as exc:
        raise UnknownType(f"unknown message type 0x{data[3]:02x}") from exc
    (payload_len,) = struct.unpack(">I", data[4:8])
    if payload_len > MAX_PAYLOAD:
        raise OversizeFrame(f"declared payload of {payload_len} bytes")
    if len(data) < 8 + payload_len:
        raise TruncatedFrame(f"payload needs {payload_len} bytes, have {len(data) - 8}")
    return _decode_payload(msg_type, data[8 : 8 + payload_len]), 8 + payload_len


class FrameDecoder:
    """Incremental decoder; frames survive any split or merge of the stream."""

    def __init__(self) -> None:
        self._buf = bytearray()

    def feed(self, data: bytes) -> list[Message]:
        self._buf.extend(data)
        out: list[Message] = []
        while True:
            try:
                msg, used = _decode_one(bytes(self._buf))
            except TruncatedFrame:
                break
            del self._buf[:used]
            out.append(msg)
        return out

    @property
    def pending_bytes(self) -> int:
        return len(self._buf)


# -- taps and transcripts -----------------------------------------------------


class Tap(Protocol):
    """Read-only observer of the frame stream, attached before the session."""

    def on_wire(self, msg: Message) -> None: ...


class TranscriptWriter:
    """Appends every observed frame verbatim to a ``.nkt`` log file."""

    def __init__(self, path):
        self._fh = open(path, "wb")

    def on_wire(self, msg: Message) -> None:
        self._fh.write(encode_frame(msg))
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()


def read_transcript(path) -> list[Message]:
    """Decode a ``.nkt`` file back into its frame sequence."""
    with open(path, "rb") as fh:
        data = fh.read()
    decoder = FrameDecoder()
    messages = decoder.feed(data)
    if decoder.pending_bytes:
        raise TruncatedFrame(f"{decoder.pending_bytes} leftover bytes in transcript")
    return messages


# -- byte-stream channel for the two-process demo -----------------------------


class SocketChannel:
    """Blocking frame channel over a connected socket."""

    def __init__(self, sock: socket.socket):
        self._sock = sock
        self._decoder = FrameDecoder()
        self._inbox: list[Message] = []

    def send(self, msg: Message) -> None:
        self._sock.sendall(encode_frame(msg))

    def recv(self) -> Message:
        while not self._inbox:
            data = self._sock.recv(65536)
            if not data:
                raise ChannelClosed("peer closed the connection")
            self._inbox.extend(self._decoder.feed(data))
        return self._inbox.pop(0)

    def close(self) -> None:
        try:
            self._sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self._sock.close()


def make_tamper_transform(t: BitBlock) -> Callable[[Message], Message]:
    """In-transit adversary: rewrite RANDOM_BLOCK payloads, pass all else.

    Models the active attacker sitting on the private channel; the public
    frames (masks, parameters, digests) are authenticated and only readable.
    """

    def transform(msg: Message) -> Message:
        if isinstance(msg, RandomBlock):
            return RandomBlock(msg.block ^ t)
        return msg

    return transform
