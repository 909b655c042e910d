"""Length-prefixed frame codec and message payload layouts.

Frame: ``length[4, big-endian] | msg_type[1] | payload[length]`` with
``length <= 4096``.  Payload layouts::

    0x01 LoginRequest       UTF-8 username
    0x02 ChallengeInsecure  n[8] | issued_at[8] | mac[32]
    0x03 ChallengeSecure    session_id[16] | key[16]
    0x04 ProofResponse      cookie[80] | proof[32]
    0x05 Verdict            outcome[1] | next_n[8] | next_delay[8, IEEE double] | session_id[16]
    0x06 Error              code[1] | remaining_wait[8, IEEE double] | UTF-8 message
"""

from __future__ import annotations

import asyncio
import enum
import struct
from dataclasses import dataclass
from typing import Tuple

from .crypto import SESSION_ID_SIZE
from .errors import FrameError
from .protocol import Outcome, Verdict

MAX_PAYLOAD = 4096
HEADER = struct.Struct(">IB")
_VERDICT = struct.Struct(">BQd16s")
_ERROR = struct.Struct(">Bd")


class MessageType(enum.IntEnum):
    LOGIN_REQUEST = 0x01
    CHALLENGE_INSECURE = 0x02
    CHALLENGE_SECURE = 0x03
    PROOF_RESPONSE = 0x04
    VERDICT = 0x05
    ERROR = 0x06


class ErrorCode(enum.IntEnum):
    THROTTLED = 1
    BAD_FRAME = 2
    BAD_MESSAGE = 3
    INTERNAL = 4


def encode_frame(msg_type: int, payload: bytes) -> bytes:
    if len(payload) > MAX_PAYLOAD:
        raise FrameError(f"payload of {len(payload)} octets exceeds {MAX_PAYLOAD}")
    return HEADER.pack(len(payload), int(msg_type)) + payload


def decode_frame(data: bytes) -> Tuple[MessageType, bytes]:
    """Decode exactly one frame occupying all of *data*."""
    if len(data) < HEADER.size:
        raise FrameError("truncated frame header")
    length, raw_type = HEADER.unpack_from(data)
    if length > MAX_PAYLOAD:
        raise FrameError(f"declared length {length} exceeds {MAX_PAYLOAD}")
    if len(data) - HEADER.size != length:
        raise FrameError(f"declared length {length} but {len(data) - HEADER.size} octets follow")
    return _msg_type(raw_type), bytes(data[HEADER.size:])


async def read_frame(reader: asyncio.StreamReader) -> Tuple[MessageType, bytes]:
    """Read one frame; raises :class:`FrameError` on an oversized header.

    ``asyncio.IncompleteReadError`` propagates when the peer closes.
    """
    header = await reader.readexactly(HEADER.size)
    length, raw_type = HEADER.unpack(header)
    if length > MAX_PAYLOAD:
        raise FrameError(f"declared length {length} exceeds {MAX_PAYLOAD}")
    payload = await reader.readexactly(length)
    return _msg_type(raw_type), payload


def _msg_type(raw: int) -> MessageType:
    try:
        return MessageType(raw)
    except ValueError:
        raise FrameError(f"unknown message type 0x{raw:02x}") from None


def encode_verdict(v: Verdict) -> bytes:
    return _VERDICT.pack(1 if v.valid else 0, v.next_n, float(v.next_delay), v.session_id)


def decode_verdict(data: bytes) -> Verdict:
    if len(data) != _VERDICT.size:
        raise FrameError(f"verdict payload must be {_VERDICT.size} octets, got {len(data)}")
    outcome, next_n, next_delay, session_id = _VERDICT.unpack(data)
    if outcome not in (0, 1):
        raise FrameError(f"bad verdict outcome {outcome}")
    return Verdict(Outcome.VALID if outcome else Outcome.INVALID, next_n, next_delay, session_id)


@dataclass(frozen=True)
class ErrorMessage:
    code: ErrorCode
    remaining_wait: float = 0.0
    message: str = ""

    def encode(self) -> bytes:
        return _ERROR.pack(int(self.code), float(self.remaining_wait)) + self.message.encode("utf-8")

    @classmethod
    def decode(cls, data: bytes) -> "ErrorMessage":
        if len(data) < _ERROR.size:
            raise FrameError("truncated error payload")
        code, wait = _ERROR.unpack_from(data)
        try:
            code = ErrorCode(code)
        except ValueError:
            raise FrameError(f"unknown error code {code}") from None
        return cls(code, wait, data[_ERROR.size:].decode("utf-8", errors="replace"))


VERDICT_SIZE = _VERDICT.size
assert VERDICT_SIZE == 1 + 8 + 8 + SESSION_ID_SIZE
