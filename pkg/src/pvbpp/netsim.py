"""Deterministic in-memory simulation of a login exchange.

The secure channel is modelled as a message class the adversary never sees;
delays are booked on a :class:`SimClock` instead of sleeping.
"""

from __future__ import annotations

import enum
import json
import random
from dataclasses import dataclass, field
from typing import IO, Iterable, List, Optional, Tuple

from .crypto import Entropy, ServerSecret
from .errors import NoSuchMessage, SessionIncomplete
from .protocol import (
    DEFAULT_MAX_AGE,
    InsecurePart,
    LoginRequest,
    ProofResponse,
    SecurePart,
    UserStore,
    Verdict,
    prover_respond,
    verifier_begin,
    verifier_check,
)
from .throttle import DelayPolicy
from .wire import MessageType, encode_verdict


class Channel(enum.Enum):
    SECURE = "secure"
    INSECURE = "insecure"


class Direction(enum.Enum):
    CLIENT_TO_SERVER = "c2s"
    SERVER_TO_CLIENT = "s2c"


class SimClock:
    """Simulated time that only moves when told to."""

    def __init__(self, now: float = 0.0):
        self._now = float(now)

    @property
    def now(self) -> float:
        return self._now

    def advance(self, delta: float) -> float:
        if delta < 0:
            raise ValueError("cannot move the clock backwards")
        self._now += delta
        return self._now

    def __repr__(self):
        return f"SimClock(now={self._now!r})"


def seeded_entropy(seed) -> Entropy:
    """Reproducible entropy source for simulations.  Not for real keys."""
    return random.Random(seed).randbytes


@dataclass(frozen=True)
class ChannelMessage:
    seq: int
    channel: Channel
    direction: Direction
    msg_type: MessageType
    payload: bytes
    sent_at: float

    def to_json(self) -> str:
        return json.dumps(
            {
                "seq": self.seq,
                "channel": self.channel.value,
                "direction": self.direction.value,
                "msg_type": int(self.msg_type),
                "payload": self.payload.hex(),
                "sent_at": self.sent_at,
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, line: str) -> "ChannelMessage":
        obj = json.loads(line)
        return cls(
            seq=obj["seq"],
            channel=Channel(obj["channel"]),
            direction=Direction(obj["direction"]),
            msg_type=MessageType(obj["msg_type"]),
            payload=bytes.fromhex(obj["payload"]),
            sent_at=obj["sent_at"],
        )


@dataclass
class Transcript:
    messages: List[ChannelMessage] = field(default_factory=list)
    outcome: List[Verdict] = field(default_factory=list)

    def record(self, channel: Channel, direction: Direction, msg_type: MessageType, payload: bytes, now: float):
        seq = self.messages[-1].seq + 1 if self.messages else 0
        msg = ChannelMessage(seq, channel, direction, msg_type, bytes(payload), now)
        self.messages.append(msg)
        return msg

    def find(self, msg_type: MessageType) -> List[ChannelMessage]:
        return [m for m in self.messages if m.msg_type == msg_type]

    @property
    def username(self) -> str:
        for m in self.messages:
            if m.msg_type == MessageType.LOGIN_REQUEST:
                return m.payload.decode("utf-8")
        raise NoSuchMessage("transcript has no login request")

    def write_jsonl(self, fh: IO[str]) -> None:
        for m in self.messages:
            fh.write(m.to_json() + "\n")

    @classmethod
    def read_jsonl(cls, lines: Iterable[str]) -> "Transcript":
        return cls([ChannelMessage.from_json(line) for line in lines if line.strip()])


def adversary_view(t: Transcript) -> List[ChannelMessage]:
    """Messages an eavesdropper on the insecure channel gets to see."""
    return [m for m in t.messages if m.channel is Channel.INSECURE]


def run_session(
    store: UserStore,
    username: str,
    password: str,
    policy: DelayPolicy,
    clock: SimClock,
    secret: ServerSecret,
    *,
    n: int = 1,
    entropy: Optional[Entropy] = None,
    max_age: float = DEFAULT_MAX_AGE,
    latency: float = 0.0,
    drop: Iterable[int] = (),
    enforce_delay: bool = True,
) -> Tuple[Verdict, Transcript]:
    """Run one login attempt end to end.

    ``drop`` lists exchange steps lost in transit: 1 username, 2 challenge,
    3 proof, 4 verdict.  ``latency`` is the client's time between receiving
    the challenge and sending the proof.  On failure the clock is advanced
    by the verdict's delay unless ``enforce_delay`` is false.
    """
    drop = set(drop)
    t = Transcript()
    c2s, s2c = Direction.CLIENT_TO_SERVER, Direction.SERVER_TO_CLIENT

    req = LoginRequest(username)
    t.record(Channel.INSECURE, c2s, MessageType.LOGIN_REQUEST, username.encode("utf-8"), clock.now)
    if 1 in drop:
        raise SessionIncomplete("login request lost")

    _, secure, insecure = verifier_begin(req, store, n, secret, clock.now, entropy)
    t.record(Channel.INSECURE, s2c, MessageType.CHALLENGE_INSECURE, insecure.encode(), clock.now)
    t.record(Channel.SECURE, s2c, MessageType.CHALLENGE_SECURE, secure.encode(), clock.now)
    if 2 in drop:
        raise SessionIncomplete("challenge lost")

    # The client only ever sees the decoded wire bytes.
    resp = prover_respond(SecurePart.decode(secure.encode()), InsecurePart.decode(insecure.encode()), password)
    if latency:
        clock.advance(latency)
    t.record(Channel.INSECURE, c2s, MessageType.PROOF_RESPONSE, resp.encode(), clock.now)
    if 3 in drop:
        raise SessionIncomplete("proof lost")

    verdict = verifier_check(ProofResponse.decode(resp.encode()), secret, policy, clock.now, max_age)
    t.record(Channel.INSECURE, s2c, MessageType.VERDICT, encode_verdict(verdict), clock.now)
    t.outcome.append(verdict)
    if 4 in drop:
        raise SessionIncomplete("verdict lost")

    if not verdict.valid and enforce_delay:
        clock.advance(verdict.next_delay)
    return verdict, t


def replay(
    t: Transcript,
    message_seq: int,
    store: UserStore,
    policy: DelayPolicy,
    clock: SimClock,
    secret: ServerSecret,
    *,
    username: Optional[str] = None,
    same_session: bool = False,
    entropy: Optional[Entropy] = None,
    max_age: float = DEFAULT_MAX_AGE,
) -> Verdict:
    """Resubmit a recorded proof.

    By default a new session is opened (for *username*, or the transcript's
    own user) and the recorded proof digest is sent against the fresh
    cookie.  With ``same_session`` the recorded message is resent verbatim.
    """
    recorded = None
    for m in t.messages:
        if m.seq == message_seq:
            recorded = m
            break
    if recorded is None:
        raise NoSuchMessage(f"no message with seq {message_seq}")
    if recorded.msg_type != MessageType.PROOF_RESPONSE or recorded.direction is not Direction.CLIENT_TO_SERVER:
        raise NoSuchMessage(f"message {message_seq} is not a client proof")

    old = ProofResponse.decode(recorded.payload)
    if same_session:
        return verifier_check(old, secret, policy, clock.now, max_age)

    target = username if username is not None else t.username
    _, secure, insecure = verifier_begin(LoginRequest(target), store, 1, secret, clock.now, entropy)
    spliced = ProofResponse(
        session_id=secure.session_id,
        n=insecure.n,
        issued_at=insecure.issued_at,
        mac=insecure.mac,
        proof=old.proof,
    )
    return verifier_check(spliced, secret, policy, clock.now, max_age)
