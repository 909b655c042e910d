"""Prover and verifier halves of the four-message login exchange.

1. client -> server   username
2. server -> client   {mac, n, issued_at}           (insecure channel)
3. server -> client   {session_id, key}             (secure channel)
4. client -> server   cookie echo + proof           (insecure channel)
5. server -> client   verdict

The verifier keeps no per-session state.  Everything it needs at step 5
comes back in the echoed cookie, and the MAC over that cookie is keyed with
a server secret so the client cannot alter it.
"""

from __future__ import annotations

import enum
import struct
import unicodedata
from dataclasses import dataclass, field
from typing import Mapping, Optional, Tuple

from .crypto import (
    DIGEST_SIZE,
    KEY_SIZE,
    SESSION_ID_SIZE,
    Digest,
    Entropy,
    ServerSecret,
    SessionId,
    SessionKey,
    ct_equal,
    mac_compute,
    password_digest,
    random_key,
    random_session_id,
    session_proof,
    system_entropy,
)
from .errors import MalformedCookie, MalformedUsername
from .throttle import DelayPolicy

MAX_USERNAME_OCTETS = 64
DEFAULT_MAX_AGE = 300
MAX_COUNTER = 2**64 - 1

COOKIE_SIZE = 80
SECURE_PART_SIZE = SESSION_ID_SIZE + KEY_SIZE
INSECURE_PART_SIZE = 8 + 8 + DIGEST_SIZE
PROOF_RESPONSE_SIZE = COOKIE_SIZE + DIGEST_SIZE

_COOKIE = struct.Struct(">16sQQ32s16s")
_INSECURE = struct.Struct(">QQ32s")
_RESERVED = bytes(16)

UserStore = Mapping[str, Digest]


def _validate_username(username: str) -> str:
    if not isinstance(username, str):
        raise MalformedUsername("username must be a string")
    size = len(username.encode("utf-8"))
    if not 1 <= size <= MAX_USERNAME_OCTETS:
        raise MalformedUsername(f"username must be 1-{MAX_USERNAME_OCTETS} octets, got {size}")
    if any(unicodedata.category(ch) == "Cc" for ch in username):
        raise MalformedUsername("username contains control characters")
    return username


@dataclass(frozen=True)
class LoginRequest:
    username: str

    def __post_init__(self):
        _validate_username(self.username)


@dataclass(frozen=True)
class SecurePart:
    """Session id and key; must only travel over the secure channel."""

    session_id: SessionId
    key: SessionKey

    def encode(self) -> bytes:
        return self.session_id + self.key

    @classmethod
    def decode(cls, data: bytes) -> "SecurePart":
        if len(data) != SECURE_PART_SIZE:
            raise MalformedCookie(f"secure part must be {SECURE_PART_SIZE} octets, got {len(data)}")
        return cls(bytes(data[:SESSION_ID_SIZE]), bytes(data[SESSION_ID_SIZE:]))


@dataclass(frozen=True)
class InsecurePart:
    """MAC and its public inputs; safe to expose to an eavesdropper."""

    mac: Digest
    n: int
    issued_at: int

    def encode(self) -> bytes:
        return _INSECURE.pack(self.n, self.issued_at, self.mac)

    @classmethod
    def decode(cls, data: bytes) -> "InsecurePart":
        if len(data) != INSECURE_PART_SIZE:
            raise MalformedCookie(f"insecure part must be {INSECURE_PART_SIZE} octets, got {len(data)}")
        n, issued_at, mac = _INSECURE.unpack(data)
        return cls(mac=mac, n=n, issued_at=issued_at)


@dataclass(frozen=True)
class Cookie:
    """The state the verifier hands out and expects back unchanged."""

    session_id: SessionId
    n: int
    issued_at: int
    mac: Digest


@dataclass(frozen=True)
class Challenge:
    session_id: SessionId
    key: SessionKey
    n: int
    issued_at: int
    mac: Digest
    user_known: bool = field(default=True, repr=False)

    @property
    def secure_part(self) -> SecurePart:
        return SecurePart(self.session_id, self.key)

    @property
    def insecure_part(self) -> InsecurePart:
        return InsecurePart(self.mac, self.n, self.issued_at)

    @property
    def cookie(self) -> Cookie:
        return Cookie(self.session_id, self.n, self.issued_at, self.mac)


def cookie_encode(cookie) -> bytes:
    """Serialize a :class:`Cookie` (or anything with its fields) to 80 octets."""
    return _COOKIE.pack(cookie.session_id, cookie.n, cookie.issued_at, cookie.mac, _RESERVED)


def cookie_decode(data: bytes) -> Cookie:
    if len(data) != COOKIE_SIZE:
        raise MalformedCookie(f"cookie must be {COOKIE_SIZE} octets, got {len(data)}")
    session_id, n, issued_at, mac, _reserved = _COOKIE.unpack(data)
    return Cookie(session_id, n, issued_at, mac)


@dataclass(frozen=True)
class ProofResponse:
    session_id: SessionId
    n: int
    issued_at: int
    mac: Digest
    proof: Digest

    @property
    def cookie(self) -> Cookie:
        return Cookie(self.session_id, self.n, self.issued_at, self.mac)

    def encode(self) -> bytes:
        return cookie_encode(self) + self.proof

    @classmethod
    def decode(cls, data: bytes) -> "ProofResponse":
        if len(data) != PROOF_RESPONSE_SIZE:
            raise MalformedCookie(f"proof response must be {PROOF_RESPONSE_SIZE} octets, got {len(data)}")
        c = cookie_decode(data[:COOKIE_SIZE])
        return cls(c.session_id, c.n, c.issued_at, c.mac, bytes(data[COOKIE_SIZE:]))


class Outcome(enum.Enum):
    VALID = 1
    INVALID = 0


class Reason(enum.Enum):
    """Why the verifier decided as it did.  Harness-visible only.

    A stateless verifier cannot tell a wrong password from a tampered
    cookie: both surface as ``MAC_MISMATCH``.
    """

    ACCEPTED = "accepted"
    MAC_MISMATCH = "mac_mismatch"
    EXPIRED = "expired"
    CLOCK_SKEW = "clock_skew"


@dataclass(frozen=True)
class Verdict:
    outcome: Outcome
    next_n: int
    next_delay: float
    session_id: SessionId
    reason: Optional[Reason] = field(default=None, compare=False)

    @property
    def valid(self) -> bool:
        return self.outcome is Outcome.VALID


# -- verifier ----------------------------------------------------------------


def verifier_begin(
    req: LoginRequest,
    store: UserStore,
    n: int,
    secret: ServerSecret,
    now: float,
    entropy: Optional[Entropy] = None,
) -> Tuple[Challenge, SecurePart, InsecurePart]:
    """Issue a fresh challenge for *req* at attempt *n*.

    Unknown usernames receive a decoy whose MAC covers a random value, so
    the wire traffic does not reveal whether the account exists.
    """
    if not isinstance(req, LoginRequest):
        req = LoginRequest(req)
    entropy = entropy or system_entropy
    session_id = random_session_id(entropy)
    key = random_key(entropy)
    d = store.get(req.username)
    if d is not None:
        v = session_proof(d, key)
    else:
        v = entropy(DIGEST_SIZE)
    issued_at = int(now)
    mac = mac_compute(v, session_id, n, issued_at, secret)
    ch = Challenge(session_id, key, n, issued_at, mac, user_known=d is not None)
    return ch, ch.secure_part, ch.insecure_part


def verifier_check(
    resp: ProofResponse,
    secret: ServerSecret,
    policy: DelayPolicy,
    now: float,
    max_age: float = DEFAULT_MAX_AGE,
) -> Verdict:
    """Decide a proof using only the response, the secret and the clock."""
    n = resp.n
    if n >= 1:
        expected = mac_compute(resp.proof, resp.session_id, n, resp.issued_at, secret)
        mac_ok = ct_equal(expected, resp.mac)
    else:
        mac_ok = False
        n = 1

    if now < resp.issued_at:
        reason = Reason.CLOCK_SKEW
    elif now - resp.issued_at > max_age:
        reason = Reason.EXPIRED
    elif not mac_ok:
        reason = Reason.MAC_MISMATCH
    else:
        return Verdict(Outcome.VALID, n, 0.0, resp.session_id, Reason.ACCEPTED)

    next_n = min(n + 1, MAX_COUNTER)
    response_ts = max(now, resp.issued_at)
    delay = policy.delay(next_n, resp.issued_at, response_ts)
    return Verdict(Outcome.INVALID, next_n, delay, resp.session_id, reason)


class Verifier:
    """Convenience bundle of the verifier's configuration.

    Holds no session state, so an instance can be discarded and rebuilt
    between challenge and proof without changing any verdict.
    """

    def __init__(
        self,
        store: UserStore,
        secret: ServerSecret,
        policy: DelayPolicy = DelayPolicy(),
        max_age: float = DEFAULT_MAX_AGE,
        entropy: Optional[Entropy] = None,
    ):
        self.store = store
        self.secret = secret
        self.policy = policy
        self.max_age = max_age
        self.entropy = entropy

    def begin(self, username: str, n: int, now: float):
        return verifier_begin(LoginRequest(username), self.store, n, self.secret, now, self.entropy)

    def check(self, resp: ProofResponse, now: float) -> Verdict:
        return verifier_check(resp, self.secret, self.policy, now, self.max_age)


# -- prover ------------------------------------------------------------------


def prover_respond(secure: SecurePart, insecure: InsecurePart, password: str) -> ProofResponse:
    """Hash the password with the session key and echo the cookie verbatim.

    The prover never inspects the MAC.
    """
    proof = session_proof(password_digest(password), secure.key)
    return ProofResponse(
        session_id=secure.session_id,
        n=insecure.n,
        issued_at=insecure.issued_at,
        mac=insecure.mac,
        proof=proof,
    )
