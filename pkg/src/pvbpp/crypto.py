"""Hash primitives, MAC composition and randomness.

All multi-field preimages use fixed-width fields so that no two distinct
field tuples can serialize to the same byte string:

    digest 32 | session id 16 | key 16 | counters and timestamps 8 (big-endian)

There is deliberately no inverse of any of these operations.
"""

from __future__ import annotations

import hashlib
import os
import secrets
import struct
from pathlib import Path
from typing import Callable, Optional

from .errors import EmptyPassword, EntropyUnavailable, InvalidAttempt, SecretMissing

DIGEST_SIZE = 32
KEY_SIZE = 16
SESSION_ID_SIZE = 16
SECRET_SIZE = 32

# Type aliases; the values are plain ``bytes`` of the stated length.
Digest = bytes
SessionKey = bytes
SessionId = bytes
ServerSecret = bytes

#: Source of random octets, ``entropy(n) -> n bytes``.  Simulations inject a
#: seeded source so transcripts are reproducible.
Entropy = Callable[[int], bytes]

_U64 = struct.Struct(">Q")


def digest(data: bytes) -> Digest:
    """SHA-256 of *data*."""
    return hashlib.sha256(data).digest()


def password_digest(password: str) -> Digest:
    """Digest of the UTF-8 password; the only password-derived value stored."""
    if not password:
        raise EmptyPassword("password must be non-empty")
    return digest(password.encode("utf-8"))


def session_proof(d: Digest, key: SessionKey) -> Digest:
    """Per-session proof ``H(D || key)`` computed by the prover.

    The verifier folds the same value into the MAC at challenge time, so it
    never needs the plaintext password.
    """
    _check_len(d, DIGEST_SIZE, "digest")
    _check_len(key, KEY_SIZE, "session key")
    return digest(d + key)


def mac_compute(
    v: Digest,
    session_id: SessionId,
    n: int,
    ts: int,
    secret: ServerSecret,
) -> Digest:
    """Keyed MAC over proof value, session id, attempt counter and issue time."""
    if n < 1:
        raise InvalidAttempt(f"attempt counter must be >= 1, got {n}")
    _check_len(v, DIGEST_SIZE, "proof value")
    _check_len(session_id, SESSION_ID_SIZE, "session id")
    _check_len(secret, SECRET_SIZE, "server secret")
    return digest(secret + v + session_id + _U64.pack(n) + _U64.pack(ts))


def ct_equal(a, b) -> bool:
    """Compare two digests touching every octet regardless of mismatches.

    Length is not secret; unequal lengths return False immediately.
    """
    if len(a) != len(b):
        return False
    acc = 0
    for i in range(len(a)):
        acc |= a[i] ^ b[i]
    return acc == 0


def system_entropy(size: int) -> bytes:
    try:
        return secrets.token_bytes(size)
    except (NotImplementedError, OSError) as exc:  # pragma: no cover - platform dependent
        raise EntropyUnavailable(str(exc)) from exc


def random_key(entropy: Optional[Entropy] = None) -> SessionKey:
    return _draw(entropy, KEY_SIZE)


def random_session_id(entropy: Optional[Entropy] = None) -> SessionId:
    return _draw(entropy, SESSION_ID_SIZE)


def _draw(entropy: Optional[Entropy], size: int) -> bytes:
    out = (entropy or system_entropy)(size)
    if len(out) != size:
        raise EntropyUnavailable(f"entropy source returned {len(out)} of {size} octets")
    return out


def _check_len(value: bytes, size: int, what: str) -> None:
    if len(value) != size:
        raise ValueError(f"{what} must be {size} octets, got {len(value)}")


# -- server secret file ------------------------------------------------------


def generate_secret(entropy: Optional[Entropy] = None) -> ServerSecret:
    return _draw(entropy, SECRET_SIZE)


def load_secret(path) -> ServerSecret:
    """Read a secret file holding one line of 64 hex characters."""
    path = Path(path)
    try:
        text = path.read_text(encoding="ascii").strip()
    except FileNotFoundError as exc:
        raise SecretMissing(f"secret file not found: {path}") from exc
    try:
        secret = bytes.fromhex(text)
    except ValueError as exc:
        raise SecretMissing(f"secret file {path} is not hex") from exc
    if len(secret) != SECRET_SIZE:
        raise SecretMissing(f"secret file {path} must hold {2 * SECRET_SIZE} hex characters")
    return secret


def write_secret(path, secret: ServerSecret) -> None:
    _check_len(secret, SECRET_SIZE, "server secret")
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    fd = os.open(tmp, os.O_WRONLY | os.O_CREAT | os.O_TRUNC, 0o600)
    with os.fdopen(fd, "w", encoding="ascii") as fh:
        fh.write(secret.hex() + "\n")
    os.replace(tmp, path)
