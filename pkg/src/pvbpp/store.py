"""Flat-file account store and key=value config loading."""

from __future__ import annotations

import configparser
import os
import tempfile
from pathlib import Path
from typing import Dict

from .crypto import DIGEST_SIZE, Digest, password_digest
from .errors import DuplicateUser, MalformedUsername, StoreCorrupt
from .protocol import LoginRequest


def load_store(path) -> Dict[str, Digest]:
    """Parse ``username:hex(D)`` lines.  A missing file is an empty store."""
    path = Path(path)
    if not path.exists():
        return {}
    store: Dict[str, Digest] = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        user, sep, hexd = line.rpartition(":")
        if not sep or not user or len(hexd) != 2 * DIGEST_SIZE:
            raise StoreCorrupt(f"{path}:{lineno}: expected username:<64 hex>")
        try:
            d = bytes.fromhex(hexd)
        except ValueError:
            raise StoreCorrupt(f"{path}:{lineno}: digest is not hex") from None
        if user in store:
            raise StoreCorrupt(f"{path}:{lineno}: duplicate user {user!r}")
        store[user] = d
    return store


def register(path, username: str, password: str) -> Dict[str, Digest]:
    """Add an account and rewrite the store atomically.  Returns the new store."""
    LoginRequest(username)
    if ":" in username:
        raise MalformedUsername("username may not contain ':'")
    d = password_digest(password)
    path = Path(path)
    store = load_store(path)
    if username in store:
        raise DuplicateUser(username)
    store[username] = d
    _write_store(path, store)
    return store


def _write_store(path: Path, store: Dict[str, Digest]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            for user, d in store.items():
                fh.write(f"{user}:{d.hex()}\n")
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def load_config(path) -> Dict[str, str]:
    """Read an optional ``key=value`` file (``#`` comments allowed)."""
    parser = configparser.ConfigParser(interpolation=None, delimiters=("=",))
    parser.optionxform = str
    parser.read_string("[pvbpp]\n" + Path(path).read_text(encoding="utf-8"))
    return dict(parser["pvbpp"])
