"""TCP server and client speaking the framed login protocol.

Throttling is per connection: after a failed proof the server refuses to
issue another challenge on that connection until a deadline passes, and
answers early requests with a THROTTLED error carrying the remaining wait.
Nothing sleeps on the listener, so other connections are unaffected.
"""

from __future__ import annotations

import asyncio
import logging
import threading
import time
from dataclasses import dataclass, replace
from typing import Callable, Optional, Tuple

from .crypto import ServerSecret
from .errors import FrameError, MalformedCookie, MalformedUsername, ProtocolViolation, Throttled
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
from .wire import (
    ErrorCode,
    ErrorMessage,
    MessageType,
    decode_verdict,
    encode_frame,
    encode_verdict,
    read_frame,
)

log = logging.getLogger(__name__)

DEFAULT_MAX_REAL_DELAY = 60.0


@dataclass
class _ConnState:
    n: int = 1
    deadline: float = 0.0  # time.monotonic() value


class Server:
    def __init__(
        self,
        store: UserStore,
        secret: ServerSecret,
        policy: DelayPolicy = DelayPolicy(),
        *,
        max_age: float = DEFAULT_MAX_AGE,
        max_real_delay: float = DEFAULT_MAX_REAL_DELAY,
        wallclock: Callable[[], float] = time.time,
    ):
        self.store = store
        self.secret = secret
        self.policy = policy
        self.max_age = max_age
        self.max_real_delay = max_real_delay
        self.wallclock = wallclock
        self._server: Optional[asyncio.base_events.Server] = None

    async def start(self, host: str = "127.0.0.1", port: int = 0) -> Tuple[str, int]:
        self._server = await asyncio.start_server(self._handle, host, port)
        addr = self._server.sockets[0].getsockname()
        log.info("listening on %s:%s", addr[0], addr[1])
        return addr[0], addr[1]

    async def serve_forever(self) -> None:
        assert self._server is not None, "call start() first"
        async with self._server:
            await self._server.serve_forever()

    async def close(self) -> None:
        if self._server is not None:
            self._server.close()
            await self._server.wait_closed()

    async def _handle(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter) -> None:
        conn = _ConnState()
        try:
            while True:
                try:
                    msg_type, payload = await read_frame(reader)
                except FrameError as exc:
                    await _send_error(writer, ErrorCode.BAD_FRAME, str(exc))
                    break
                except (asyncio.IncompleteReadError, ConnectionError):
                    break
                if msg_type == MessageType.LOGIN_REQUEST:
                    if not await self._on_login(conn, payload, writer):
                        break
                elif msg_type == MessageType.PROOF_RESPONSE:
                    if not await self._on_proof(conn, payload, writer):
                        break
                else:
                    await _send_error(writer, ErrorCode.BAD_MESSAGE, f"unexpected {msg_type.name}")
                    break
        except Exception:  # pragma: no cover - defensive
            log.exception("connection handler failed")
        finally:
            writer.close()
            try:
                await writer.wait_closed()
            except ConnectionError:
                pass

    async def _on_login(self, conn: _ConnState, payload: bytes, writer) -> bool:
        remaining = conn.deadline - time.monotonic()
        if remaining > 0:
            await _send_error(writer, ErrorCode.THROTTLED, "throttled", remaining)
            return True
        try:
            req = LoginRequest(payload.decode("utf-8"))
        except (UnicodeDecodeError, MalformedUsername) as exc:
            await _send_error(writer, ErrorCode.BAD_MESSAGE, str(exc))
            return False
        _, secure, insecure = verifier_begin(req, self.store, conn.n, self.secret, self.wallclock())
        writer.write(encode_frame(MessageType.CHALLENGE_INSECURE, insecure.encode()))
        # Deployments must carry this frame over TLS.
        writer.write(encode_frame(MessageType.CHALLENGE_SECURE, secure.encode()))
        await writer.drain()
        return True

    async def _on_proof(self, conn: _ConnState, payload: bytes, writer) -> bool:
        try:
            resp = ProofResponse.decode(payload)
        except MalformedCookie as exc:
            await _send_error(writer, ErrorCode.BAD_MESSAGE, str(exc))
            return False
        now = self.wallclock()
        verdict = verifier_check(resp, self.secret, self.policy, now, self.max_age)
        if not verdict.valid:
            # The echoed n is unauthenticated on failure; never let it roll back.
            conn.n = max(conn.n + 1, verdict.next_n)
            delay = self.policy.delay(conn.n, resp.issued_at, max(now, resp.issued_at))
            delay = min(delay, self.max_real_delay)
            conn.deadline = time.monotonic() + delay
            verdict = replace(verdict, next_n=conn.n, next_delay=delay)
        writer.write(encode_frame(MessageType.VERDICT, encode_verdict(verdict)))
        await writer.drain()
        return True


async def _send_error(writer, code: ErrorCode, message: str, remaining: float = 0.0) -> None:
    writer.write(encode_frame(MessageType.ERROR, ErrorMessage(code, remaining, message[:1000]).encode()))
    try:
        await writer.drain()
    except ConnectionError:
        pass


class BackgroundServer:
    """Run a :class:`Server` on its own event loop thread."""

    def __init__(self, server: Server, host: str = "127.0.0.1", port: int = 0):
        self.server = server
        self._host, self._port = host, port
        self._loop = asyncio.new_event_loop()
        self._thread = threading.Thread(target=self._loop.run_forever, daemon=True)
        self.address: Optional[Tuple[str, int]] = None

    def start(self) -> "BackgroundServer":
        self._thread.start()
        fut = asyncio.run_coroutine_threadsafe(self.server.start(self._host, self._port), self._loop)
        self.address = fut.result(timeout=5)
        return self

    def stop(self) -> None:
        asyncio.run_coroutine_threadsafe(self.server.close(), self._loop).result(timeout=5)
        self._loop.call_soon_threadsafe(self._loop.stop)
        self._thread.join(timeout=5)
        self._loop.close()

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()


# -- client ------------------------------------------------------------------


class Client:
    """One client connection.  The prover side of the handshake."""

    def __init__(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter):
        self.reader = reader
        self.writer = writer

    @classmethod
    async def connect(cls, host: str, port: int, timeout: float = 5.0) -> "Client":
        reader, writer = await asyncio.wait_for(asyncio.open_connection(host, port), timeout)
        return cls(reader, writer)

    async def close(self) -> None:
        self.writer.close()
        try:
            await self.writer.wait_closed()
        except ConnectionError:
            pass

    async def _send(self, msg_type: MessageType, payload: bytes) -> None:
        self.writer.write(encode_frame(msg_type, payload))
        await self.writer.drain()

    async def _expect(self, want: MessageType) -> bytes:
        try:
            msg_type, payload = await read_frame(self.reader)
        except asyncio.IncompleteReadError:
            raise ProtocolViolation("server closed the connection") from None
        if msg_type == MessageType.ERROR:
            err = ErrorMessage.decode(payload)
            if err.code == ErrorCode.THROTTLED:
                raise Throttled(err.remaining_wait)
            raise ProtocolViolation(f"server error {err.code.name}: {err.message}")
        if msg_type != want:
            raise ProtocolViolation(f"expected {want.name}, got {msg_type.name}")
        return payload

    async def request_challenge(self, username: str, *, wait: bool = False) -> Tuple[SecurePart, InsecurePart]:
        """Send the username; with ``wait`` sleep through THROTTLED replies."""
        while True:
            await self._send(MessageType.LOGIN_REQUEST, username.encode("utf-8"))
            try:
                insecure = InsecurePart.decode(await self._expect(MessageType.CHALLENGE_INSECURE))
            except Throttled as exc:
                if not wait:
                    raise
                await asyncio.sleep(exc.remaining)
                continue
            secure = SecurePart.decode(await self._expect(MessageType.CHALLENGE_SECURE))
            return secure, insecure

    async def send_proof(self, resp: ProofResponse) -> Verdict:
        await self._send(MessageType.PROOF_RESPONSE, resp.encode())
        return decode_verdict(await self._expect(MessageType.VERDICT))

    async def attempt(self, username: str, password: str, *, wait: bool = False) -> Verdict:
        secure, insecure = await self.request_challenge(username, wait=wait)
        return await self.send_proof(prover_respond(secure, insecure, password))


async def login(host: str, port: int, username: str, password: str) -> Verdict:
    client = await Client.connect(host, port)
    try:
        return await client.attempt(username, password)
    finally:
        await client.close()
