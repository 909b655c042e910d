"""Exception hierarchy shared by the protocol core, simulator and service."""


class PVBPPError(Exception):
    """Base class for every error raised by this package."""


class EmptyPassword(PVBPPError, ValueError):
    pass


class InvalidAttempt(PVBPPError, ValueError):
    """Attempt counter below 1."""


class EntropyUnavailable(PVBPPError, RuntimeError):
    pass


class MalformedUsername(PVBPPError, ValueError):
    pass


class MalformedCookie(PVBPPError, ValueError):
    pass


class CookieForged(PVBPPError):
    """Diagnostic label for a MAC mismatch; never sent on the wire."""


class ClockSkew(PVBPPError, ValueError):
    """Response timestamp precedes the challenge timestamp."""


class SessionIncomplete(PVBPPError):
    """A simulated channel dropped a message before the verdict."""


class NoSuchMessage(PVBPPError, LookupError):
    pass


class DuplicateUser(PVBPPError, ValueError):
    pass


class StoreCorrupt(PVBPPError, ValueError):
    pass


class SecretMissing(PVBPPError, FileNotFoundError):
    pass


class FrameError(PVBPPError, ValueError):
    """Frame header or payload violates the wire format."""


class ProtocolViolation(PVBPPError):
    """Peer sent a message that is not valid at this point of the handshake."""


class Throttled(PVBPPError):
    """Server is withholding the next challenge for this connection."""

    def __init__(self, remaining: float):
        super().__init__(f"next prompt in {remaining:.3g}s")
        self.remaining = remaining
