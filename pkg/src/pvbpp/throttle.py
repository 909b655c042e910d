"""Delay policies for failed login attempts.

Indexing convention: the verdict for failed attempt ``n`` prescribes a wait
of ``delay(n + 1)`` before attempt ``n + 1``.  The first attempt is never
delayed, so with base 2 an attacker waits 4, 8, 16, ... time-units.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Mapping

from .errors import ClockSkew, InvalidAttempt


class PolicyKind(enum.Enum):
    EXPONENTIAL = "exp"
    TIMESTAMP = "ts"
    NONE = "none"


@dataclass(frozen=True)
class DelayPolicy:
    kind: PolicyKind = PolicyKind.EXPONENTIAL
    base: float = 2.0
    cap_exponent: int = 20
    alpha: float = 1.0
    min_delay: float = 0.0

    def __post_init__(self):
        if not self.base > 1:
            raise ValueError(f"base must be > 1, got {self.base}")
        if self.cap_exponent < 1:
            raise ValueError(f"cap_exponent must be >= 1, got {self.cap_exponent}")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")
        if self.min_delay < 0:
            raise ValueError(f"min_delay must be >= 0, got {self.min_delay}")

    @classmethod
    def unthrottled(cls) -> "DelayPolicy":
        return cls(kind=PolicyKind.NONE)

    def delay(self, n: int, challenge_ts: float = 0, response_ts: float = 0) -> float:
        """Wait imposed before attempt *n* given the previous exchange's timestamps."""
        if self.kind is PolicyKind.EXPONENTIAL:
            return delay_exponential(n, self)
        if self.kind is PolicyKind.TIMESTAMP:
            return delay_timestamp(challenge_ts, response_ts, n, self)
        if n < 1:
            raise InvalidAttempt(f"attempt counter must be >= 1, got {n}")
        return 0.0

    def label(self) -> str:
        if self.kind is PolicyKind.NONE:
            return "none"
        if self.kind is PolicyKind.EXPONENTIAL:
            return f"exp:{self.base:g}:cap{self.cap_exponent}"
        return f"ts:{self.base:g}:cap{self.cap_exponent}:alpha{self.alpha:g}"

    @classmethod
    def parse(cls, text: str) -> "DelayPolicy":
        """Parse the CLI form ``exp:2:cap20``, ``ts:2:alpha0.5:min1`` or ``none``.

        Fields after the kind are positional base then tagged options
        (``capN``, ``alphaX``, ``minX``).
        """
        parts = [p for p in text.strip().lower().split(":") if p]
        if not parts:
            raise ValueError("empty policy")
        try:
            kind = PolicyKind(parts[0])
        except ValueError:
            raise ValueError(f"unknown policy kind {parts[0]!r}") from None
        kwargs = {}
        for part in parts[1:]:
            try:
                if part.startswith("cap"):
                    kwargs["cap_exponent"] = int(part[3:])
                elif part.startswith("alpha"):
                    kwargs["alpha"] = float(part[5:])
                elif part.startswith("min"):
                    kwargs["min_delay"] = float(part[3:])
                else:
                    kwargs["base"] = float(part)
            except ValueError:
                raise ValueError(f"bad policy field {part!r} in {text!r}") from None
        return cls(kind=kind, **kwargs)

    @classmethod
    def from_config(cls, config: Mapping[str, str], default: "DelayPolicy | None" = None) -> "DelayPolicy":
        """Build a policy from ``policy.*`` keys, overriding *default*."""
        policy = default or cls()
        fields = {}
        if "policy.kind" in config:
            raw = config["policy.kind"].strip().lower()
            aliases = {"exponential": "exp", "timestamp": "ts"}
            fields["kind"] = PolicyKind(aliases.get(raw, raw))
        for key, conv in (("base", float), ("cap_exponent", int), ("alpha", float), ("min_delay", float)):
            if f"policy.{key}" in config:
                fields[key] = conv(config[f"policy.{key}"])
        return replace(policy, **fields)


def _capped_power(n: int, policy: DelayPolicy) -> float:
    if n < 1:
        raise InvalidAttempt(f"attempt counter must be >= 1, got {n}")
    return policy.base ** min(n, policy.cap_exponent)


def delay_exponential(n: int, policy: DelayPolicy = DelayPolicy()) -> float:
    """``base ** min(n, cap_exponent)``."""
    return _capped_power(n, policy)


def delay_timestamp(
    challenge_ts: float,
    response_ts: float,
    n: int,
    policy: DelayPolicy = DelayPolicy(kind=PolicyKind.TIMESTAMP),
) -> float:
    """Delay growing with the time the client took to answer the challenge.

    ``max(min_delay, alpha * interval * base ** min(n, cap))``: a slower
    client is held back longer, and the attempt counter still scales it.
    """
    if response_ts < challenge_ts:
        raise ClockSkew(f"response at {response_ts} precedes challenge at {challenge_ts}")
    interval = response_ts - challenge_ts
    return max(policy.min_delay, policy.alpha * interval * _capped_power(n, policy))


def cumulative_lockout(attempts: int, policy: DelayPolicy = DelayPolicy()) -> float:
    """Total exponential wait accrued before attempt number *attempts*.

    Attempt 1 is immediate; attempt ``a >= 2`` waits ``delay_exponential(a)``.
    """
    if attempts < 1:
        raise InvalidAttempt(f"attempt count must be >= 1, got {attempts}")
    return float(sum(delay_exponential(a, policy) for a in range(2, attempts + 1)))
