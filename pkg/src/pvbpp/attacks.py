"""Adversaries run against the simulator, and the reports they produce."""

from __future__ import annotations

import csv
import enum
import json
from dataclasses import dataclass, field
from typing import IO, Iterable, List, Mapping, Optional, Sequence, Tuple

from .crypto import Entropy, ServerSecret, password_digest, random_key, session_proof
from .netsim import SimClock, Transcript, ChannelMessage, replay, run_session
from .protocol import DEFAULT_MAX_AGE, ProofResponse, UserStore, verifier_check
from .throttle import DelayPolicy
from .wire import MessageType

REPORT_HEADER = ("attacker_kind", "attempts", "successes", "sim_time", "rate")

#: Guesses an eavesdropper tries when no candidate list is supplied.
COMMON_PASSWORDS = ("123456", "password", "qwerty", "letmein", "admin", "welcome", "monkey", "dragon")


class AttackerKind(enum.Enum):
    DICTIONARY = "dictionary"
    REPLAY = "replay"
    FORGE = "forge"


class SessionMode(enum.Enum):
    """How a guessing attacker treats the attempt counter.

    ``CARRY`` stays in one session and waits out every delay.  ``FRESH``
    opens a new session per guess so the counter restarts at 1 and no
    delay is ever owed.
    """

    CARRY = "carry"
    FRESH = "fresh"


@dataclass(frozen=True)
class AttemptRecord:
    index: int
    valid: bool
    delay_charged: float

    def to_json(self) -> str:
        return json.dumps({"index": self.index, "verdict": "valid" if self.valid else "invalid",
                           "delay_charged": self.delay_charged})


@dataclass
class AttackReport:
    attacker_kind: AttackerKind
    attempts_made: int = 0
    successes: int = 0
    sim_time_elapsed: float = 0.0
    per_attempt_log: List[AttemptRecord] = field(default_factory=list)

    @property
    def attempts_per_unit_time(self) -> float:
        return self.attempts_made / max(self.sim_time_elapsed, 1)

    def row(self) -> Tuple:
        return (self.attacker_kind.value, self.attempts_made, self.successes,
                _num(self.sim_time_elapsed), _num(self.attempts_per_unit_time))

    def write_log(self, fh: IO[str]) -> None:
        for rec in self.per_attempt_log:
            fh.write(rec.to_json() + "\n")


def write_reports_csv(reports: Iterable[AttackReport], fh: IO[str]) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(REPORT_HEADER)
    for r in reports:
        writer.writerow(r.row())


def _num(x: float):
    return int(x) if float(x).is_integer() else x


def dictionary_attack(
    dictionary: Sequence[str],
    username: str,
    store: UserStore,
    policy: DelayPolicy,
    clock: SimClock,
    secret: ServerSecret,
    *,
    mode: SessionMode = SessionMode.CARRY,
    entropy: Optional[Entropy] = None,
    latency: float = 0.0,
    max_age: float = DEFAULT_MAX_AGE,
) -> AttackReport:
    """Submit each word in order until one is accepted.

    Elapsed time runs from the first guess to the last one submitted; the
    penalty owed after a final failed guess is not counted.
    """
    if not dictionary:
        raise ValueError("dictionary must be non-empty")
    mode = SessionMode(mode)
    report = AttackReport(AttackerKind.DICTIONARY)
    start = clock.now
    n = 1
    owed = 0.0
    for i, word in enumerate(dictionary):
        charged = 0.0
        if mode is SessionMode.CARRY and owed:
            clock.advance(owed)
            charged = owed
        verdict, _ = run_session(store, username, word, policy, clock, secret, n=n, entropy=entropy,
                                 max_age=max_age, latency=latency, enforce_delay=False)
        report.attempts_made += 1
        report.per_attempt_log.append(AttemptRecord(i, verdict.valid, charged))
        if verdict.valid:
            report.successes += 1
            break
        if mode is SessionMode.CARRY:
            n, owed = verdict.next_n, verdict.next_delay
    report.sim_time_elapsed = clock.now - start
    return report


def _observed_cookies(views: Iterable[Sequence[ChannelMessage]]) -> List[ProofResponse]:
    found = []
    for view in views:
        for m in view:
            if m.msg_type == MessageType.PROOF_RESPONSE:
                found.append(ProofResponse.decode(m.payload))
    return found


def forge_attack(
    views: Sequence[Sequence[ChannelMessage]],
    username: str,
    store: UserStore,
    policy: DelayPolicy,
    clock: SimClock,
    secret: ServerSecret,
    trials: int,
    *,
    candidates: Optional[Sequence[str]] = None,
    leaked_key: Optional[bytes] = None,
    entropy: Optional[Entropy] = None,
    max_age: float = DEFAULT_MAX_AGE,
) -> AttackReport:
    """Forge proofs against cookies lifted from the insecure channel.

    The attacker reuses each observed cookie, pairs a candidate password
    with a guessed session key, and submits the result.  It never asks for
    a new challenge, so no throttling delay applies and the clock does not
    move.  ``leaked_key`` is a control condition: an attacker that somehow
    holds a real session key.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    cookies = _observed_cookies(views)
    if not cookies:
        raise ValueError("no proof messages in the observed views")
    candidates = list(candidates or COMMON_PASSWORDS)
    report = AttackReport(AttackerKind.FORGE)
    start = clock.now
    for i in range(trials):
        seen = cookies[i % len(cookies)]
        pw = candidates[(i // len(cookies)) % len(candidates)]
        key = leaked_key if leaked_key is not None else random_key(entropy)
        forged = ProofResponse(seen.session_id, seen.n, seen.issued_at, seen.mac,
                               session_proof(password_digest(pw), key))
        verdict = verifier_check(forged, secret, policy, clock.now, max_age)
        report.attempts_made += 1
        report.per_attempt_log.append(AttemptRecord(i, verdict.valid, 0.0))
        if verdict.valid:
            report.successes += 1
            break
    report.sim_time_elapsed = clock.now - start
    return report


def replay_attack(
    accounts: Sequence[Tuple[str, str]],
    store: UserStore,
    policy: DelayPolicy,
    clock: SimClock,
    secret: ServerSecret,
    sessions: int = 100,
    *,
    entropy: Optional[Entropy] = None,
) -> Tuple[AttackReport, List[Transcript]]:
    """Record honest logins, then replay each proof in a new session."""
    if sessions < 1:
        raise ValueError("sessions must be >= 1")
    if not accounts:
        raise ValueError("need at least one account")
    report = AttackReport(AttackerKind.REPLAY)
    transcripts = []
    start = clock.now
    for i in range(sessions):
        user, pw = accounts[i % len(accounts)]
        verdict, t = run_session(store, user, pw, policy, clock, secret, entropy=entropy)
        transcripts.append(t)
        proof_msg = t.find(MessageType.PROOF_RESPONSE)[0]
        replayed = replay(t, proof_msg.seq, store, policy, clock, secret, entropy=entropy)
        report.attempts_made += 1
        report.per_attempt_log.append(AttemptRecord(i, replayed.valid, 0.0))
        if replayed.valid:
            report.successes += 1
    report.sim_time_elapsed = clock.now - start
    return report, transcripts


@dataclass(frozen=True)
class PolicyComparison:
    policy: DelayPolicy
    sim_time: float
    attempts_per_unit_time: float
    attempts: int
    successes: int


COMPARISON_HEADER = ("policy", "attempts", "successes", "sim_time_to_exhaust", "attempts_per_unit_time")


def compare_policies(
    dictionary: Sequence[str],
    username: str,
    store: UserStore,
    policies: Sequence[DelayPolicy],
    secret: ServerSecret,
    *,
    mode: SessionMode = SessionMode.CARRY,
    entropy: Optional[Entropy] = None,
) -> List[PolicyComparison]:
    """Run the same dictionary attack once per policy, each on a fresh clock."""
    if len(policies) < 2:
        raise ValueError("compare_policies needs at least two policies")
    rows = []
    for policy in policies:
        r = dictionary_attack(dictionary, username, store, policy, SimClock(), secret,
                              mode=mode, entropy=entropy)
        rows.append(PolicyComparison(policy, r.sim_time_elapsed, r.attempts_per_unit_time,
                                     r.attempts_made, r.successes))
    return rows


def write_comparison_csv(rows: Iterable[PolicyComparison], fh: IO[str]) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(COMPARISON_HEADER)
    for r in rows:
        writer.writerow((r.policy.label(), r.attempts, r.successes, _num(r.sim_time),
                         _num(r.attempts_per_unit_time)))


def build_store(accounts: Iterable[Tuple[str, str]]) -> Mapping[str, bytes]:
    return {user: password_digest(pw) for user, pw in accounts}
