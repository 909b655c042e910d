"""Prover/verifier password login with exponential throttling of failed attempts."""

from .crypto import (
    ct_equal,
    digest,
    mac_compute,
    password_digest,
    random_key,
    random_session_id,
    session_proof,
)
from .netsim import SimClock, Transcript, adversary_view, replay, run_session
from .protocol import (
    Challenge,
    LoginRequest,
    Outcome,
    ProofResponse,
    Verdict,
    Verifier,
    cookie_decode,
    cookie_encode,
    prover_respond,
    verifier_begin,
    verifier_check,
)
from .throttle import DelayPolicy, PolicyKind, cumulative_lockout, delay_exponential, delay_timestamp

__version__ = "0.1.0"
