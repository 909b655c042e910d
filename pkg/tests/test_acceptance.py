"""Exit criteria.  Each test carries a ``criterion`` marker; the terminal
summary prints one PASS/FAIL line per criterion."""

import ast
import asyncio
import inspect
import random
import time

import pytest

import pvbpp.crypto as crypto
import pvbpp.protocol as protocol
import pvbpp.server as server_mod
from pvbpp.attacks import build_store, dictionary_attack, forge_attack
from pvbpp.crypto import password_digest, session_proof
from pvbpp.netsim import SimClock, adversary_view, replay, run_session, seeded_entropy
from pvbpp.protocol import SecurePart, Verifier, prover_respond
from pvbpp.server import BackgroundServer, Client, Server, login
from pvbpp.throttle import DelayPolicy, PolicyKind, cumulative_lockout, delay_exponential, delay_timestamp
from pvbpp.wire import MessageType

EXP2 = DelayPolicy()


class Budget:
    def __init__(self, seconds):
        self.seconds = seconds

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0
        if exc[0] is None:
            assert self.elapsed < self.seconds, f"took {self.elapsed:.3f}s, budget {self.seconds}s"


@pytest.mark.criterion(1, "delay schedule 2, 4, base^n for n=1..20")
def test_c01_delay_schedule():
    with Budget(1e-3):
        first, second = delay_exponential(1, EXP2), delay_exponential(2, EXP2)
        schedule = [delay_exponential(n, EXP2) for n in range(1, 21)]
    assert (first, second) == (2, 4)
    assert schedule == [2**n for n in range(1, 21)]


@pytest.mark.criterion(2, "cumulative lockout equals per-attempt summation, D=1..30")
def test_c02_cumulative_lockout():
    uncapped = DelayPolicy(cap_exponent=64)
    oracle = []
    for d in range(1, 31):
        total = 0
        for a in range(2, d + 1):
            total += 2**a
        oracle.append(total)
    with Budget(0.010):
        got = [cumulative_lockout(d, uncapped) for d in range(1, 31)]
    assert got == oracle


@pytest.mark.criterion(3, "completeness: 100 random accounts valid on first attempt")
def test_c03_completeness(secret):
    rng = random.Random(2024)
    accounts = [(f"user{i:03d}", "".join(rng.choice("abcdefghijklmnopqrstuvwxyz0123456789!@#")
                                        for _ in range(rng.randint(6, 24)))) for i in range(100)]
    store = build_store(accounts)
    with Budget(1.0):
        verdicts = [run_session(store, u, p, EXP2, SimClock(), secret)[0] for u, p in accounts]
    assert all(v.valid and v.next_n == 1 for v in verdicts)


@pytest.mark.criterion(4, "cross-session replay rejected in 100/100 sessions")
def test_c04_replay(secret):
    rng = random.Random(4)
    accounts = [(f"u{i}", f"pw-{rng.getrandbits(32)}") for i in range(100)]
    store = build_store(accounts)
    clock = SimClock()
    with Budget(2.0):
        rejected = 0
        for user, pw in accounts:
            v, t = run_session(store, user, pw, EXP2, clock, secret)
            assert v.valid
            seq = t.find(MessageType.PROOF_RESPONSE)[0].seq
            rejected += not replay(t, seq, store, EXP2, clock, secret).valid
    assert rejected == 100


@pytest.mark.criterion(5, "forgery from insecure-channel data: 0/10^4, control 1")
def test_c05_forgery(secret):
    store = build_store([("victim", "hunter2")])
    clock = SimClock()
    with Budget(5.0):
        _, t = run_session(store, "victim", "hunter2", EXP2, clock, secret)
        view = adversary_view(t)
        blind = forge_attack([view], "victim", store, EXP2, clock, secret, 10_000,
                             candidates=["hunter2"], entropy=seeded_entropy(55))
        key = SecurePart.decode(t.find(MessageType.CHALLENGE_SECURE)[0].payload).key
        control = forge_attack([view], "victim", store, EXP2, clock, secret, 10_000,
                               candidates=["hunter2"], leaked_key=key)
    assert (blind.attempts_made, blind.successes) == (10_000, 0)
    assert control.successes == 1


@pytest.mark.criterion(6, "statelessness: rebuilt verifier (50 trials) and wire restart")
def test_c06_stateless_simulated(secret):
    store = build_store([("alice", "hunter2"), ("bob", "pw")])
    rng = random.Random(6)
    with Budget(1.0):
        for i in range(50):
            user = rng.choice(["alice", "bob", "eve"])
            pw = rng.choice(["hunter2", "pw", "bad"])
            v = Verifier(store, secret)
            _, sec, ins = v.begin(user, rng.randint(1, 5), 1000)
            resp = prover_respond(sec, ins, pw)
            same = v.check(resp, 1001)
            del v
            rebuilt = Verifier(dict(store), bytes(secret)).check(resp, 1001)
            assert same == rebuilt
            assert same.next_delay == rebuilt.next_delay


@pytest.mark.criterion(6, "statelessness: rebuilt verifier (50 trials) and wire restart")
def test_c06_stateless_wire(secret):
    store = build_store([("alice", "hunter2")])
    with Budget(10.0):
        first = BackgroundServer(Server(store, secret)).start()
        address = first.address

        async def challenge():
            c = await Client.connect(*address)
            try:
                return await c.request_challenge("alice")
            finally:
                await c.close()

        sec, ins = asyncio.run(challenge())
        first.stop()
        second = BackgroundServer(Server(dict(store), bytes(secret)), *address).start()
        try:
            async def prove():
                c = await Client.connect(*address)
                try:
                    return await c.send_proof(prover_respond(sec, ins, "hunter2"))
                finally:
                    await c.close()

            verdict = asyncio.run(prove())
        finally:
            second.stop()
    assert verdict.valid


@pytest.mark.criterion(7, "dictionary of 10, target absent: 2044 vs 0, rate ratio >= 500x")
def test_c07_throttling_economics(secret):
    store = build_store([("victim", "not-in-the-list")])
    words = [f"word{i}" for i in range(10)]
    with Budget(1.0):
        throttled = dictionary_attack(words, "victim", store, EXP2, SimClock(), secret)
        baseline = dictionary_attack(words, "victim", store, DelayPolicy.unthrottled(), SimClock(), secret)
    assert throttled.sim_time_elapsed == cumulative_lockout(10, DelayPolicy(cap_exponent=64)) == 2044
    assert baseline.sim_time_elapsed == 0
    assert baseline.attempts_per_unit_time / throttled.attempts_per_unit_time >= 500


def _calls(fn):
    tree = ast.parse(inspect.getsource(fn).lstrip() if not inspect.isclass(fn) else inspect.getsource(fn))
    names = set()
    for node in ast.walk(tree):
        if isinstance(node, ast.Call):
            f = node.func
            names.add(f.attr if isinstance(f, ast.Attribute) else getattr(f, "id", ""))
    return tree, names


@pytest.mark.criterion(8, "Table 1 structure: no prover comparison or decryption; client-side keyed proof")
def test_c08_table1_structure(secret, monkeypatch):
    with Budget(1.0):
        # Prover side has no comparison at all.
        tree, calls = _calls(prover_respond)
        assert not any(isinstance(n, ast.Compare) for n in ast.walk(tree))
        assert not calls & {"ct_equal", "compare_digest", "mac_compute"}
        _, client_calls = _calls(server_mod.Client)
        assert not client_calls & {"ct_equal", "compare_digest", "mac_compute", "verifier_check"}

        # No inverse-hash operation exists anywhere in the crypto surface.
        for mod in (crypto, protocol):
            public = [n.lower() for n in dir(mod) if not n.startswith("_")]
            assert not [n for n in public if any(w in n for w in ("decrypt", "invert", "inverse", "unhash"))]

        # The only comparison in a full session happens inside the verifier.
        callers = []
        real = protocol.ct_equal

        def spy(a, b):
            callers.append(inspect.stack()[1].function)
            return real(a, b)

        monkeypatch.setattr(protocol, "ct_equal", spy)
        store = build_store([("alice", "hunter2")])
        v, t = run_session(store, "alice", "hunter2", EXP2, SimClock(), secret)
        assert v.valid and callers == ["verifier_check"]

        # The proof leaves the client and is H(D || key) with the key from the secure channel.
        secure = t.find(MessageType.CHALLENGE_SECURE)[0]
        proof_msg = t.find(MessageType.PROOF_RESPONSE)[0]
        assert proof_msg.direction.value == "c2s" and proof_msg.seq > secure.seq
        key = SecurePart.decode(secure.payload).key
        assert proof_msg.payload[80:] == session_proof(password_digest("hunter2"), key)
        assert all(key not in m.payload for m in adversary_view(t))


@pytest.mark.criterion(9, "timestamp variant monotone in interval and n (10^3 pairs)")
def test_c09_timestamp_monotone():
    rng = random.Random(9)
    p = DelayPolicy(kind=PolicyKind.TIMESTAMP)
    with Budget(1.0):
        for _ in range(1000):
            i1, i2 = sorted((rng.uniform(0, 1000), rng.uniform(0, 1000)))
            n1, n2 = sorted((rng.randint(1, 40), rng.randint(1, 40)))
            assert delay_timestamp(0, i1, n1, p) <= delay_timestamp(0, i2, n1, p)
            assert delay_timestamp(0, i1, n1, p) <= delay_timestamp(0, i1, n2, p)


@pytest.mark.criterion(10, "non-blocking service: honest login < 1 s during 60 s penalty")
def test_c10_non_blocking(secret):
    store = build_store([("alice", "hunter2")])
    with BackgroundServer(Server(store, secret, DelayPolicy(base=8), max_real_delay=60)) as bg:
        async def run():
            attacker = await Client.connect(*bg.address)
            penalty = await attacker.attempt("alice", "guess")
            t0 = time.perf_counter()
            honest = await login(*bg.address, "alice", "hunter2")
            elapsed = time.perf_counter() - t0
            await attacker.close()
            return penalty, honest, elapsed

        penalty, honest, elapsed = asyncio.run(run())
    assert penalty.next_delay == 60
    assert honest.valid
    assert elapsed < 1.0
