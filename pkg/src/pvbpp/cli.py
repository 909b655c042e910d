"""Command line entry point: ``pvbpp serve|register|login|attack|report|keygen``.

Exit codes: 0 valid, 1 invalid, 2 transport error, 3 usage error.
"""

from __future__ import annotations

import argparse
import asyncio
import getpass
import logging
import secrets
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from . import attacks, report
from .crypto import generate_secret, load_secret, write_secret
from .errors import PVBPPError, ProtocolViolation
from .netsim import SimClock, adversary_view, run_session, seeded_entropy
from .protocol import DEFAULT_MAX_AGE, SecurePart
from .server import DEFAULT_MAX_REAL_DELAY, Server, login
from .store import load_config, load_store, register
from .throttle import DelayPolicy
from .wire import MessageType

EXIT_VALID, EXIT_INVALID, EXIT_TRANSPORT, EXIT_USAGE = 0, 1, 2, 3

log = logging.getLogger("pvbpp")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _hostport(text: str):
    host, sep, port = text.rpartition(":")
    if not sep or not port.isdigit():
        raise argparse.ArgumentTypeError(f"expected HOST:PORT, got {text!r}")
    return host or "127.0.0.1", int(port)


def _policy(text: str) -> DelayPolicy:
    try:
        return DelayPolicy.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _read_password(args, prompt="Password: ") -> str:
    if getattr(args, "password_stdin", False):
        return sys.stdin.readline().rstrip("\n")
    return getpass.getpass(prompt)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="pvbpp", description="Prover/verifier password login with exponential throttling.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("keygen", help="create a server secret file")
    s.add_argument("--secret", required=True, type=Path)
    s.add_argument("--force", action="store_true", help="overwrite an existing secret")

    s = sub.add_parser("serve", help="run the login server")
    s.add_argument("--bind", type=_hostport, default=("127.0.0.1", 7878))
    s.add_argument("--store", required=True, type=Path)
    s.add_argument("--secret", required=True, type=Path)
    s.add_argument("--policy", type=_policy, default=None)
    s.add_argument("--config", type=Path, help="key=value file with policy.* and session.max_age")
    s.add_argument("--max-real-delay", type=float, default=DEFAULT_MAX_REAL_DELAY)

    s = sub.add_parser("register", help="add an account to the store file")
    s.add_argument("--store", required=True, type=Path)
    s.add_argument("--password-stdin", action="store_true")
    s.add_argument("user")

    s = sub.add_parser("login", help="log in to a running server")
    s.add_argument("--server", required=True, type=_hostport)
    s.add_argument("--password-stdin", action="store_true")
    s.add_argument("user")

    s = sub.add_parser("attack", help="run a simulated attack and print a CSV report")
    asub = s.add_subparsers(dest="attack", required=True, parser_class=_Parser)
    for name in ("dictionary", "replay", "forge"):
        a = asub.add_parser(name)
        a.add_argument("--policy", type=_policy, default=DelayPolicy())
        a.add_argument("--seed", type=int, default=None, help="seed the simulation entropy")
        a.add_argument("--log", type=Path, help="write the per-attempt log as JSON lines")
        if name == "dictionary":
            a.add_argument("--words", type=int, default=10, help="size of a generated dictionary")
            a.add_argument("--wordlist", type=Path, help="read guesses from a file instead")
            a.add_argument("--target-index", type=int, default=0,
                           help="1-based position of the true password in the dictionary (0 = absent)")
            a.add_argument("--mode", choices=[m.value for m in attacks.SessionMode], default="carry")
        elif name == "replay":
            a.add_argument("--sessions", type=int, default=100)
        else:
            a.add_argument("--trials", type=int, default=10_000)
            a.add_argument("--control", action="store_true", help="give the attacker the real session key")

    s = sub.add_parser("report", help="write policy comparison CSVs and figures")
    s.add_argument("--out", required=True, type=Path)
    s.add_argument("--words", type=int, default=10)
    s.add_argument("--policy", type=_policy, action="append", dest="policies")
    return p


def cmd_keygen(args) -> int:
    if args.secret.exists() and not args.force:
        raise UsageError(f"{args.secret} exists; pass --force to replace it")
    write_secret(args.secret, generate_secret())
    print(f"wrote {args.secret}")
    return 0


def cmd_serve(args) -> int:
    store = load_store(args.store)
    secret = load_secret(args.secret)
    config = load_config(args.config) if args.config else {}
    policy = DelayPolicy.from_config(config, args.policy or DelayPolicy())
    max_age = float(config.get("session.max_age", DEFAULT_MAX_AGE))
    server = Server(store, secret, policy, max_age=max_age, max_real_delay=args.max_real_delay)

    async def main():
        host, port = await server.start(*args.bind)
        print(f"listening on {host}:{port} policy={policy.label()} users={len(store)}", flush=True)
        await server.serve_forever()

    try:
        asyncio.run(main())
    except KeyboardInterrupt:
        pass
    except OSError as exc:
        print(f"bind failed: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT
    return 0


def cmd_register(args) -> int:
    password = _read_password(args)
    register(args.store, args.user, password)
    print(f"registered {args.user}")
    return 0


def cmd_login(args) -> int:
    password = _read_password(args)
    host, port = args.server
    try:
        verdict = asyncio.run(login(host, port, args.user, password))
    except (OSError, asyncio.TimeoutError) as exc:
        print(f"connection failed: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT
    except ProtocolViolation as exc:
        print(f"protocol error: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT
    if verdict.valid:
        print("valid")
        return EXIT_VALID
    print(f"invalid, next prompt in {verdict.next_delay:g}s")
    return EXIT_INVALID


def _dictionary(args) -> List[str]:
    if args.wordlist:
        words = [w.strip() for w in args.wordlist.read_text(encoding="utf-8").splitlines() if w.strip()]
    else:
        if args.words < 1:
            raise UsageError("--words must be >= 1")
        words = [f"word{i:05d}" for i in range(args.words)]
    return words


def cmd_attack(args) -> int:
    entropy = seeded_entropy(args.seed) if args.seed is not None else None
    secret = (entropy or secrets.token_bytes)(32)
    clock = SimClock()
    if args.attack == "dictionary":
        words = _dictionary(args)
        if not 0 <= args.target_index <= len(words):
            raise UsageError("--target-index out of range")
        password = "absent-" + (entropy or secrets.token_bytes)(8).hex()
        if args.target_index:
            password = words[args.target_index - 1]
        store = attacks.build_store([("victim", password)])
        rep = attacks.dictionary_attack(words, "victim", store, args.policy, clock, secret,
                                        mode=args.mode, entropy=entropy)
    elif args.attack == "replay":
        if args.sessions < 1:
            raise UsageError("--sessions must be >= 1")
        accounts = [(f"user{i:03d}", f"pw-{i:03d}-{i * 7919 % 1000:03d}") for i in range(10)]
        store = attacks.build_store(accounts)
        rep, _ = attacks.replay_attack(accounts, store, args.policy, clock, secret, args.sessions,
                                       entropy=entropy)
    else:
        if args.trials < 1:
            raise UsageError("--trials must be >= 1")
        password = "victim-password"
        store = attacks.build_store([("victim", password)])
        _, t = run_session(store, "victim", password, args.policy, clock, secret, entropy=entropy)
        leaked = None
        if args.control:
            leaked = SecurePart.decode(t.find(MessageType.CHALLENGE_SECURE)[0].payload).key
        rep = attacks.forge_attack([adversary_view(t)], "victim", store, args.policy, clock, secret,
                                   args.trials, candidates=[password], leaked_key=leaked, entropy=entropy)
    attacks.write_reports_csv([rep], sys.stdout)
    if args.log:
        with open(args.log, "w", encoding="utf-8") as fh:
            rep.write_log(fh)
    return 0


def cmd_report(args) -> int:
    policies = args.policies or [DelayPolicy.parse(p) for p in report.DEFAULT_POLICIES]
    if len(policies) < 2:
        raise UsageError("report needs at least two --policy values")
    paths = report.write_report(args.out, words=args.words, policies=policies)
    with open(paths["comparison"], encoding="utf-8") as fh:
        sys.stdout.write(fh.read())
    for key in ("schedule", "schedule_png", "comparison_png"):
        print(f"# wrote {paths[key]}", file=sys.stderr)
    return 0


COMMANDS = {
    "keygen": cmd_keygen,
    "serve": cmd_serve,
    "register": cmd_register,
    "login": cmd_login,
    "attack": cmd_attack,
    "report": cmd_report,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"pvbpp: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (PVBPPError, ValueError) as exc:
        print(f"pvbpp: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
