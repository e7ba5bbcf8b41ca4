"""Operator command line: ``init``, ``register``, ``login``, ``attack``, ``inspect``.

Exit codes: 0 success/accept, 1 protocol rejection or verification failure,
2 usage or I/O error.  Passwords come from ``$LUAUTH_PASSWORD`` or a prompt.
"""

from __future__ import annotations

import argparse
import getpass
import os
import random
import sys
import time

from . import gfmatrix, protocol, store
from .blocks import pw_block
from .errors import BadIdFormat, BadPassword, GenerationFailed, PoolExhausted, StoreError
from .transport import SUITES, Channel, SimClock, run_attack_suite, run_handshake

PASSWORD_ENV = "LUAUTH_PASSWORD"

EXIT_OK = 0
EXIT_REJECT = 1
EXIT_USAGE = 2


class UsageError(Exception):
    pass


def _out(*args):
    print(*args)


def _err(msg: str):
    print(f"luauth: {msg}", file=sys.stderr)


def _seed(text: str) -> bytes:
    try:
        seed = bytes.fromhex(text)
    except ValueError:
        raise argparse.ArgumentTypeError("seed must be hex") from None
    if len(seed) != 32:
        raise argparse.ArgumentTypeError("seed must be 32 bytes (64 hex digits)")
    return seed


def _password() -> bytes:
    pw = os.environ.get(PASSWORD_ENV)
    if pw is None:
        pw = getpass.getpass("password: ")
    return pw.encode("utf-8")


def _rng(seed: int | None) -> random.Random:
    return random.SystemRandom() if seed is None else random.Random(seed)


def _now(at_millis: int | None) -> int:
    return time.time_ns() // 1_000_000 if at_millis is None else at_millis


def _load(loader, path):
    try:
        return loader(path)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror or exc}") from exc
    except StoreError as exc:
        raise UsageError(f"cannot load {path}: {exc}") from exc


def _save(saver, obj, path):
    try:
        saver(obj, path)
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc.strerror or exc}") from exc


def _emit(args, pairs: list[tuple[str, object]], human: str):
    if args.machine:
        for k, v in pairs:
            _out(f"{k}={v}")
    else:
        _out(human)


def cmd_init(args) -> int:
    if args.n < 2:
        raise UsageError("--n must be at least 2")
    if args.delta_t_ms <= 0:
        raise UsageError("--delta-t-ms must be positive")
    if not 3 <= args.p < 1 << 64 or not gfmatrix.is_prime(args.p):
        raise UsageError("--p must be a prime below 2**64")
    seed = args.seed if args.seed is not None else os.urandom(32)
    try:
        state = protocol.init_server(seed, args.n, args.p, args.delta_t_ms, args.replay_cache)
    except (GenerationFailed, PoolExhausted) as exc:
        _err(str(exc))
        return EXIT_REJECT
    _save(store.save_server, state, args.out)
    rc = state.km.rejection_count
    _emit(args, [("n", args.n), ("p", args.p), ("rejection_count", rc), ("out", args.out)],
          f"server initialised: n={args.n} p={args.p} rejection_count={rc} -> {args.out}")
    return EXIT_OK


def cmd_register(args) -> int:
    server = _load(store.load_server, args.server)
    try:
        card = protocol.register(server, args.id, _password(), _rng(args.rng_seed))
    except (BadIdFormat, BadPassword) as exc:
        _err(str(exc))
        return EXIT_REJECT
    _save(store.save_card, card, args.card_out)
    _emit(args, [("id", card.id), ("n", card.n), ("out", args.card_out)],
          f"card issued for {card.id} -> {args.card_out}")
    return EXIT_OK


def cmd_login(args) -> int:
    if args.delay_ms < 0:
        raise UsageError("--delay-ms must be non-negative")
    server = _load(store.load_server, args.server)
    card = _load(store.load_card, args.card)
    password = _password()
    try:
        pw_block(password)
    except BadPassword as exc:
        raise UsageError(str(exc)) from exc
    tr = run_handshake(server, card, password, Channel(delay_ms=args.delay_ms),
                       SimClock(_now(args.at_millis)), _rng(args.rng_seed))
    if args.machine:
        for line in tr.to_lines():
            _out(line)
    else:
        _out(f"server: {tr.server_verdict}")
        _out(f"card:   {tr.card_verdict}")
    return EXIT_OK if tr.accepted else EXIT_REJECT


def cmd_attack(args) -> int:
    if args.trials < 1:
        raise UsageError("--trials must be positive")
    server = _load(store.load_server, args.server)
    card = _load(store.load_card, args.card)
    suites = tuple(SUITES if not args.suite or "all" in args.suite else args.suite)
    try:
        rows = run_attack_suite(server, card, _password(), _now(args.at_millis),
                                _rng(args.rng_seed), args.trials, suites)
    except (ValueError, BadPassword) as exc:
        raise UsageError(str(exc)) from exc
    if args.machine:
        for r in rows:
            key = r.attack.replace("-", "_")
            for field in ("trials", "accepts", "expected"):
                _out(f"{key}.{field}={getattr(r, field)}")
            _out(f"{key}.ok={int(r.ok)}")
    else:
        width = max(len(r.attack) for r in rows)
        _out(f"{'attack':<{width}}  trials  accepts  expected  result")
        for r in rows:
            note = f"  {r.note}" if r.note else ""
            _out(f"{r.attack:<{width}}  {r.trials:>6}  {r.accepts:>7}  {r.expected:>8}  "
                 f"{'ok' if r.ok else 'FAIL'}{note}")
    return EXIT_OK if all(r.ok for r in rows) else EXIT_REJECT


def cmd_inspect(args) -> int:
    try:
        with open(args.file, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {args.file}: {exc.strerror or exc}") from exc
    try:
        if data[:4] == store.SERVER_MAGIC:
            pairs = _inspect_server(store.decode_server(data), args.reveal_secrets)
        elif data[:4] == store.CARD_MAGIC:
            pairs = _inspect_card(store.decode_card(data), args.reveal_secrets)
        else:
            _err(f"{args.file}: unknown file type")
            return EXIT_REJECT
    except StoreError as exc:
        _err(f"{args.file}: {exc}")
        return EXIT_REJECT
    if args.machine:
        for k, v in pairs:
            _out(f"{k}={v}")
    else:
        _out(", ".join(f"{k}={v}" if k != "type" else v for k, v in pairs))
    return EXIT_OK


def _matrix_text(m) -> str:
    return ";".join(",".join(str(v) for v in r) for r in m.entries)


def _inspect_server(state, reveal):
    pairs = [("type", "server"), ("n", state.n), ("p", state.p),
             ("delta_t_ms", state.delta_t_ms),
             ("replay_cache", int(state.replay_cache_enabled)),
             ("rejection_count", state.km.rejection_count)]
    if reveal:
        pairs += [("phi", state.phi.hex()), ("seed", state.km.seed.hex()),
                  ("l", _matrix_text(state.km.l)), ("u", _matrix_text(state.km.u))]
    return pairs


def _inspect_card(card, reveal):
    pairs = [("type", "card"), ("id", card.id), ("n", card.n), ("p", card.p)]
    if reveal:
        pairs += [("k_block", card.k_block.hex()), ("v", card.v.hex()),
                  ("theta", card.theta.hex()),
                  ("u_col", ",".join(str(k) for k in card.u_col))]
    return pairs


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--machine", action="store_true",
                        help="print key=value lines instead of human text")

    parser = argparse.ArgumentParser(prog="luauth", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("init", parents=[common], help="generate a server state file")
    p.add_argument("--seed", type=_seed, help="32-byte hex seed (random if omitted)")
    p.add_argument("--n", type=int, default=16, help="matrix dimension N")
    p.add_argument("--p", type=int, default=gfmatrix.MERSENNE_61, help="field modulus")
    p.add_argument("--delta-t-ms", type=int, default=protocol.DEFAULT_DELTA_T_MS)
    p.add_argument("--replay-cache", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_init)

    p = sub.add_parser("register", parents=[common], help="issue a smart card")
    p.add_argument("--server", required=True)
    p.add_argument("--id", required=True)
    p.add_argument("--card-out", required=True)
    p.add_argument("--rng-seed", type=int)
    p.set_defaults(func=cmd_register)

    p = sub.add_parser("login", parents=[common], help="run one handshake")
    p.add_argument("--server", required=True)
    p.add_argument("--card", required=True)
    p.add_argument("--delay-ms", type=int, default=0)
    p.add_argument("--at-millis", type=int)
    p.add_argument("--rng-seed", type=int)
    p.set_defaults(func=cmd_login)

    p = sub.add_parser("attack", parents=[common], help="run the adversary suite")
    p.add_argument("--server", required=True)
    p.add_argument("--card", required=True)
    p.add_argument("--suite", action="append", choices=SUITES + ("all",))
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--at-millis", type=int)
    p.add_argument("--rng-seed", type=int)
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("inspect", parents=[common], help="show public metadata of a file")
    p.add_argument("file")
    p.add_argument("--reveal-secrets", action="store_true")
    p.set_defaults(func=cmd_inspect)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        _err(str(exc))
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
