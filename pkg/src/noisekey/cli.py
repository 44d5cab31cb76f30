"""Command-line front end: figure sweeps, the two-process demo and replay.

Subcommands::

    fig3    one-round virtual-channel errors vs the local noise rate
    fig4    first-exchange acceptance fraction vs the tamper rate
    fig5    end-to-end key rate vs the tamper rate
    agree   live two-process key agreement over TCP
    replay  offline adversary reconstruction from a .nkt transcript

Every sweep command prints the exact configuration digest it ran under and
writes a deterministic CSV; ``--plot`` additionally renders a PNG next to
it.
"""

from __future__ import annotations

import argparse
import socket
import sys
from pathlib import Path

from .adversary import EveStrategy
from .channel import TiePolicy
from .experiments import (
    FIG3_COLUMNS,
    FIG4_COLUMNS,
    FIG5_COLUMNS,
    fig3_rows,
    fig4_rows,
    fig5_rows,
    write_csv,
)
from .session import (
    AliceParty,
    BobParty,
    EveObserver,
    SessionConfig,
    replay_eve,
    run_party_over_socket,
    tamper_transform_for,
)
from .transport import DEFAULT_PORT, SocketChannel, TranscriptWriter, read_transcript

EXIT_OK = 0
EXIT_CONNECTION = 2
EXIT_PROTOCOL = 3
EXIT_CONFIRM = 4
EXIT_ALARM = 5
EXIT_EMPTY_KEY = 6

_STATUS_EXIT = {
    "ok": EXIT_OK,
    "config-mismatch": EXIT_PROTOCOL,
    "protocol-error": EXIT_PROTOCOL,
    "confirm-failed": EXIT_CONFIRM,
    "alarm": EXIT_ALARM,
    "empty-key": EXIT_EMPTY_KEY,
}

DEFAULT_FIG3_ALPHAS = [round(0.02 * i, 2) for i in range(1, 25)]
DEFAULT_TAUS = [round(0.005 * i, 3) for i in range(0, 11)]


def _float_list(text: str) -> list[float]:
    return [float(part) for part in text.split(",") if part.strip()]


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=1, help="64-bit master seed")
    parser.add_argument("--out", type=Path, default=None, help="output file path")


def _add_noise(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--alpha", type=float, default=0.16)
    parser.add_argument("--beta", type=float, default=None, help="defaults to alpha")
    parser.add_argument("--gamma", type=float, default=0.0)
    parser.add_argument("--tau", type=float, default=0.0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="noisekey",
        description="Secret-key distribution over a noiseless channel "
        "by locally injected noise",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p3 = sub.add_parser("fig3", help="virtual-channel error rates vs alpha")
    _add_common(p3)
    p3.add_argument("--alphas", type=_float_list, default=DEFAULT_FIG3_ALPHAS)
    p3.add_argument("--samples", type=int, default=100_000, help="groups per point")
    p3.add_argument(
        "--tie-policy",
        type=TiePolicy,
        choices=[p.value for p in TiePolicy],
        default=TiePolicy.COUNT_AS_ERROR,
    )
    p3.add_argument("--workers", type=int, default=1)
    p3.add_argument("--plot", action="store_true", help="render a PNG beside the CSV")

    p4 = sub.add_parser("fig4", help="first-exchange acceptance vs tamper rate")
    _add_common(p4)
    p4.add_argument("--taus", type=_float_list, default=DEFAULT_TAUS)
    p4.add_argument("--bits", type=int, default=500_000)
    p4.add_argument("--alpha", type=float, default=0.16)
    p4.add_argument("--reps", type=int, default=1)
    p4.add_argument("--workers", type=int, default=1)
    p4.add_argument("--plot", action="store_true")

    p5 = sub.add_parser("fig5", help="end-to-end key rate vs tamper rate")
    _add_common(p5)
    p5.add_argument("--taus", type=_float_list, default=DEFAULT_TAUS)
    p5.add_argument("--bits", type=int, default=500_000)
    p5.add_argument("--alpha", type=float, default=0.16)
    p5.add_argument("--rounds", type=int, default=4)
    p5.add_argument("--reps", type=int, default=1)
    p5.add_argument("--workers", type=int, default=1)
    p5.add_argument("--eve-incorporate", action="store_true")
    p5.add_argument("--plot", action="store_true")

    pa = sub.add_parser("agree", help="two-process key agreement over TCP")
    _add_common(pa)
    _add_noise(pa)
    pa.add_argument("--role", choices=["alice", "bob"], required=True)
    pa.add_argument("--listen", action="store_true", help="listen (alice side)")
    pa.add_argument("--connect", default=None, metavar="HOST[:PORT]")
    pa.add_argument("--port", type=int, default=DEFAULT_PORT)
    pa.add_argument("--bits", type=int, default=500_000)
    pa.add_argument("--rounds", type=int, default=4)
    pa.add_argument("--eve", choices=["passive", "tamper"], default="passive")
    pa.add_argument("--eve-incorporate", action="store_true")
    pa.add_argument(
        "--tie-policy",
        type=TiePolicy,
        choices=[p.value for p in TiePolicy],
        default=TiePolicy.RANDOM_GUESS,
    )
    pa.add_argument("--transcript", type=Path, default=None, help=".nkt frame log")
    pa.add_argument("--timeout", type=float, default=30.0)

    pr = sub.add_parser("replay", help="reconstruct the adversary from a transcript")
    _add_common(pr)
    _add_noise(pr)
    pr.add_argument("--transcript", type=Path, required=True)
    pr.add_argument("--eve", choices=["passive", "tamper"], default="passive")
    pr.add_argument("--eve-incorporate", action="store_true")
    pr.add_argument(
        "--tie-policy",
        type=TiePolicy,
        choices=[p.value for p in TiePolicy],
        default=TiePolicy.RANDOM_GUESS,
    )
    return parser


def _announce(name: str, config_text: str, digest_hex: str) -> None:
    print(f"{name} config: {config_text}")
    print(f"{name} digest: {digest_hex}")


def _sweep_digest(doc: dict) -> str:
    import hashlib
    import json

    text = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return text, hashlib.sha256(text.encode()).hexdigest()


def cmd_fig3(args) -> int:
    doc = {
        "alphas": args.alphas,
        "samples": args.samples,
        "seed": args.seed,
        "tie_policy": args.tie_policy.value,
    }
    text, digest = _sweep_digest(doc)
    _announce("fig3", text, digest)
    rows = fig3_rows(args.alphas, args.samples, args.seed, args.tie_policy, args.workers)
    out = args.out or Path("fig3.csv")
    write_csv(out, rows, FIG3_COLUMNS)
    print(f"wrote {out}")
    if args.plot:
        from .plots import render_fig3

        render_fig3(rows, out.with_suffix(".png"))
        print(f"wrote {out.with_suffix('.png')}")
    return EXIT_OK


def cmd_fig4(args) -> int:
    doc = {
        "taus": args.taus,
        "bits": args.bits,
        "alpha": args.alpha,
        "seed": args.seed,
        "reps": args.reps,
    }
    text, digest = _sweep_digest(doc)
    _announce("fig4", text, digest)
    rows = fig4_rows(args.taus, args.bits, args.alpha, args.seed, args.reps, args.workers)
    out = args.out or Path("fig4.csv")
    write_csv(out, rows, FIG4_COLUMNS)
    print(f"wrote {out}")
    if args.plot:
        from .plots import render_fig4

        render_fig4(rows, out.with_suffix(".png"))
        print(f"wrote {out.with_suffix('.png')}")
    return EXIT_OK


def cmd_fig5(args) -> int:
    doc = {
        "taus": args.taus,
        "bits": args.bits,
        "alpha": args.alpha,
        "rounds": args.rounds,
        "seed": args.seed,
        "reps": args.reps,
        "eve_incorporate": args.eve_incorporate,
    }
    text, digest = _sweep_digest(doc)
    _announce("fig5", text, digest)
    rows = fig5_rows(
        args.taus,
        args.bits,
        args.rounds,
        args.seed,
        alpha=args.alpha,
        repetitions=args.reps,
        workers=args.workers,
        eve_incorporate=args.eve_incorporate,
    )
    out = args.out or Path("fig5.csv")
    write_csv(out, rows, FIG5_COLUMNS)
    print(f"wrote {out}")
    if args.plot:
        from .plots import render_fig5

        render_fig5(rows, out.with_suffix(".png"))
        print(f"wrote {out.with_suffix('.png')}")
    return EXIT_OK


def _session_config(args) -> SessionConfig:
    beta = args.alpha if args.beta is None else args.beta
    if args.eve == "tamper":
        eve = EveStrategy(
            "tamper",
            gamma=args.gamma,
            tau=args.tau,
            incorporate_tamper=args.eve_incorporate,
        )
    else:
        eve = EveStrategy("passive", gamma=args.gamma)
    return SessionConfig(
        initial_bits=args.bits,
        alpha=args.alpha,
        beta=beta,
        rounds=args.rounds,
        seed=args.seed,
        eve=eve,
        eve_tie_policy=args.tie_policy,
    )


def cmd_agree(args) -> int:
    config = _session_config(args)
    _announce("agree", config.to_json(), config.digest().hex())
    try:
        if args.role == "alice":
            if args.connect:
                print("alice listens; use --listen", file=sys.stderr)
                return EXIT_CONNECTION
            listener = socket.create_server(("127.0.0.1" if args.listen else "", args.port))
            listener.settimeout(args.timeout)
            conn, peer = listener.accept()
            listener.close()
            print(f"accepted {peer[0]}:{peer[1]}")
        else:
            if not args.connect:
                print("bob needs --connect HOST[:PORT]", file=sys.stderr)
                return EXIT_CONNECTION
            host, _, port_text = args.connect.partition(":")
            port = int(port_text) if port_text else args.port
            conn = socket.create_connection((host, port), timeout=args.timeout)
            print(f"connected to {host}:{port}")
        conn.settimeout(args.timeout)
    except OSError as exc:
        print(f"connection failed: {exc}", file=sys.stderr)
        return EXIT_CONNECTION

    observer = EveObserver(config.seed, config.eve, config.eve_tie_policy)
    party = AliceParty(config, observer) if args.role == "alice" else BobParty(config, observer)
    transform = tamper_transform_for(config) if args.role == "alice" else None
    taps = []
    writer = None
    if args.transcript is not None:
        writer = TranscriptWriter(args.transcript)
        taps.append(writer)
    channel = SocketChannel(conn)
    try:
        result = run_party_over_socket(party, channel, taps=taps, transform=transform)
    except OSError as exc:
        print(f"connection lost: {exc}", file=sys.stderr)
        return EXIT_CONNECTION
    finally:
        channel.close()
        if writer is not None:
            writer.close()

    print(result.report())
    if result.status == "ok" and args.out is not None:
        args.out.write_text(result.final_key.to_text() + "\n")
        print(f"wrote {args.out}")
    return _STATUS_EXIT.get(result.status, EXIT_PROTOCOL)


def cmd_replay(args) -> int:
    if args.eve == "tamper":
        strategy = EveStrategy(
            "tamper", gamma=args.gamma, tau=args.tau, incorporate_tamper=args.eve_incorporate
        )
    else:
        strategy = EveStrategy("passive", gamma=args.gamma)
    messages = read_transcript(args.transcript)
    observer = replay_eve(messages, args.seed, strategy, args.tie_policy)
    print(f"frames            {len(messages)}")
    print(f"rounds observed   {len(observer.round_strings)}")
    if observer.string is not None:
        print(f"eve final string  {observer.string.to_text()}")
    if observer.guess is not None:
        print(f"eve key guess     {observer.guess.to_text()}")
        if args.out is not None:
            args.out.write_text(observer.guess.to_text() + "\n")
            print(f"wrote {args.out}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {
        "fig3": cmd_fig3,
        "fig4": cmd_fig4,
        "fig5": cmd_fig5,
        "agree": cmd_agree,
        "replay": cmd_replay,
    }[args.command]
    return handler(args)


if __name__ == "__main__":
    sys.exit(main())
