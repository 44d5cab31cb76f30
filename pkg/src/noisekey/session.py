"""Party state machines and session orchestration.

Both parties are sans-IO: they consume protocol messages and return the
messages to send next, so the exact same state machines run lock-step in
one process (:func:`run_local_simulation`) or over a TCP byte stream
(:func:`run_party_over_socket`).  All randomness derives from the shared
64-bit config seed through fixed stream ids, which makes a session a pure
function of its :class:`SessionConfig` in either mode.

The adversary bookkeeping (:class:`EveObserver`) is a plain wire tap: it
sees every frame in order plus the seeded strategy parameters, and commits
a concrete decoded string round by round.  The same class replays recorded
``.nkt`` transcripts offline.
"""

from __future__ import annotations

import hashlib
import json
import math
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple

from .adversary import EveStrategy, eve_best_guess_key
from .bitstream import (
    STREAM_ALICE_MESSAGE,
    STREAM_ALICE_NOISE,
    STREAM_BOB_MESSAGE,
    STREAM_BOB_NOISE,
    STREAM_EVE,
    STREAM_PUBLIC_HASH,
    STREAM_TAMPER,
    BitBlock,
    BitSource,
    agreement_fraction,
    xor,
)
from .channel import TiePolicy, bsc_mutual_info, convolve_flip, round_recursion
from .distill import MaskedBlock, bob_decode, encode_round, eve_decode, eve_error_fraction
from .privacy import PaParams, draw_hash_seed, output_length, toeplitz_hash
from .transport import (
    Abort,
    AbortReason,
    AcceptMask,
    ChannelClosed,
    FrameError,
    Hello,
    KeyCheck,
    KeyOk,
    MaskedPairs,
    Message,
    PaSeed,
    RandomBlock,
    RoundDone,
    SocketChannel,
    make_tamper_transform,
)

CHECK_DIGEST_BITS = 64


class PhaseError(RuntimeError):
    """An operation was attempted outside its allowed protocol phase."""


class Phase(Enum):
    INIT = 0
    EXCHANGED = 1
    ROUNDS = 2
    RECONCILED = 3
    AMPLIFIED = 4
    CONFIRMED = 5
    ABORTED = 6


@dataclass
class PartyState:
    """Where one party stands: phase, round counter and working string."""

    role: str
    phase: Phase = Phase.INIT
    round_no: int = 0
    current: BitBlock | None = None
    transcript: list[dict] = field(default_factory=list)

    def advance(self, phase: Phase) -> None:
        if phase is not Phase.ABORTED and phase.value < self.phase.value:
            raise PhaseError(f"cannot move from {self.phase} back to {phase}")
        self.phase = phase


@dataclass(frozen=True)
class SessionConfig:
    """Everything that determines a session, including all randomness."""

    initial_bits: int = 500_000
    alpha: float = 0.16
    beta: float = 0.16
    n_rep: int = 2
    rounds: int = 4
    kappa: float = 1e-6
    ptotal_alarm_sigma: float = 3.0
    safety_bits: int = 64
    seed: int = 1
    eve: EveStrategy = EveStrategy()
    eve_tie_policy: TiePolicy = TiePolicy.RANDOM_GUESS
    alternate_roles: bool = False
    session_nonce: int = 0

    def __post_init__(self) -> None:
        if self.rounds < 1:
            raise ValueError("need at least one round")
        if self.n_rep < 2:
            raise ValueError("repetition factor must be at least 2")
        if self.initial_bits < self.n_rep**self.rounds:
            raise ValueError(
                "initial exchange too short: the rounds would necessarily "
                "reduce it to an empty key"
            )
        if not 0.0 < self.alpha < 1.0 or not 0.0 < self.beta < 1.0:
            raise ValueError("alpha and beta must lie strictly inside (0, 1)")

    def to_json(self) -> str:
        doc = {
            "initial_bits": self.initial_bits,
            "alpha": self.alpha,
            "beta": self.beta,
            "n_rep": self.n_rep,
            "rounds": self.rounds,
            "kappa": self.kappa,
            "ptotal_alarm_sigma": self.ptotal_alarm_sigma,
            "safety_bits": self.safety_bits,
            "seed": self.seed,
            "eve": {
                "kind": self.eve.kind,
                "gamma": self.eve.gamma,
                "tau": self.eve.tau,
                "incorporate_tamper": self.eve.incorporate_tamper,
            },
            "eve_tie_policy": self.eve_tie_policy.value,
            "alternate_roles": self.alternate_roles,
            "session_nonce": self.session_nonce,
        }
        return json.dumps(doc, sort_keys=True, separators=(",", ":"))

    def digest(self) -> bytes:
        return hashlib.sha256(self.to_json().encode()).digest()

    def encoder_of(self, round_no: int) -> str:
        if self.alternate_roles and round_no % 2 == 0:
            return "bob"
        return "alice"


class RoundMonitor(NamedTuple):
    expected: float
    measured: float
    z: float


@dataclass(frozen=True)
class KeyResult:
    """Terminal record of one session, identical for both parties."""

    final_key: BitBlock
    pre_pa_len: int
    k_estimate: float
    p_total_series: tuple[RoundMonitor, ...]
    tamper_alarm: bool
    eve_agreement_prepa: float
    eve_key_agreement: float
    key_rate: float
    status: str
    kappa_met: bool

    def to_json(self) -> str:
        doc = {
            "final_key": self.final_key.to_text(),
            "pre_pa_len": self.pre_pa_len,
            "k_estimate": self.k_estimate,
            "p_total_series": [list(m) for m in self.p_total_series],
            "tamper_alarm": self.tamper_alarm,
            "eve_agreement_prepa": self.eve_agreement_prepa,
            "eve_key_agreement": self.eve_key_agreement,
            "key_rate": self.key_rate,
            "status": self.status,
            "kappa_met": self.kappa_met,
        }
        return json.dumps(doc, sort_keys=True, separators=(",", ":"))

    def report(self) -> str:
        lines = [
            f"status            {self.status}",
            f"pre-PA length     {self.pre_pa_len}",
            f"k estimate        {self.k_estimate:.6g}",
            f"final key bits    {self.final_key.length}",
            f"key rate          {self.key_rate:.6g}",
            f"tamper alarm      {self.tamper_alarm}",
            f"kappa met         {self.kappa_met}",
            f"eve pre-PA agree  {self.eve_agreement_prepa:.6g}",
            f"eve key agree     {self.eve_key_agreement:.6g}",
        ]
        for i, mon in enumerate(self.p_total_series, 1):
            lines.append(
                f"round {i}: expected {mon.expected:.6g} "
                f"measured {mon.measured:.6g} z {mon.z:+.2f}"
            )
        return "\n".join(lines)


def monitor_p_total(expected: float, accepted: int, offered: int) -> float:
    """Z-score of the observed acceptance fraction against its expectation."""
    if offered <= 0:
        raise ValueError("offered group count must be positive")
    measured = accepted / offered
    sigma = math.sqrt(expected * (1.0 - expected) / offered)
    if sigma == 0.0:
        # degenerate expectation (0 or 1): any deviation is unreachable by
        # sampling noise alone
        return 0.0 if measured == expected else math.copysign(math.inf, measured - expected)
    return (measured - expected) / sigma


def estimate_eve_information(eve_final: BitBlock, reference: BitBlock) -> float:
    """Conservative per-bit information of the adversary about ``reference``.

    Scores her string as a binary symmetric channel output; an error rate
    above one half is folded back, since she could flip her whole string.
    """
    if eve_final.length != reference.length:
        raise ValueError("strings must have equal lengths")
    if eve_final.length == 0:
        raise ValueError("cannot estimate information from empty strings")
    err = 1.0 - agreement_fraction(eve_final, reference)
    return bsc_mutual_info(min(err, 1.0 - err))


def confirm_keys(local_key: BitBlock, peer_check: BitBlock, check_seed: BitBlock) -> bool:
    """Compare verification digests under a shared public seed."""
    mine = toeplitz_hash(local_key, check_seed, peer_check.length)
    return mine == peer_check


# -- adversary bookkeeping ------------------------------------------------------


class EveObserver:
    """Wire tap plus seeded strategy: reconstructs everything Eve knows.

    Consumes frames in wire order.  On the initial exchange she stores her
    wiretapped (optionally noisy, optionally tamper-incorporating) copy; on
    each round she majority-decodes the masked groups the receiver
    accepted; once compression parameters appear in clear she hashes her
    own final string into a key guess.
    """

    def __init__(
        self,
        seed: int,
        strategy: EveStrategy,
        tie_policy: TiePolicy = TiePolicy.RANDOM_GUESS,
    ):
        self.strategy = strategy
        self.tie_policy = tie_policy
        self._src = BitSource(seed, STREAM_EVE)
        self._tamper_src = BitSource(seed, STREAM_TAMPER)
        self.string: BitBlock | None = None
        self.round_strings: list[BitBlock] = []
        self.tie_masks: list[BitBlock] = []
        self.guess: BitBlock | None = None
        self._pending: MaskedBlock | None = None

    def on_wire(self, msg: Message) -> None:
        if isinstance(msg, RandomBlock):
            self._store_initial(msg.block)
        elif isinstance(msg, MaskedPairs):
            self._pending = MaskedBlock(msg.n_rep, msg.payload)
        elif isinstance(msg, AcceptMask):
            self._decode_round(msg.mask)
        elif isinstance(msg, PaSeed):
            self._hash_guess(msg)

    def _store_initial(self, wire_block: BitBlock) -> None:
        if self.strategy.kind == "tamper":
            t = self._tamper_src.biased(wire_block.length, self.strategy.tau)
            base = wire_block if self.strategy.incorporate_tamper else xor(wire_block, t)
        else:
            base = wire_block
        self.string = xor(base, self._src.biased(base.length, self.strategy.gamma))

    def _decode_round(self, mask: BitBlock) -> None:
        # a pure observer must survive any frame the wire can carry; skip
        # anything that does not line up with what she holds
        if self._pending is None or self.string is None:
            return
        if (
            self._pending.payload.length > self.string.length
            or mask.length != self._pending.groups
        ):
            self._pending = None
            return
        bits, ties = eve_decode(self._pending, self.string, mask, self.tie_policy, self._src)
        self.string = bits
        self.round_strings.append(bits)
        self.tie_masks.append(ties)
        self._pending = None

    def _hash_guess(self, msg: PaSeed) -> None:
        if self.string is None or self.string.length != msg.input_len:
            return
        n, m = msg.input_len, msg.output_len
        if not 0 < m <= n or msg.seed.length != n + m - 1:
            return
        params = PaParams.from_lengths(n, m, msg.seed)
        self.guess = eve_best_guess_key(self.round_strings, params)

    def final_string(self) -> BitBlock:
        if self.string is None:
            raise PhaseError("no exchange observed yet")
        return self.string


# -- the two party state machines ---------------------------------------------

_STATUS_OF_REASON = {
    AbortReason.CONFIG_MISMATCH: "config-mismatch",
    AbortReason.TAMPER_ALARM: "alarm",
    AbortReason.CONFIRM_FAILED: "confirm-failed",
    AbortReason.PROTOCOL_ERROR: "protocol-error",
    AbortReason.EMPTY_KEY: "empty-key",
}


class _Party:
    """Shared machinery of both roles; subclasses wire up the handlers."""

    role: str

    def __init__(self, config: SessionConfig, observer: EveObserver):
        self.config = config
        self.observer = observer
        self.state = PartyState(role=self.role)
        self.finished = False
        self.result: KeyResult | None = None
        self.key: BitBlock | None = None
        self.final_string: BitBlock | None = None
        self._noise = BitSource(
            config.seed,
            STREAM_ALICE_NOISE if self.role == "alice" else STREAM_BOB_NOISE,
        )
        self._messages = BitSource(
            config.seed,
            STREAM_ALICE_MESSAGE if self.role == "alice" else STREAM_BOB_MESSAGE,
        )
        self._public = BitSource(config.seed, STREAM_PUBLIC_HASH, nonce=config.session_nonce)
        steps = round_recursion(
            convolve_flip(config.alpha, config.beta),
            config.n_rep,
            config.rounds,
            config.initial_bits,
        )
        self._expected_ptotal = [s.p_total for s in steps]
        self._kappa_met = steps[-1].epsilon < config.kappa
        self._monitors: list[RoundMonitor] = []
        self._pending_c: BitBlock | None = None
        self._check_digest: BitBlock | None = None

    # -- message plumbing --------------------------------------------------

    def start(self) -> list[Message]:
        return []

    def on_message(self, msg: Message) -> list[Message]:
        if self.finished:
            return []
        if isinstance(msg, Abort):
            self._finish(_STATUS_OF_REASON[msg.reason])
            return []
        try:
            return self._dispatch(msg)
        except (ValueError, PhaseError):
            return self._abort(AbortReason.PROTOCOL_ERROR)

    def on_disconnect(self) -> None:
        if not self.finished:
            self._finish("protocol-error")

    def _dispatch(self, msg: Message) -> list[Message]:
        raise NotImplementedError

    def _abort(self, reason: AbortReason) -> list[Message]:
        status = _STATUS_OF_REASON[reason]
        self._finish(status)
        return [Abort(reason)]

    # -- round engine --------------------------------------------------------

    def _my_local_string(self, r: BitBlock) -> BitBlock:
        p = self.config.alpha if self.role == "alice" else self.config.beta
        return xor(r, self._noise.biased(r.length, p))

    def _encodes(self, round_no: int) -> bool:
        return self.config.encoder_of(round_no) == self.role

    def _maybe_encode(self, round_no: int) -> list[Message]:
        self.state.round_no = round_no
        self.state.advance(Phase.ROUNDS)
        if not self._encodes(round_no):
            return []
        current = self.state.current
        c = self._messages.uniform(current.length // self.config.n_rep)
        self._pending_c = c
        masked = encode_round(current, c, self.config.n_rep)
        return [MaskedPairs(round_no, self.config.n_rep, masked.payload)]

    def _record_round(self, round_no: int, accepted: int, offered: int) -> None:
        expected = self._expected_ptotal[round_no - 1]
        z = monitor_p_total(expected, accepted, offered)
        self._monitors.append(RoundMonitor(expected, accepted / offered, z))
        self.state.transcript.append(
            {
                "round": round_no,
                "offered": offered,
                "accepted": accepted,
                "expected_p": expected,
                "z": z,
            }
        )

    def _handle_masked(self, msg: MaskedPairs) -> list[Message]:
        if self._encodes(msg.round_no) or msg.round_no != self.state.round_no:
            raise PhaseError(f"unexpected masked block for round {msg.round_no}")
        if msg.n_rep != self.config.n_rep:
            raise ValueError("repetition factor disagrees with the session config")
        current = self.state.current
        offered = current.length // self.config.n_rep
        if msg.payload.length != offered * self.config.n_rep:
            raise ValueError("masked payload misaligned with the working string")
        mask, decoded = bob_decode(MaskedBlock(msg.n_rep, msg.payload), current)
        self._record_round(msg.round_no, mask.popcount(), offered)
        self.state.current = decoded
        return [AcceptMask(msg.round_no, mask)]

    def _handle_accept(self, msg: AcceptMask) -> list[Message]:
        if not self._encodes(msg.round_no) or msg.round_no != self.state.round_no:
            raise PhaseError(f"unexpected accept mask for round {msg.round_no}")
        c = self._pending_c
        if c is None or msg.mask.length != c.length:
            raise ValueError("accept mask misaligned with the offered groups")
        self._record_round(msg.round_no, msg.mask.popcount(), c.length)
        self.state.current = c.select(msg.mask)
        self._pending_c = None
        out: list[Message] = [RoundDone(msg.round_no)]
        out.extend(self._after_round(msg.round_no))
        return out

    def _handle_round_done(self, msg: RoundDone) -> list[Message]:
        if self._encodes(msg.round_no) or msg.round_no != self.state.round_no:
            raise PhaseError(f"unexpected round-done for round {msg.round_no}")
        return self._after_round(msg.round_no)

    def _after_round(self, round_no: int) -> list[Message]:
        if round_no < self.config.rounds:
            return self._maybe_encode(round_no + 1)
        self.state.advance(Phase.RECONCILED)
        self.final_string = self.state.current
        return self._after_reconciled()

    def _after_reconciled(self) -> list[Message]:
        raise NotImplementedError

    # -- terminal bookkeeping ------------------------------------------------

    @property
    def tamper_alarm(self) -> bool:
        sigma = self.config.ptotal_alarm_sigma
        return any(m.z < -sigma for m in self._monitors)

    def _estimate_k(self) -> float:
        # Per-bit information credit: the adversary's final-round decode is
        # scored with even splits charged as errors, the same convention the
        # analytic listener-error formula uses.  Her raw committed string is
        # reported separately as eve_agreement_prepa.
        eve = self.observer.final_string()
        if self.observer.tie_masks:
            ties = self.observer.tie_masks[-1]
        else:
            ties = BitBlock.zeros(eve.length)
        err = eve_error_fraction(self.final_string, eve, ties, TiePolicy.COUNT_AS_ERROR)
        return bsc_mutual_info(min(err, 1.0 - err))

    def _finish(self, status: str) -> None:
        reconciled = self.final_string is not None and self.final_string.length > 0
        pre_pa_len = self.final_string.length if self.final_string is not None else 0
        if reconciled:
            k = self._estimate_k()
            eve_agree = agreement_fraction(self.observer.final_string(), self.final_string)
        else:
            k, eve_agree = 0.0, 0.0
        if status == "ok" and self.key is not None and self.observer.guess is not None:
            eve_key_agree = agreement_fraction(self.observer.guess, self.key)
            final_key = self.key
        else:
            eve_key_agree = 0.0
            final_key = BitBlock.zeros(0)
            self.key = None
        key_rate = (1.0 - k) * pre_pa_len / self.config.initial_bits if reconciled else 0.0
        if status != "ok":
            self.state.advance(Phase.ABORTED)
        self.result = KeyResult(
            final_key=final_key,
            pre_pa_len=pre_pa_len,
            k_estimate=k,
            p_total_series=tuple(self._monitors),
            tamper_alarm=self.tamper_alarm,
            eve_agreement_prepa=eve_agree,
            eve_key_agreement=eve_key_agree,
            key_rate=key_rate,
            status=status,
            kappa_met=self._kappa_met,
        )
        self.finished = True


class AliceParty(_Party):
    """Initial sender and compression leader."""

    role = "alice"

    def _dispatch(self, msg: Message) -> list[Message]:
        if isinstance(msg, Hello):
            return self._handle_hello(msg)
        if isinstance(msg, AcceptMask):
            return self._handle_accept(msg)
        if isinstance(msg, MaskedPairs):
            return self._handle_masked(msg)
        if isinstance(msg, RoundDone):
            return self._handle_round_done(msg)
        if isinstance(msg, KeyOk):
            return self._handle_key_ok()
        raise PhaseError(f"message {type(msg).__name__} out of order")

    def _handle_hello(self, msg: Hello) -> list[Message]:
        if self.state.phase is not Phase.INIT:
            raise PhaseError("duplicate hello")
        if msg.config_digest != self.config.digest():
            return self._abort(AbortReason.CONFIG_MISMATCH)
        r = self._messages.uniform(self.config.initial_bits)
        self.state.current = self._my_local_string(r)
        self.state.advance(Phase.EXCHANGED)
        return [Hello(self.config.digest()), RandomBlock(r)] + self._maybe_encode(1)

    def _after_reconciled(self) -> list[Message]:
        if self.tamper_alarm:
            return self._abort(AbortReason.TAMPER_ALARM)
        n = self.final_string.length
        k = self._estimate_k()
        m = output_length(n, k, self.config.safety_bits)
        if m == 0:
            return self._abort(AbortReason.EMPTY_KEY)
        pa_seed = draw_hash_seed(self._public, n, m)
        check_seed = self._public.uniform(m + CHECK_DIGEST_BITS - 1)
        self.key = toeplitz_hash(self.final_string, pa_seed, m)
        self._check_digest = toeplitz_hash(self.key, check_seed, CHECK_DIGEST_BITS)
        self.state.advance(Phase.AMPLIFIED)
        return [PaSeed(n, m, pa_seed), KeyCheck(self._check_digest)]

    def _handle_key_ok(self) -> list[Message]:
        if self.state.phase is not Phase.AMPLIFIED:
            raise PhaseError("key-ok before amplification")
        self.state.advance(Phase.CONFIRMED)
        self._finish("ok")
        return []


class BobParty(_Party):
    """Receiver; accepts or rejects groups and verifies the final key."""

    role = "bob"

    def start(self) -> list[Message]:
        return [Hello(self.config.digest())]

    def _dispatch(self, msg: Message) -> list[Message]:
        if isinstance(msg, Hello):
            return self._handle_hello(msg)
        if isinstance(msg, RandomBlock):
            return self._handle_random(msg)
        if isinstance(msg, MaskedPairs):
            return self._handle_masked(msg)
        if isinstance(msg, AcceptMask):
            return self._handle_accept(msg)
        if isinstance(msg, RoundDone):
            return self._handle_round_done(msg)
        if isinstance(msg, PaSeed):
            return self._handle_pa(msg)
        if isinstance(msg, KeyCheck):
            return self._handle_check(msg)
        raise PhaseError(f"message {type(msg).__name__} out of order")

    def _handle_hello(self, msg: Hello) -> list[Message]:
        if self.state.phase is not Phase.INIT:
            raise PhaseError("duplicate hello")
        if msg.config_digest != self.config.digest():
            return self._abort(AbortReason.CONFIG_MISMATCH)
        return []

    def _handle_random(self, msg: RandomBlock) -> list[Message]:
        if msg.block.length != self.config.initial_bits:
            raise ValueError("initial exchange has the wrong length")
        self.state.current = self._my_local_string(msg.block)
        self.state.advance(Phase.EXCHANGED)
        self.state.round_no = 1
        self.state.advance(Phase.ROUNDS)
        return []

    def _handle_pa(self, msg: PaSeed) -> list[Message]:
        if self.state.phase is not Phase.RECONCILED:
            raise PhaseError("compression parameters arrived out of phase")
        if self.tamper_alarm:
            # identical monitoring on both sides: a peer that proceeds to
            # compression despite the alarm is not following the protocol
            return self._abort(AbortReason.TAMPER_ALARM)
        n, m = msg.input_len, msg.output_len
        if n != self.final_string.length or not 0 < m <= n:
            raise ValueError("compression parameters disagree with the session")
        replica = draw_hash_seed(self._public, n, m)
        if replica != msg.seed:
            raise ValueError("public hash seed disagrees with the shared stream")
        check_seed = self._public.uniform(m + CHECK_DIGEST_BITS - 1)
        self.key = toeplitz_hash(self.final_string, msg.seed, m)
        self._check_digest = toeplitz_hash(self.key, check_seed, CHECK_DIGEST_BITS)
        self.state.advance(Phase.AMPLIFIED)
        return []

    def _handle_check(self, msg: KeyCheck) -> list[Message]:
        if self.state.phase is not Phase.AMPLIFIED or self._check_digest is None:
            raise PhaseError("key check before amplification")
        if msg.digest != self._check_digest:
            return self._abort(AbortReason.CONFIRM_FAILED)
        self.state.advance(Phase.CONFIRMED)
        self._finish("ok")
        return [KeyOk()]

    def _after_reconciled(self) -> list[Message]:
        return []  # wait for the leader's compression parameters or abort


# -- drivers --------------------------------------------------------------------


def tamper_transform_for(config: SessionConfig):
    """In-transit tamper middleware for this config, or None when passive."""
    if config.eve.kind != "tamper":
        return None
    t = BitSource(config.seed, STREAM_TAMPER).biased(config.initial_bits, config.eve.tau)
    return make_tamper_transform(t)


def _pump(alice: AliceParty, bob: BobParty, taps, transform) -> None:
    to_alice: deque[Message] = deque()
    to_bob: deque[Message] = deque()

    def emit(sender: str, frames: list[Message]) -> None:
        for frame in frames:
            if sender == "alice":
                if transform is not None:
                    frame = transform(frame)
                dest = to_bob
            else:
                dest = to_alice
            for tap in taps:
                tap.on_wire(frame)
            dest.append(frame)

    emit("bob", bob.start())
    emit("alice", alice.start())
    while to_alice or to_bob:
        if to_alice:
            emit("alice", alice.on_message(to_alice.popleft()))
        else:
            emit("bob", bob.on_message(to_bob.popleft()))
    if not (alice.finished and bob.finished):
        raise PhaseError("session stalled before both parties finished")


@dataclass(frozen=True)
class SessionArtifacts:
    """Full referee view of one in-process session, for analysis and tests."""

    result: KeyResult
    alice_result: KeyResult
    bob_result: KeyResult
    alice_key: BitBlock | None
    bob_key: BitBlock | None
    alice_final: BitBlock | None
    bob_final: BitBlock | None
    eve_final: BitBlock | None
    eve_guess: BitBlock | None
    rounds: tuple[dict, ...]


def simulate(config: SessionConfig, taps=()) -> SessionArtifacts:
    """Run both state machines lock-step in one process."""
    observer = EveObserver(config.seed, config.eve, config.eve_tie_policy)
    alice = AliceParty(config, observer)
    bob = BobParty(config, observer)
    _pump(alice, bob, (observer, *taps), tamper_transform_for(config))
    return SessionArtifacts(
        result=alice.result,
        alice_result=alice.result,
        bob_result=bob.result,
        alice_key=alice.key,
        bob_key=bob.key,
        alice_final=alice.final_string,
        bob_final=bob.final_string,
        eve_final=observer.string,
        eve_guess=observer.guess,
        rounds=tuple(alice.state.transcript),
    )


def run_local_simulation(config: SessionConfig) -> KeyResult:
    """End-to-end seeded session; returns the (shared) terminal record."""
    return simulate(config).result


def run_party_over_socket(
    party: _Party,
    channel: SocketChannel,
    taps=(),
    transform=None,
) -> KeyResult:
    """Drive one party over a byte-stream channel until it finishes."""

    def send_all(frames: list[Message]) -> None:
        for frame in frames:
            if transform is not None:
                frame = transform(frame)
            for tap in (party.observer, *taps):
                tap.on_wire(frame)
            channel.send(frame)

    send_all(party.start())
    while not party.finished:
        try:
            msg = channel.recv()
        except ChannelClosed:
            party.on_disconnect()
            break
        except FrameError:
            # the peer is not speaking the protocol: abort cleanly
            party.on_disconnect()
            try:
                channel.send(Abort(AbortReason.PROTOCOL_ERROR))
            except OSError:
                pass
            break
        for tap in (party.observer, *taps):
            tap.on_wire(msg)
        send_all(party.on_message(msg))
    return party.result


def replay_eve(
    messages,
    seed: int,
    strategy: EveStrategy = EveStrategy(),
    tie_policy: TiePolicy = TiePolicy.RANDOM_GUESS,
) -> EveObserver:
    """Feed a recorded frame sequence to a fresh adversary reconstruction."""
    observer = EveObserver(seed, strategy, tie_policy)
    for msg in messages:
        observer.on_wire(msg)
    return observer
