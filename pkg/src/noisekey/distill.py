"""Bit-level mechanics of one virtual-channel distillation round.

The encoder masks a fresh random bit onto each consecutive N-bit group of
its stored string; the receiver unmasks with its own string and keeps a
group only when the result is unanimous, while the listener takes a
majority vote over every accepted group.  Groups never overlap and
leftover bits beyond the last full group are discarded.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bitstream import BitBlock, BitSource, xor
from .channel import TiePolicy


@dataclass(frozen=True)
class MaskedBlock:
    """N-fold repeated message: group j carries the source bits xor C_j."""

    n_rep: int
    payload: BitBlock

    def __post_init__(self) -> None:
        if self.n_rep < 1:
            raise ValueError("repetition factor must be at least 1")
        if self.payload.length % self.n_rep:
            raise ValueError("payload length must be divisible by n_rep")

    @property
    def groups(self) -> int:
        return self.payload.length // self.n_rep


@dataclass(frozen=True)
class RoundTranscript:
    """Everything one distillation round produced, for all three parties."""

    accept_mask: BitBlock
    alice_next: BitBlock
    bob_next: BitBlock
    eve_next: BitBlock
    eve_tie_mask: BitBlock
    accepted: int
    offered: int

    def __post_init__(self) -> None:
        if not (
            self.alice_next.length
            == self.bob_next.length
            == self.eve_next.length
            == self.accepted
        ):
            raise ValueError("per-party strings must all have the accepted length")
        if self.accepted != self.accept_mask.popcount() or self.accepted > self.offered:
            raise ValueError("accepted count inconsistent with mask")


def encode_round(x: BitBlock, c: BitBlock, n_rep: int) -> MaskedBlock:
    """Mask each consecutive N-bit group of ``x`` with one bit of ``c``."""
    if x.length < c.length * n_rep:
        raise ValueError(
            f"need {c.length * n_rep} source bits for {c.length} groups, have {x.length}"
        )
    used = c.length * n_rep
    groups = x.bits()[:used].reshape(c.length, n_rep)
    masked = groups ^ c.bits()[:, None]
    return MaskedBlock(n_rep, BitBlock.from_bits(masked.reshape(-1)))


def bob_decode(masked: MaskedBlock, y: BitBlock) -> tuple[BitBlock, BitBlock]:
    """Unanimity decode: accept a group iff the unmasked bits all agree.

    Returns the per-group accept mask and the decoded bits of accepted
    groups (their common value).
    """
    plen = masked.payload.length
    if y.length < plen:
        raise ValueError(f"receiver string too short: {y.length} < {plen}")
    d = (masked.payload.bits() ^ y.bits()[:plen]).reshape(-1, masked.n_rep)
    accepted = (d == d[:, :1]).all(axis=1)
    decoded = d[accepted, 0]
    return BitBlock.from_bits(accepted.astype(np.uint8)), BitBlock.from_bits(decoded)


def eve_decode(
    masked: MaskedBlock,
    z: BitBlock,
    accept_mask: BitBlock,
    policy: TiePolicy = TiePolicy.COUNT_AS_ERROR,
    rng: BitSource | None = None,
) -> tuple[BitBlock, BitBlock]:
    """Majority-vote decode over accepted groups only.

    Even splits are flagged in the returned tie mask; under
    ``RANDOM_GUESS`` the emitted bit is a fair coin from ``rng``, under the
    other policies a fixed 0 placeholder is emitted and the tie mask drives
    the scoring (see :func:`eve_error_fraction`).
    """
    plen = masked.payload.length
    if z.length < plen:
        raise ValueError(f"listener string too short: {z.length} < {plen}")
    if accept_mask.length != masked.groups:
        raise ValueError("accept mask does not cover the offered groups")
    d = (masked.payload.bits() ^ z.bits()[:plen]).reshape(-1, masked.n_rep)
    keep = accept_mask.bits().astype(bool)
    sums = d[keep].sum(axis=1)
    bits = (2 * sums > masked.n_rep).astype(np.uint8)
    ties = 2 * sums == masked.n_rep
    if policy is TiePolicy.RANDOM_GUESS and ties.any():
        if rng is None:
            raise ValueError("RANDOM_GUESS tie policy needs an rng")
        bits[ties] = rng.uniform(int(ties.sum())).bits()
    return BitBlock.from_bits(bits), BitBlock.from_bits(ties.astype(np.uint8))


def eve_error_fraction(
    reference: BitBlock,
    eve_bits: BitBlock,
    tie_mask: BitBlock,
    policy: TiePolicy,
) -> float:
    """Score the listener's decode against a reference under a tie policy."""
    if not reference.length:
        raise ValueError("cannot score against an empty reference")
    if not reference.length == eve_bits.length == tie_mask.length:
        raise ValueError("scoring inputs must have equal lengths")
    ties = tie_mask.bits().astype(bool)
    wrong = (reference.bits() != eve_bits.bits()) & ~ties
    n_wrong = int(wrong.sum())
    n_ties = int(ties.sum())
    if policy is TiePolicy.COUNT_AS_ERROR:
        return (n_wrong + n_ties) / reference.length
    if policy is TiePolicy.HALF_CREDIT:
        return (n_wrong + 0.5 * n_ties) / reference.length
    # random-guess coins are already committed in eve_bits
    return (reference.bits() != eve_bits.bits()).sum() / reference.length


def run_round(
    alice: BitBlock,
    bob: BitBlock,
    eve: BitBlock,
    n_rep: int,
    policy: TiePolicy,
    rng: BitSource,
    eve_rng: BitSource | None = None,
) -> RoundTranscript:
    """Execute one full round: draw C, encode, unanimity- and majority-decode.

    ``rng`` supplies the encoder's fresh message bits; ``eve_rng`` (when
    the policy needs coins) is the listener's own source so her randomness
    never entangles with the encoder's stream.
    """
    if not alice.length == bob.length == eve.length:
        raise ValueError("round inputs must have equal lengths")
    c = rng.uniform(alice.length // n_rep)
    masked = encode_round(alice, c, n_rep)
    accept_mask, bob_next = bob_decode(masked, bob)
    eve_next, tie_mask = eve_decode(masked, eve, accept_mask, policy, eve_rng or rng)
    return RoundTranscript(
        accept_mask=accept_mask,
        alice_next=c.select(accept_mask),
        bob_next=bob_next,
        eve_next=eve_next,
        eve_tie_mask=tie_mask,
        accepted=accept_mask.popcount(),
        offered=masked.groups,
    )
