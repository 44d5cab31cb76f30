"""Eavesdropper strategies: passive wiretap and the active bit-flip tamperer."""

from __future__ import annotations

from dataclasses import dataclass

from .bitstream import BitBlock, BitSource, xor
from .privacy import PaParams, apply_hash


@dataclass(frozen=True)
class EveStrategy:
    """What the adversary does with the initial exchange.

    ``passive`` stores a wiretapped copy with optional local noise gamma;
    ``tamper`` additionally flips each in-transit bit with probability tau.
    ``incorporate_tamper`` controls whether the tamperer folds her own flip
    vector into the copy she keeps (doing so pushes her further from the
    receiver than it pushes the receiver from the sender).
    """

    kind: str = "passive"
    gamma: float = 0.0
    tau: float = 0.0
    incorporate_tamper: bool = False

    def __post_init__(self) -> None:
        if self.kind not in ("passive", "tamper"):
            raise ValueError(f"unknown strategy kind {self.kind!r}")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must lie in [0, 1]")
        if not 0.0 <= self.tau <= 1.0:
            raise ValueError("tau must lie in [0, 1]")
        if self.kind == "tamper" and self.tau == 0.0:
            raise ValueError("tamper strategy requires tau > 0")
        if self.kind == "passive" and self.tau != 0.0:
            raise ValueError("passive strategy requires tau = 0")


def wiretap(r: BitBlock, gamma: float, rng: BitSource) -> BitBlock:
    """Store the transmitted block through a local noise stage of rate gamma."""
    return xor(r, rng.biased(r.length, gamma))


def apply_tamper(r: BitBlock, tau: float, rng: BitSource) -> tuple[BitBlock, BitBlock]:
    """Flip each bit with probability tau; returns the new block and the flips."""
    t = rng.biased(r.length, tau)
    return xor(r, t), t


def eve_best_guess_key(eve_round_strings: list[BitBlock], pa_params: PaParams) -> BitBlock:
    """The adversary's terminal key guess: hash her own final string.

    Given the public compression parameters, applying the same hash to her
    reconstruction of the reconciled string is the most she can extract
    from the transcript.
    """
    if not eve_round_strings:
        raise ValueError("no round strings to guess from")
    return apply_hash(eve_round_strings[-1], pa_params)
