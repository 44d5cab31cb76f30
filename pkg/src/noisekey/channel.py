"""Closed-form error rates of the simulated binary symmetric channels.

Cascading two independent bit-flip stages with rates p and q yields a
composite flip rate ``p + q - 2pq``; the repetition-coded virtual channel
then concentrates the legitimate parties' advantage.  The functions here
evaluate those quantities exactly so Monte Carlo runs can be checked
against them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple


class TiePolicy(str, Enum):
    """Scoring rule for the listener's majority vote on an even split.

    ``COUNT_AS_ERROR`` charges every split group as a decoding error,
    ``HALF_CREDIT`` charges half, and ``RANDOM_GUESS`` resolves the split
    with a fair coin (the same expectation as half credit, but realised
    bit by bit in simulation).
    """

    COUNT_AS_ERROR = "count-as-error"
    HALF_CREDIT = "half-credit"
    RANDOM_GUESS = "random-guess"


@dataclass(frozen=True)
class NoiseParams:
    """Local bit-flip probabilities for the three parties plus tamper rate."""

    alpha: float
    beta: float
    gamma: float = 0.0
    tau: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie strictly inside (0, 1)")
        if not 0.0 < self.beta < 1.0:
            raise ValueError("beta must lie strictly inside (0, 1)")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must lie in [0, 1]")
        if not 0.0 <= self.tau <= 1.0:
            raise ValueError("tau must lie in [0, 1]")


def _check_prob(value: float, name: str) -> None:
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name}={value} outside [0, 1]")


def convolve_flip(p: float, q: float) -> float:
    """Flip rate of two cascaded binary symmetric channels."""
    _check_prob(p, "p")
    _check_prob(q, "q")
    return p + q - 2.0 * p * q


def bob_error_n(epsilon: float, n_rep: int) -> float:
    """Conditional error of the unanimity decoder, given it accepted."""
    _check_prob(epsilon, "epsilon")
    if n_rep < 1:
        raise ValueError("repetition factor must be at least 1")
    p_err = epsilon**n_rep
    p_ok = (1.0 - epsilon) ** n_rep
    return p_err / (p_ok + p_err)


def p_total(epsilon: float, n_rep: int) -> float:
    """Probability the unanimity decoder accepts an N-bit group."""
    _check_prob(epsilon, "epsilon")
    if n_rep < 1:
        raise ValueError("repetition factor must be at least 1")
    return (1.0 - epsilon) ** n_rep + epsilon**n_rep


def joint_weights(alpha: float, beta: float, gamma: float = 0.0):
    """Per-position joint law of (receiver flip, listener flip).

    The receiver flip is the xor of the sender's and receiver's local noise
    bits; the listener flip is the xor of the sender's and listener's.  For
    ``beta == alpha`` and ``gamma == 0`` this reduces to
    ``((1-a)^2, a^2, a(1-a), a(1-a))``.
    """
    _check_prob(alpha, "alpha")
    _check_prob(beta, "beta")
    _check_prob(gamma, "gamma")
    a, b, g = alpha, beta, gamma
    p00 = (1 - a) * (1 - b) * (1 - g) + a * b * g
    p01 = (1 - a) * (1 - b) * g + a * b * (1 - g)
    p10 = (1 - a) * b * (1 - g) + a * (1 - b) * g
    p11 = (1 - a) * b * g + a * (1 - b) * (1 - g)
    return p00, p01, p10, p11


def eve_error_n(
    alpha: float,
    beta: float,
    gamma: float,
    n_rep: int,
    policy: TiePolicy = TiePolicy.COUNT_AS_ERROR,
) -> float:
    """Majority-vote error of the listener within accepted groups.

    Sums the binomial weights of listener flip counts ``w >= ceil(N/2)``
    over both accepted receiver outcomes (all-correct and all-flipped),
    normalised by the acceptance probability.  The exact even-split term
    ``w == N/2`` is charged fully, half, or in expectation half, according
    to the tie policy.
    """
    if n_rep < 1:
        raise ValueError("repetition factor must be at least 1")
    p00, p01, p10, p11 = joint_weights(alpha, beta, gamma)
    total = (p00 + p01) ** n_rep + (p10 + p11) ** n_rep
    acc = 0.0
    for w in range(math.ceil(n_rep / 2), n_rep + 1):
        term = math.comb(n_rep, w) * (
            p00 ** (n_rep - w) * p01**w + p10 ** (n_rep - w) * p11**w
        )
        if 2 * w == n_rep and policy is not TiePolicy.COUNT_AS_ERROR:
            term *= 0.5
        acc += term
    return acc / total


def tampered_epsilon(params: NoiseParams, mode: str = "exact") -> float:
    """Receiver channel error once a tamper stage of rate tau is inserted.

    ``mode="paper-linear"`` uses the first-order expression
    ``epsilon + tau * (1 - 2 * alpha)``; ``mode="exact"`` convolves the
    three stages.  They differ in the second order of tau.
    """
    eps = convolve_flip(params.alpha, params.beta)
    if mode == "paper-linear":
        return eps + params.tau * (1.0 - 2.0 * params.alpha)
    if mode == "exact":
        return convolve_flip(convolve_flip(params.beta, params.tau), params.alpha)
    raise ValueError(f"unknown mode {mode!r}")


def binary_entropy(p: float) -> float:
    """Entropy in bits of a Bernoulli(p) variable, with 0*log(0) = 0."""
    _check_prob(p, "p")
    if p in (0.0, 1.0):
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


def bsc_mutual_info(err: float) -> float:
    """Per-bit mutual information across a BSC with uniform input."""
    return 1.0 - binary_entropy(err)


class RoundStep(NamedTuple):
    epsilon: float
    p_total: float
    expected_len: float


def round_recursion(
    epsilon0: float, n_rep: int, rounds: int, initial_bits: int
) -> list[RoundStep]:
    """Expected error/acceptance/length trajectory over cascaded rounds.

    Each round consumes the current string in N-bit groups, keeps a group
    with the acceptance probability of the current error rate and maps the
    error rate through the unanimity decoder.
    """
    if rounds < 1:
        raise ValueError("need at least one round")
    _check_prob(epsilon0, "epsilon0")
    eps = epsilon0
    length = float(initial_bits)
    steps: list[RoundStep] = []
    for _ in range(rounds):
        groups = math.floor(length / n_rep)
        pt = p_total(eps, n_rep)
        length = groups * pt
        eps = bob_error_n(eps, n_rep)
        steps.append(RoundStep(eps, pt, length))
    return steps


@dataclass(frozen=True)
class ChannelPoint:
    """All analytic quantities for one parameter set and repetition factor."""

    epsilon: float
    delta: float
    n_rep: int
    epsilon_n: float
    delta_n: float
    p_total: float
    p00: float
    p01: float
    p10: float
    p11: float


def channel_point(
    params: NoiseParams,
    n_rep: int = 2,
    policy: TiePolicy = TiePolicy.COUNT_AS_ERROR,
) -> ChannelPoint:
    eps = convolve_flip(params.alpha, params.beta)
    delta = convolve_flip(params.alpha, params.gamma)
    p00, p01, p10, p11 = joint_weights(params.alpha, params.beta, params.gamma)
    return ChannelPoint(
        epsilon=eps,
        delta=delta,
        n_rep=n_rep,
        epsilon_n=bob_error_n(eps, n_rep),
        delta_n=eve_error_n(params.alpha, params.beta, params.gamma, n_rep, policy),
        p_total=p_total(eps, n_rep),
        p00=p00,
        p01=p01,
        p10=p10,
        p11=p11,
    )
