"""Universal-hash compression of the reconciled string to the final key.

The hash family is the binary Toeplitz matrix ``M[i][j] = seed[n-1+i-j]``:
an m-by-n matrix with constant diagonals built from a public seed of
``n + m - 1`` bits.  It is 2-universal, linear over GF(2), and applying it
is a plain convolution, so both parties (and the adversary) can evaluate it
cheaply on strings of a few tens of kilobits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bitstream import BitBlock, BitSource


def output_length(n: int, k: float, s: int) -> int:
    """Compressed length: ``floor(n * (1 - k)) - s``, clamped at zero.

    ``k`` is the adversary's per-bit information on the input string and
    ``s`` an additional flat safety margin in bits.
    """
    if not 0.0 <= k <= 1.0:
        raise ValueError("per-bit information k must lie in [0, 1]")
    if n < 0 or s < 0:
        raise ValueError("lengths must be non-negative")
    return max(0, math.floor(n * (1.0 - k)) - s)


@dataclass(frozen=True)
class PaParams:
    """Compression parameters plus the public hash seed."""

    input_len: int
    eve_info_per_bit: float
    safety_bits: int
    hash_seed: BitBlock

    def __post_init__(self) -> None:
        m = output_length(self.input_len, self.eve_info_per_bit, self.safety_bits)
        want = self.input_len + m - 1 if m > 0 else 0
        if self.hash_seed.length != want:
            raise ValueError(
                f"hash seed must hold {want} bits for n={self.input_len}, m={m}"
            )

    @property
    def output_len(self) -> int:
        return output_length(self.input_len, self.eve_info_per_bit, self.safety_bits)

    @classmethod
    def from_lengths(cls, n: int, m: int, seed: BitBlock) -> "PaParams":
        """Rebuild parameters from the public triple ``(n, m, seed)``.

        Anyone reading the wire sees only lengths and the seed; zero assumed
        information with the slack folded into the safety margin reproduces
        exactly the advertised output length.
        """
        if not 0 <= m <= n:
            raise ValueError("output length must lie in [0, input length]")
        return cls(input_len=n, eve_info_per_bit=0.0, safety_bits=n - m, hash_seed=seed)


def toeplitz_hash(block: BitBlock, seed: BitBlock, m: int) -> BitBlock:
    """Multiply by the m-by-n Toeplitz matrix defined by ``seed`` over GF(2)."""
    n = block.length
    if m < 0:
        raise ValueError("output length must be non-negative")
    if m == 0:
        return BitBlock.zeros(0)
    if seed.length != n + m - 1:
        raise ValueError(f"seed holds {seed.length} bits, need {n + m - 1}")
    # out[i] = sum_j seed[n-1+i-j] * in[j] mod 2, i.e. the valid part of the
    # full convolution; float64 keeps the integer dot products exact here.
    conv = np.convolve(
        seed.bits().astype(np.float64), block.bits().astype(np.float64), mode="valid"
    )
    return BitBlock.from_bits((conv.astype(np.int64) & 1).astype(np.uint8))


def apply_hash(block: BitBlock, params: PaParams) -> BitBlock:
    """Compress ``block`` with the public parameters; deterministic in both."""
    if block.length != params.input_len:
        raise ValueError(
            f"input holds {block.length} bits, parameters expect {params.input_len}"
        )
    return toeplitz_hash(block, params.hash_seed, params.output_len)


def draw_hash_seed(rng_public: BitSource, n: int, m: int) -> BitBlock:
    """Draw a fresh public seed of exactly ``n + m - 1`` bits.

    The caller (the session state machine) is responsible for drawing this
    only once reconciliation is complete, so the seed could not have been
    anticipated during the exchange.
    """
    if m <= 0:
        return BitBlock.zeros(0)
    return rng_public.uniform(n + m - 1)
