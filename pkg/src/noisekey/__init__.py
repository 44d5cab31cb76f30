"""Channel-independent secret-key distribution via locally injected noise.

Two legitimate parties exchange a random block over a noiseless channel,
degrade their own copies with independent local noise, distill a shared
secret through cascaded repetition-coded virtual-channel rounds, watch the
acceptance fraction for tampering, and compress the reconciled string to a
final key with a public universal hash.
"""

from .adversary import EveStrategy, apply_tamper, eve_best_guess_key, wiretap
from .bitstream import (
    BitBlock,
    BitSource,
    InsufficientDataError,
    UniversalTestResult,
    agreement_fraction,
    gen_biased_bits,
    gen_uniform_bits,
    rng_health_test,
    xor,
)
from .channel import (
    ChannelPoint,
    NoiseParams,
    TiePolicy,
    binary_entropy,
    bob_error_n,
    bsc_mutual_info,
    channel_point,
    convolve_flip,
    eve_error_n,
    joint_weights,
    p_total,
    round_recursion,
    tampered_epsilon,
)
from .distill import (
    MaskedBlock,
    RoundTranscript,
    bob_decode,
    encode_round,
    eve_decode,
    eve_error_fraction,
    run_round,
)
from .privacy import PaParams, apply_hash, draw_hash_seed, output_length, toeplitz_hash
from .session import (
    EveObserver,
    KeyResult,
    SessionConfig,
    confirm_keys,
    estimate_eve_information,
    monitor_p_total,
    replay_eve,
    run_local_simulation,
    simulate,
)

__version__ = "0.1.0"

__all__ = [
    "BitBlock",
    "BitSource",
    "ChannelPoint",
    "EveObserver",
    "EveStrategy",
    "InsufficientDataError",
    "KeyResult",
    "MaskedBlock",
    "NoiseParams",
    "PaParams",
    "RoundTranscript",
    "SessionConfig",
    "TiePolicy",
    "UniversalTestResult",
    "agreement_fraction",
    "apply_hash",
    "apply_tamper",
    "binary_entropy",
    "bob_decode",
    "bob_error_n",
    "bsc_mutual_info",
    "channel_point",
    "confirm_keys",
    "convolve_flip",
    "draw_hash_seed",
    "encode_round",
    "estimate_eve_information",
    "eve_best_guess_key",
    "eve_decode",
    "eve_error_fraction",
    "eve_error_n",
    "gen_biased_bits",
    "gen_uniform_bits",
    "joint_weights",
    "monitor_p_total",
    "output_length",
    "p_total",
    "replay_eve",
    "rng_health_test",
    "round_recursion",
    "run_local_simulation",
    "run_round",
    "simulate",
    "tampered_epsilon",
    "toeplitz_hash",
    "wiretap",
    "xor",
]
