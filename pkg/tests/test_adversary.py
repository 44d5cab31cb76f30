"""Adversary strategies: wiretap statistics, tampering, terminal key guess."""

import math

import pytest

from noisekey.adversary import EveStrategy, apply_tamper, eve_best_guess_key, wiretap
from noisekey.bitstream import BitBlock, BitSource, agreement_fraction, xor
from noisekey.channel import NoiseParams, TiePolicy, p_total, tampered_epsilon
from noisekey.distill import bob_decode, encode_round, eve_decode, eve_error_fraction
from noisekey.privacy import PaParams, draw_hash_seed


class TestStrategyInvariants:
    def test_tamper_needs_positive_rate(self):
        with pytest.raises(ValueError):
            EveStrategy("tamper", tau=0.0)

    def test_passive_needs_zero_rate(self):
        with pytest.raises(ValueError):
            EveStrategy("passive", tau=0.1)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            EveStrategy("active")


class TestWiretap:
    def test_perfect_wiretap(self):
        r = BitSource(1, 3).uniform(1000)
        assert wiretap(r, 0.0, BitSource(1, 2)) == r

    def test_total_noise(self):
        n = 100_000
        r = BitSource(2, 3).uniform(n)
        z = wiretap(r, 0.5, BitSource(2, 2))
        assert agreement_fraction(z, r) == pytest.approx(0.5, abs=4 * math.sqrt(0.25 / n))

    def test_partial_noise(self):
        n = 100_000
        r = BitSource(3, 3).uniform(n)
        z = wiretap(r, 0.1, BitSource(3, 2))
        assert agreement_fraction(z, r) == pytest.approx(0.9, abs=0.004)


class TestApplyTamper:
    def test_zero_rate_is_identity(self):
        r = BitSource(4, 3).uniform(256)
        tampered, t = apply_tamper(r, 0.0, BitSource(4, 5))
        assert tampered == r
        assert t == BitBlock.zeros(256)

    def test_full_rate_complements(self):
        r = BitSource(5, 3).uniform(256)
        tampered, t = apply_tamper(r, 1.0, BitSource(5, 5))
        assert tampered == ~r
        assert t == BitBlock.ones(256)

    def test_downstream_error_follows_exact_convolution(self):
        # the receiver channel error under tampering tracks the exact
        # three-stage convolution, not the first-order expression
        n, seed = 500_000, 61
        r = BitSource(seed, 3).uniform(n)
        x = xor(r, BitSource(seed, 0).biased(n, 0.16))
        r_wire, _ = apply_tamper(r, 0.03, BitSource(seed, 5))
        y = xor(r_wire, BitSource(seed, 1).biased(n, 0.16))
        err = 1 - agreement_fraction(x, y)
        exact = tampered_epsilon(NoiseParams(0.16, 0.16, tau=0.03), "exact")
        linear = tampered_epsilon(NoiseParams(0.16, 0.16, tau=0.03), "paper-linear")
        assert err == pytest.approx(exact, abs=0.004)
        assert abs(err - exact) < abs(err - linear)


def one_round_eve_error(tau, incorporate, seed, n_groups=200_000, alpha=0.16):
    n = 2 * n_groups
    src = BitSource(seed, 3)
    r = src.uniform(n)
    x = xor(r, BitSource(seed, 0).biased(n, alpha))
    r_wire, t = apply_tamper(r, tau, BitSource(seed, 5))
    y = xor(r_wire, BitSource(seed, 1).biased(n, alpha))
    z = r_wire if incorporate else r  # gamma = 0 either way
    c = src.uniform(n_groups)
    masked = encode_round(x, c, 2)
    mask, decoded = bob_decode(masked, y)
    bits, ties = eve_decode(masked, z, mask, TiePolicy.COUNT_AS_ERROR)
    ref_alice = c.select(mask)
    return (
        eve_error_fraction(ref_alice, bits, ties, TiePolicy.COUNT_AS_ERROR),
        1 - agreement_fraction(decoded, ref_alice),
        mask.popcount() / n_groups,
    )


class TestTamperEffects:
    @pytest.mark.parametrize("tau", [0.01, 0.02, 0.03, 0.04, 0.05])
    def test_incorporating_the_tamper_hurts_eve(self, tau):
        # folding her own flips into her stored copy pushes the listener
        # further from the sender, and leaves her error above the receiver's
        vs_c_out, bob_err, _ = one_round_eve_error(tau, False, seed=71)
        vs_c_in, _, _ = one_round_eve_error(tau, True, seed=71)
        assert vs_c_in > vs_c_out
        assert vs_c_in > bob_err

    def test_acceptance_drops_monotonically_with_tau(self):
        taus = [0.0, 0.01, 0.02, 0.03, 0.04, 0.05]
        measured = []
        for tau in taus:
            _, _, acc = one_round_eve_error(tau, False, seed=73, n_groups=250_000)
            expected = p_total(
                tampered_epsilon(NoiseParams(0.16, 0.16, tau=tau), "exact"), 2
            )
            sigma = math.sqrt(expected * (1 - expected) / 250_000)
            assert acc == pytest.approx(expected, abs=4 * sigma)
            measured.append(acc)
        assert measured == sorted(measured, reverse=True)


class TestBestGuessKey:
    def _params(self, n, m, seed):
        hash_seed = draw_hash_seed(BitSource(seed, 4), n, m)
        return PaParams.from_lengths(n, m, hash_seed)

    def test_degenerate_leak(self):
        n, m = 200, 64
        s = BitSource(81, 0).uniform(n)
        params = self._params(n, m, 81)
        from noisekey.privacy import apply_hash

        assert eve_best_guess_key([s], params) == apply_hash(s, params)

    def test_independent_string_guesses_nothing(self):
        n, m = 10_000, 4_000
        alice = BitSource(82, 0).uniform(n)
        eve = BitSource(82, 1).uniform(n)
        params = self._params(n, m, 82)
        from noisekey.privacy import apply_hash

        agree = agreement_fraction(eve_best_guess_key([eve], params), apply_hash(alice, params))
        assert agree == pytest.approx(0.5, abs=4 * math.sqrt(0.25 / m))

    def test_uses_final_round_string(self):
        n, m = 100, 32
        early = BitSource(83, 0).uniform(n)
        final = BitSource(83, 1).uniform(n)
        params = self._params(n, m, 83)
        assert eve_best_guess_key([early, final], params) == eve_best_guess_key([final], params)

    def test_empty_history_rejected(self):
        with pytest.raises(ValueError):
            eve_best_guess_key([], self._params(10, 5, 84))
