"""Party state machines, monitoring, confirmation and full sessions."""

import math
import socket
import threading

import pytest

from noisekey.adversary import EveStrategy
from noisekey.bitstream import BitBlock, BitSource, agreement_fraction
from noisekey.channel import TiePolicy, bsc_mutual_info, convolve_flip, round_recursion
from noisekey.privacy import output_length, toeplitz_hash
from noisekey.session import (
    AliceParty,
    BobParty,
    EveObserver,
    KeyResult,
    PartyState,
    Phase,
    PhaseError,
    SessionConfig,
    confirm_keys,
    estimate_eve_information,
    monitor_p_total,
    replay_eve,
    run_local_simulation,
    run_party_over_socket,
    simulate,
    tamper_transform_for,
)
from noisekey.transport import SocketChannel


class TestMonitorPTotal:
    def test_exact_expectation_gives_zero(self):
        assert monitor_p_total(0.6, 600, 1000) == pytest.approx(0.0)

    def test_z_scale(self):
        expected = 0.60690688
        sigma = math.sqrt(expected * (1 - expected) / 250_000)
        z = monitor_p_total(expected, int(250_000 * (expected - 2 * sigma)), 250_000)
        assert z == pytest.approx(-2.0, abs=0.01)

    def test_offered_must_be_positive(self):
        with pytest.raises(ValueError):
            monitor_p_total(0.5, 0, 0)

    def test_null_distribution(self):
        # untampered acceptance stays inside 3 sigma for almost every seed
        from noisekey.experiments import measure_ptotal

        inside = sum(
            abs(measure_ptotal(0.0, 100_000, 0.16, seed)["z"]) < 3 for seed in range(40)
        )
        assert inside >= 39


class TestEstimateEveInformation:
    def test_full_knowledge(self):
        s = BitSource(1, 0).uniform(1000)
        assert estimate_eve_information(s, s) == 1.0

    def test_independent_strings_know_nothing(self):
        a = BitSource(2, 0).uniform(10_000)
        b = BitSource(2, 1).uniform(10_000)
        assert estimate_eve_information(a, b) <= 0.01

    def test_anti_correlation_counts_as_knowledge(self):
        s = BitSource(3, 0).uniform(1000)
        assert estimate_eve_information(~s, s) == 1.0

    def test_round_one_operating_point_value(self):
        assert bsc_mutual_info(0.1498948) == pytest.approx(0.390, abs=1e-3)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            estimate_eve_information(BitBlock.zeros(0), BitBlock.zeros(0))


class TestConfirmKeys:
    def test_identical_keys_confirm(self):
        key = BitSource(4, 0).uniform(500)
        seed = BitSource(4, 4).uniform(500 + 64 - 1)
        digest = toeplitz_hash(key, seed, 64)
        assert confirm_keys(key, digest, seed)

    def test_single_bit_difference_detected(self):
        # m=16 digests over 1000 trials: detection well above 99 percent
        rng = BitSource(5, 0)
        detected = 0
        for _ in range(1000):
            key = rng.uniform(200)
            flipped = key.bits().copy()
            flipped[int(rng.uniform(8).bits()[0])] ^= 1  # flip a pseudo-random spot
            other = BitBlock.from_bits(flipped)
            seed = rng.uniform(200 + 16 - 1)
            digest = toeplitz_hash(key, seed, 16)
            if not confirm_keys(other, digest, seed):
                detected += 1
        assert detected >= 990


class TestPartyState:
    def test_forward_only(self):
        st = PartyState(role="alice")
        st.advance(Phase.EXCHANGED)
        with pytest.raises(PhaseError):
            st.advance(Phase.INIT)

    def test_abort_from_anywhere(self):
        st = PartyState(role="bob")
        st.advance(Phase.AMPLIFIED)
        st.advance(Phase.ABORTED)
        assert st.phase is Phase.ABORTED


class TestSessionConfig:
    def test_rejects_guaranteed_empty_key(self):
        with pytest.raises(ValueError):
            SessionConfig(initial_bits=8, rounds=4)

    def test_digest_changes_with_any_field(self):
        base = SessionConfig(seed=1)
        assert base.digest() != SessionConfig(seed=2).digest()
        assert base.digest() != SessionConfig(seed=1, rounds=3).digest()

    def test_noise_domain(self):
        with pytest.raises(ValueError):
            SessionConfig(alpha=0.0)


SMALL = dict(initial_bits=100_000, seed=11)


class TestLocalSimulation:
    def test_end_to_end_determinism(self):
        a = run_local_simulation(SessionConfig(**SMALL))
        b = run_local_simulation(SessionConfig(**SMALL))
        assert a == b
        assert a.to_json() == b.to_json()

    def test_both_parties_agree_exactly(self):
        art = simulate(SessionConfig(**SMALL))
        assert art.alice_result == art.bob_result
        assert art.alice_key == art.bob_key
        assert art.alice_final == art.bob_final

    def test_result_contract_on_success(self):
        art = simulate(SessionConfig(**SMALL))
        res = art.result
        assert res.status == "ok"
        assert not res.tamper_alarm
        assert res.pre_pa_len == art.alice_final.length
        assert res.final_key.length == output_length(res.pre_pa_len, res.k_estimate, 64)
        assert len(res.p_total_series) == 4
        assert res.key_rate == pytest.approx(
            (1 - res.k_estimate) * res.pre_pa_len / 100_000
        )
        assert res.kappa_met

    def test_near_noiseless_limit_matches_recursion(self):
        cfg = SessionConfig(initial_bits=500_000, alpha=0.001, beta=0.001, seed=13)
        art = simulate(cfg)
        steps = round_recursion(convolve_flip(0.001, 0.001), 2, 4, 500_000)
        assert art.result.pre_pa_len == pytest.approx(steps[-1].expected_len, rel=0.01)
        assert art.alice_final == art.bob_final

    def test_pre_pa_matches_recursion_at_default_point(self):
        art = simulate(SessionConfig(initial_bits=500_000, seed=17))
        steps = round_recursion(convolve_flip(0.16, 0.16), 2, 4, 500_000)
        assert art.result.pre_pa_len == pytest.approx(steps[-1].expected_len, rel=0.03)

    def test_tamper_raises_alarm_and_withholds_key(self):
        cfg = SessionConfig(**SMALL, eve=EveStrategy("tamper", tau=0.03))
        art = simulate(cfg)
        res = art.result
        assert res.status == "alarm"
        assert res.tamper_alarm
        assert res.final_key.length == 0
        assert res.p_total_series[0].z < -10 * math.sqrt(100_000 / 500_000) * 0.9
        # rounds still complete, so the rate diagnostics stay measured
        assert res.pre_pa_len > 0
        assert res.key_rate > 0
        assert art.alice_result == art.bob_result

    def test_kappa_not_met_is_flagged_not_fatal(self):
        cfg = SessionConfig(initial_bits=100_000, rounds=2, seed=19)
        res = run_local_simulation(cfg)
        assert not res.kappa_met  # two rounds leave ~3e-4 residual per bit

    def test_bob_drives_retention(self):
        # Alice's final string is reconstructible from her own message draws
        # plus the published accept masks alone
        cfg = SessionConfig(**SMALL)
        masks = []

        class MaskTap:
            def on_wire(self, msg):
                from noisekey.transport import AcceptMask

                if isinstance(msg, AcceptMask):
                    masks.append(msg.mask)

        art = simulate(cfg, taps=(MaskTap(),))
        replay = BitSource(cfg.seed, 3)
        replay.uniform(cfg.initial_bits)  # initial exchange draw
        current_len = cfg.initial_bits
        string = None
        for mask in masks:
            c = replay.uniform(current_len // 2)
            string = c.select(mask)
            current_len = string.length
        assert string == art.alice_final

    def test_post_pa_decorrelation_with_noisy_listener(self):
        # listener noise keeps her pre-PA error above 5 percent: her hashed
        # guess then agrees with the key only at coin-flip level
        cfg = SessionConfig(
            initial_bits=400_000, rounds=4, seed=23, eve=EveStrategy("passive", gamma=0.25)
        )
        art = simulate(cfg)
        assert 1 - art.result.eve_agreement_prepa >= 0.05
        assert art.result.final_key.length >= 1000
        sigma = math.sqrt(0.25 / art.result.final_key.length)
        assert art.result.eve_key_agreement == pytest.approx(0.5, abs=4 * sigma)

    def test_session_nonce_freshens_public_seed_only(self):
        a = simulate(SessionConfig(**SMALL, session_nonce=0))
        b = simulate(SessionConfig(**SMALL, session_nonce=1))
        assert a.alice_final == b.alice_final  # same noise and messages
        assert a.alice_key != b.alice_key  # different public hash seed

    def test_alternating_roles_still_agree(self):
        art = simulate(SessionConfig(**SMALL, alternate_roles=True))
        assert art.result.status == "ok"
        assert art.alice_key == art.bob_key
        assert art.alice_final == art.bob_final

    def test_listener_stays_behind_receiver_every_round(self):
        # the cascaded advantage: under the analytic tie convention the
        # listener's per-round error stays strictly above the receiver's.
        # Her raw coin-committed agreement improves across rounds (both
        # parties learn, the receiver faster), and at round one it even
        # sits below the receiver's error, which is exactly the documented
        # divergence between the two tie semantics.
        from noisekey.distill import eve_error_fraction, run_round

        n = 400_000
        src = BitSource(59, 3)
        r = src.uniform(n)
        alice = r ^ BitSource(59, 0).biased(n, 0.16)
        bob = r ^ BitSource(59, 1).biased(n, 0.16)
        eve = r  # gamma = 0
        eve_src = BitSource(59, 2)
        for round_no in range(4):
            tr = run_round(alice, bob, eve, 2, TiePolicy.RANDOM_GUESS, src, eve_src)
            bob_err = 1 - agreement_fraction(tr.bob_next, tr.alice_next)
            eve_err = eve_error_fraction(
                tr.alice_next, tr.eve_next, tr.eve_tie_mask, TiePolicy.COUNT_AS_ERROR
            )
            assert eve_err > bob_err, f"round {round_no + 1}"
            alice, bob, eve = tr.alice_next, tr.bob_next, tr.eve_next


class TestEveObserver:
    def test_replay_reproduces_in_process_adversary(self):
        frames = []

        class Recorder:
            def on_wire(self, msg):
                frames.append(msg)

        cfg = SessionConfig(**SMALL)
        art = simulate(cfg, taps=(Recorder(),))
        observer = replay_eve(frames, cfg.seed, cfg.eve, cfg.eve_tie_policy)
        assert observer.string == art.eve_final
        assert observer.guess == art.eve_guess

    def test_replay_with_tamper_recovers_the_original_block(self):
        frames = []

        class Recorder:
            def on_wire(self, msg):
                frames.append(msg)

        cfg = SessionConfig(**SMALL, eve=EveStrategy("tamper", tau=0.02))
        art = simulate(cfg, taps=(Recorder(),))
        observer = replay_eve(frames, cfg.seed, cfg.eve, cfg.eve_tie_policy)
        assert observer.string == art.eve_final

    def test_incorporating_tamper_raises_eve_error(self):
        base = dict(initial_bits=200_000, seed=29)
        out = simulate(SessionConfig(**base, eve=EveStrategy("tamper", tau=0.04)))
        inc = simulate(
            SessionConfig(
                **base, eve=EveStrategy("tamper", tau=0.04, incorporate_tamper=True)
            )
        )
        assert inc.result.eve_agreement_prepa < out.result.eve_agreement_prepa


class TestAbortPaths:
    def test_config_mismatch_aborts_with_status(self):
        observer_a = EveObserver(1, EveStrategy())
        observer_b = EveObserver(2, EveStrategy())
        alice = AliceParty(SessionConfig(initial_bits=10_000, seed=1), observer_a)
        bob = BobParty(SessionConfig(initial_bits=10_000, seed=2), observer_b)
        (hello,) = bob.start()
        frames = alice.on_message(hello)
        assert alice.finished and alice.result.status == "config-mismatch"
        bob.on_message(frames[0])
        assert bob.finished and bob.result.status == "config-mismatch"

    def test_disconnect_mid_session_is_protocol_error(self):
        observer = EveObserver(1, EveStrategy())
        alice = AliceParty(SessionConfig(initial_bits=10_000, seed=1), observer)
        alice.on_disconnect()
        assert alice.result.status == "protocol-error"
        assert alice.result.final_key.length == 0

    def test_garbage_bytes_from_peer_abort_cleanly(self):
        cfg = SessionConfig(initial_bits=10_000, seed=3)
        a_sock, b_sock = socket.socketpair()
        alice = AliceParty(cfg, EveObserver(cfg.seed, EveStrategy()))
        done = {}

        def drive():
            done["res"] = run_party_over_socket(alice, SocketChannel(a_sock))

        worker = threading.Thread(target=drive)
        worker.start()
        b_sock.sendall(b"this is not a frame at all............")
        worker.join(timeout=20)
        b_sock.close()
        assert done["res"].status == "protocol-error"

    def test_observer_ignores_misaligned_frames(self):
        from noisekey.transport import AcceptMask, MaskedPairs, PaSeed, RandomBlock

        obs = EveObserver(1, EveStrategy())
        obs.on_wire(AcceptMask(1, BitBlock.ones(4)))  # mask before any block
        obs.on_wire(RandomBlock(BitBlock.zeros(8)))
        obs.on_wire(MaskedPairs(1, 2, BitBlock.zeros(100)))  # longer than her string
        obs.on_wire(AcceptMask(1, BitBlock.ones(50)))
        obs.on_wire(PaSeed(8, 20, BitBlock.zeros(27)))  # m > n
        assert obs.round_strings == []
        assert obs.guess is None

    def test_key_check_before_amplification_is_rejected(self):
        # compression must precede verification: the hash seed draw is
        # gated on the reconciled phase
        from noisekey.transport import Abort, KeyCheck

        observer = EveObserver(1, EveStrategy())
        bob = BobParty(SessionConfig(initial_bits=10_000, seed=1), observer)
        bob.start()
        out = bob.on_message(KeyCheck(BitBlock.zeros(64)))
        assert isinstance(out[0], Abort)
        assert bob.result.status == "protocol-error"


class TestSocketTransparency:
    def test_socket_run_matches_local_run(self):
        cfg = SessionConfig(initial_bits=100_000, seed=31)
        local = run_local_simulation(cfg)

        a_sock, b_sock = socket.socketpair()
        observer_a = EveObserver(cfg.seed, cfg.eve, cfg.eve_tie_policy)
        observer_b = EveObserver(cfg.seed, cfg.eve, cfg.eve_tie_policy)
        alice = AliceParty(cfg, observer_a)
        bob = BobParty(cfg, observer_b)
        results = {}

        def run(party, sock, transform=None):
            channel = SocketChannel(sock)
            results[party.role] = run_party_over_socket(party, channel, transform=transform)

        t = threading.Thread(target=run, args=(bob, b_sock))
        t.start()
        run(alice, a_sock, tamper_transform_for(cfg))
        t.join(timeout=30)
        assert results["alice"].to_json() == local.to_json()
        assert results["bob"].to_json() == local.to_json()
