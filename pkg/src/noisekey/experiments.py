"""Sweep engines behind the CLI figure commands, plus CSV emission.

Each sweep point derives its own seed from (master seed, point index,
repetition index), so rows are reproducible independently of execution
order and a worker pool changes nothing about the output.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .adversary import EveStrategy, apply_tamper
from .bitstream import (
    STREAM_ALICE_MESSAGE,
    STREAM_ALICE_NOISE,
    STREAM_BOB_NOISE,
    STREAM_EVE,
    STREAM_TAMPER,
    BitSource,
    agreement_fraction,
    xor,
)
from .channel import TiePolicy, bob_error_n, convolve_flip, eve_error_n, p_total
from .distill import bob_decode, encode_round, eve_error_fraction, run_round
from .session import SessionConfig, simulate


@dataclass(frozen=True)
class SweepSpec:
    """A one-variable sweep: which knob, its values, and the sampling size."""

    variable: str
    values: tuple[float, ...]
    samples: int
    repetitions: int = 1

    def __post_init__(self) -> None:
        if self.variable not in ("alpha", "tau"):
            raise ValueError("sweep variable must be alpha or tau")
        if self.samples < 1_000:
            raise ValueError("need at least 1000 samples per point")
        if self.repetitions < 1:
            raise ValueError("repetitions must be positive")
        lo, hi = (0.0, 0.5) if self.variable == "alpha" else (0.0, 1.0)
        for v in self.values:
            if not lo <= v <= hi:
                raise ValueError(f"{self.variable}={v} outside [{lo}, {hi}]")


def derive_point_seed(master: int, point: int, rep: int) -> int:
    """Stable per-point seed so sweep rows never share randomness."""
    seq = np.random.SeedSequence(entropy=master, spawn_key=(point, rep))
    return int(seq.generate_state(1, np.uint64)[0])


# -- one-round error-rate measurement (first figure) ---------------------------


def measure_virtual_channel(
    alpha: float,
    samples: int,
    seed: int,
    tie_policy: TiePolicy,
    beta: float | None = None,
    gamma: float = 0.0,
    n_rep: int = 2,
) -> dict:
    """Monte Carlo estimate of one distillation round at one noise point."""
    beta = alpha if beta is None else beta
    nbits = samples * n_rep
    msg_src = BitSource(seed, STREAM_ALICE_MESSAGE)
    r = msg_src.uniform(nbits)
    x = xor(r, BitSource(seed, STREAM_ALICE_NOISE).biased(nbits, alpha))
    y = xor(r, BitSource(seed, STREAM_BOB_NOISE).biased(nbits, beta))
    eve_src = BitSource(seed, STREAM_EVE)
    z = xor(r, eve_src.biased(nbits, gamma))
    tr = run_round(x, y, z, n_rep, tie_policy, msg_src, eve_src)
    eps_mc = 1.0 - agreement_fraction(tr.bob_next, tr.alice_next)
    delta_mc = eve_error_fraction(tr.alice_next, tr.eve_next, tr.eve_tie_mask, tie_policy)
    delta_mc_vs_bob = eve_error_fraction(tr.bob_next, tr.eve_next, tr.eve_tie_mask, tie_policy)
    return {
        "alpha": alpha,
        "eps2_analytic": bob_error_n(convolve_flip(alpha, beta), n_rep),
        "delta2_analytic": eve_error_n(alpha, beta, gamma, n_rep, tie_policy),
        "eps2_mc": eps_mc,
        "delta2_mc": delta_mc,
        "accepted": tr.accepted,
        "offered": tr.offered,
        "tie_policy": tie_policy.value,
        "delta2_mc_vs_bob": delta_mc_vs_bob,
    }


def fig3_rows(
    alphas,
    samples: int,
    seed: int,
    tie_policy: TiePolicy = TiePolicy.COUNT_AS_ERROR,
    workers: int = 1,
) -> list[dict]:
    spec = SweepSpec("alpha", tuple(alphas), samples)
    jobs = [
        (a, samples, derive_point_seed(seed, i, 0), tie_policy)
        for i, a in enumerate(spec.values)
    ]
    return _run_jobs(measure_virtual_channel, jobs, workers)


# -- acceptance-rate-under-tamper measurement (second figure) -------------------


def measure_ptotal(
    tau: float,
    initial_bits: int,
    alpha: float,
    seed: int,
    beta: float | None = None,
    n_rep: int = 2,
) -> dict:
    """Acceptance fraction of the first exchange with tamper rate tau."""
    beta = alpha if beta is None else beta
    msg_src = BitSource(seed, STREAM_ALICE_MESSAGE)
    r = msg_src.uniform(initial_bits)
    x = xor(r, BitSource(seed, STREAM_ALICE_NOISE).biased(initial_bits, alpha))
    r_wire, _ = apply_tamper(r, tau, BitSource(seed, STREAM_TAMPER))
    y = xor(r_wire, BitSource(seed, STREAM_BOB_NOISE).biased(initial_bits, beta))
    c = msg_src.uniform(initial_bits // n_rep)
    mask, _decoded = bob_decode(encode_round(x, c, n_rep), y)
    offered = initial_bits // n_rep
    expected = p_total(convolve_flip(alpha, beta), n_rep)
    sigma = math.sqrt(expected * (1.0 - expected) / offered)
    measured = mask.popcount() / offered
    return {
        "tau": tau,
        "expected_ptotal": expected,
        "measured_ptotal": measured,
        "sigma": sigma,
        "z": (measured - expected) / sigma,
    }


def fig4_rows(
    taus,
    initial_bits: int,
    alpha: float,
    seed: int,
    repetitions: int = 1,
    workers: int = 1,
) -> list[dict]:
    spec = SweepSpec("tau", tuple(taus), initial_bits, repetitions)
    jobs = [
        (tau, initial_bits, alpha, derive_point_seed(seed, i, rep))
        for i, tau in enumerate(spec.values)
        for rep in range(spec.repetitions)
    ]
    per_rep = _run_jobs(measure_ptotal, jobs, workers)
    rows = []
    for i, tau in enumerate(spec.values):
        chunk = per_rep[i * spec.repetitions : (i + 1) * spec.repetitions]
        measured = [c["measured_ptotal"] for c in chunk]
        rows.append(
            {
                "tau": tau,
                "expected_ptotal": chunk[0]["expected_ptotal"],
                "measured_ptotal": float(np.mean(measured)),
                "measured_std": float(np.std(measured)),
                "sigma": chunk[0]["sigma"],
                "z": float(np.mean([c["z"] for c in chunk])),
            }
        )
    return rows


# -- end-to-end key-rate sweep (third figure) -----------------------------------


def measure_session(config: SessionConfig) -> dict:
    art = simulate(config)
    res = art.result
    return {
        "tau": config.eve.tau,
        "pre_pa_len": res.pre_pa_len,
        "k_estimate": res.k_estimate,
        "final_key_bits": res.final_key.length,
        "key_rate": res.key_rate,
        "eve_key_agreement": res.eve_key_agreement,
        "alarm": int(res.tamper_alarm),
        "rep": 0,
    }


def fig5_rows(
    taus,
    initial_bits: int,
    rounds: int,
    seed: int,
    alpha: float = 0.16,
    beta: float | None = None,
    repetitions: int = 1,
    workers: int = 1,
    eve_incorporate: bool = False,
) -> list[dict]:
    spec = SweepSpec("tau", tuple(taus), initial_bits, repetitions)
    beta = alpha if beta is None else beta
    jobs = []
    for i, tau in enumerate(spec.values):
        for rep in range(spec.repetitions):
            eve = (
                EveStrategy("tamper", tau=tau, incorporate_tamper=eve_incorporate)
                if tau > 0
                else EveStrategy()
            )
            cfg = SessionConfig(
                initial_bits=initial_bits,
                alpha=alpha,
                beta=beta,
                rounds=rounds,
                seed=derive_point_seed(seed, i, rep),
                eve=eve,
            )
            jobs.append((cfg,))
    rows = _run_jobs(measure_session, jobs, workers)
    idx = 0
    for i, _tau in enumerate(spec.values):
        for rep in range(spec.repetitions):
            rows[idx]["rep"] = rep
            idx += 1
    return rows


# -- shared plumbing -------------------------------------------------------------


def _run_jobs(fn, jobs, workers: int):
    if workers <= 1 or len(jobs) <= 1:
        return [fn(*job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, *zip(*jobs)))


def format_cell(value) -> str:
    """CSV cell: '.' decimal point, six significant digits for floats."""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError("refusing to write a non-finite CSV cell")
        return f"{value:.6g}"
    return str(value)


def write_csv(path, rows: list[dict], columns: list[str]) -> None:
    """Deterministic comma-separated output with a header row."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_cell(row[c]) for c in columns])


FIG3_COLUMNS = [
    "alpha",
    "eps2_analytic",
    "delta2_analytic",
    "eps2_mc",
    "delta2_mc",
    "accepted",
    "offered",
    "tie_policy",
    "delta2_mc_vs_bob",
]
FIG4_COLUMNS = ["tau", "expected_ptotal", "measured_ptotal", "measured_std", "sigma", "z"]
FIG5_COLUMNS = [
    "tau",
    "pre_pa_len",
    "k_estimate",
    "final_key_bits",
    "key_rate",
    "eve_key_agreement",
    "alarm",
    "rep",
]
