"""Monte Carlo simulation with counter-addressed randomness.

Each round consumes one aligned block of 8 uniforms (see protocol.run_round
for the slot layout), and the Philox counter is set so that round i starts
at counter 2 * i regardless of how rounds are batched. Any contiguous chunk
of rounds is therefore reproducible from (seed, start index) alone, and
chunked runs merge to bit-identical totals.

The vectorized kernel precomputes per-branch outcome tables by calling the
same scalar routines run_round uses (same matrices, same Born products, same
sequential cumulative sums), so a vectorized batch reproduces the scalar
transcript loop float for float.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.random import Generator, Philox

from .eavesdrop import (
    EveRecord,
    GentleIntercept,
    InterceptResend,
    EnsembleMix,
    _side_gentle_povm,
    _side_povm,
    eve_guess,
    measuring_code,
)
from .protocol import (
    Channel,
    IDEAL,
    ProtocolKind,
    alice_code,
    announcement_options,
    bob_povm,
    derive_bits,
    sift_accept,
)
from .states import born_probability, depolarize, sqrt_post_measurement_state

UNIFORMS_PER_ROUND = 8
_COUNTERS_PER_ROUND = UNIFORMS_PER_ROUND // 4  # Philox counter steps in 4-double blocks


@dataclass(frozen=True)
class TrialConfig:
    """One reproducible simulation: protocol, adversary, channel, size, seed."""

    protocol: ProtocolKind
    eve: object = None
    channel: Channel = IDEAL
    n_rounds: int = 100_000
    seed: int = 0

    def __post_init__(self):
        if self.n_rounds < 1:
            raise ValueError(f"n_rounds must be positive, got {self.n_rounds}")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must lie in [0, 2^64), got {self.seed}")


def round_rng(seed: int, start: int = 0) -> Generator:
    """Generator positioned at the first uniform of round `start`."""
    return Generator(Philox(key=seed, counter=[_COUNTERS_PER_ROUND * start, 0, 0, 0]))


def round_uniforms(seed: int, start: int, count: int) -> np.ndarray:
    """The (count, 8) uniform block for rounds start..start+count-1."""
    return round_rng(seed, start).random((count, UNIFORMS_PER_ROUND))


# -- precomputed branch tables ---------------------------------------------------


def _cumulative_row(rho, povm):
    """Sequential cumulative Born probabilities plus the last nonzero index.

    Mirrors the accumulation order of states.sample_outcome exactly so the
    vectorized inverse-CDF lands on the same outcome for the same uniform.
    """
    c = 0.0
    cums = []
    last_nonzero = 0
    for i, e in enumerate(povm.elements):
        p = born_probability(rho, e)
        c += p
        cums.append(c)
        if p > 0.0:
            last_nonzero = i
    return cums, last_nonzero


class _Tables:
    """Per-configuration outcome tables for the vectorized kernel."""

    def __init__(self, protocol: ProtocolKind, eve, channel: Channel):
        n = protocol.n_signals
        self.n = n
        self.kind = (
            "none" if eve is None
            else "standard" if isinstance(eve, InterceptResend)
            else "gentle"
        )
        if self.kind == "gentle" and not isinstance(eve, GentleIntercept):
            raise ValueError(f"unknown eavesdropping strategy: {eve!r}")
        povm_b = bob_povm(protocol)
        sides = ("alice", "bob")

        # Bob's outcome CDF per forwarded pure state: source 0 = Alice-ensemble
        # states, source 1 = Bob-ensemble states (the dual under exclusion sifting).
        bob_cum = np.empty((2, n, n))
        bob_lnz = np.empty((2, n), dtype=np.int64)
        for src, side in enumerate(sides):
            code = measuring_code(protocol, side)
            for s in range(1, n + 1):
                rho = depolarize(code.state(s), channel.depolarizing)
                bob_cum[src, s - 1], bob_lnz[src, s - 1] = _cumulative_row(rho, povm_b)
        self.bob_cum, self.bob_lnz = bob_cum, bob_lnz

        if self.kind != "none":
            eve_cum = np.empty((2, n, n))
            eve_lnz = np.empty((2, n), dtype=np.int64)
            for si, side in enumerate(sides):
                if self.kind == "standard":
                    povm_e = _side_povm(protocol, side)
                else:
                    povm_e = _side_gentle_povm(protocol, side, float(eve.q))
                for j in range(1, n + 1):
                    rho = alice_code(protocol).state(j)
                    eve_cum[si, j - 1], eve_lnz[si, j - 1] = _cumulative_row(rho, povm_e)
            self.eve_cum, self.eve_lnz = eve_cum, eve_lnz

        if self.kind == "gentle":
            # forwarded state depends on the original signal, so Bob's CDF
            # is indexed by (side, eve outcome, signal)
            gb_cum = np.empty((2, n, n, n))
            gb_lnz = np.empty((2, n, n), dtype=np.int64)
            for si, side in enumerate(sides):
                povm_e = _side_gentle_povm(protocol, side, float(eve.q))
                code_e = measuring_code(protocol, side)
                for j in range(1, n + 1):
                    rho = alice_code(protocol).state(j)
                    for m in range(1, n + 1):
                        if born_probability(rho, povm_e.elements[m - 1]) < 1e-15:
                            # sampled with probability < 1e-15; use the p -> 0
                            # limit of the square-root update (the measured state)
                            fwd = code_e.state(m)
                        else:
                            fwd = sqrt_post_measurement_state(rho, povm_e.elements[m - 1])
                        fwd = depolarize(fwd, channel.depolarizing)
                        gb_cum[si, m - 1, j - 1], gb_lnz[si, m - 1, j - 1] = (
                            _cumulative_row(fwd, povm_b)
                        )
            self.gentle_bob_cum, self.gentle_bob_lnz = gb_cum, gb_lnz

        # sifting decision and both key bits per (signal, outcome, announcement)
        n_opts = len(announcement_options(protocol, 1))
        self.n_options = n_opts
        acc = np.zeros((n, n, n_opts), dtype=bool)
        abit = np.full((n, n, n_opts), -1, dtype=np.int8)
        bbit = np.full((n, n, n_opts), -1, dtype=np.int8)
        ebit = np.full((2, n, n, n_opts), -1, dtype=np.int8)
        for k in range(1, n + 1):
            for ai, ann in enumerate(announcement_options(protocol, k)):
                for j in range(1, n + 1):
                    if sift_accept(protocol, j, ann):
                        acc[j - 1, k - 1, ai] = True
                        a, b = derive_bits(protocol, j, k, ann)
                        abit[j - 1, k - 1, ai] = a
                        bbit[j - 1, k - 1, ai] = b
                for si, side in enumerate(sides):
                    for m in range(1, n + 1):
                        rec = EveRecord(intercepted=True, ensemble_used=side, outcome_index=m)
                        g = eve_guess(rec, protocol, ann, True)
                        ebit[si, m - 1, k - 1, ai] = -1 if g is None else g
        self.accept_tab, self.alice_tab, self.bob_tab, self.eve_tab = acc, abit, bbit, ebit


def _sample_rows(cum_rows: np.ndarray, lnz: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Vectorized inverse CDF over gathered cumulative rows; returns 1-based labels.

    Equivalent to states.sample_outcome: a uniform in [c_{i-1}, c_i) picks
    outcome i (zero-probability outcomes create empty intervals), and a
    uniform at or past the total mass falls back to the last nonzero outcome.
    """
    idx = (u[:, None] >= cum_rows).sum(axis=1)
    over = idx >= cum_rows.shape[1]
    return np.where(over, lnz, np.minimum(idx, cum_rows.shape[1] - 1)) + 1


@dataclass(frozen=True)
class RoundArrays:
    """Column-oriented transcripts of a contiguous block of rounds."""

    signal: np.ndarray
    intercepted: np.ndarray
    eve_side: np.ndarray  # 0 alice, 1 bob, -1 not intercepted
    eve_outcome: np.ndarray  # 1-based; 0 when not intercepted
    bob_outcome: np.ndarray
    announce_index: np.ndarray
    accepted: np.ndarray
    alice_bit: np.ndarray  # -1 on rejected rounds
    bob_bit: np.ndarray
    eve_bit: np.ndarray  # -1 = abstain or no interception or rejected

    def __len__(self):
        return self.signal.shape[0]


def simulate_rounds(config: TrialConfig, start: int = 0, count=None) -> RoundArrays:
    """Simulate rounds start..start+count-1 of the configured trial, vectorized.

    The defaults cover the whole trial. Identical to running the scalar
    run_round loop over the same index range with the same seed.
    """
    if count is None:
        count = config.n_rounds - start
    if start < 0 or count < 0 or start + count > config.n_rounds:
        raise ValueError(f"round range {start}..{start + count} outside trial")
    protocol = config.protocol
    tab = _Tables(protocol, config.eve, config.channel)
    n = tab.n
    u = round_uniforms(config.seed, start, count)

    j = np.minimum((u[:, 0] * n).astype(np.int64), n - 1) + 1

    if tab.kind == "none":
        intercepted = np.zeros(count, dtype=bool)
        side = np.full(count, -1, dtype=np.int8)
        m = np.zeros(count, dtype=np.int64)
        k = _sample_rows(tab.bob_cum[0, j - 1], tab.bob_lnz[0, j - 1], u[:, 4])
    else:
        eve = config.eve
        if eve.mix is EnsembleMix.ALICE_ONLY:
            side = np.zeros(count, dtype=np.int8)
        elif eve.mix is EnsembleMix.BOB_ONLY:
            side = np.ones(count, dtype=np.int8)
        else:
            side = np.where(u[:, 2] < 0.5, 0, 1).astype(np.int8)
        m = _sample_rows(tab.eve_cum[side, j - 1], tab.eve_lnz[side, j - 1], u[:, 3])
        if tab.kind == "standard":
            intercepted = u[:, 1] < float(eve.q)
            # forwarded state: Eve's ensemble state m if intercepted, else signal j
            src = np.where(intercepted, side, 0).astype(np.int64)
            s = np.where(intercepted, m, j)
            k = _sample_rows(tab.bob_cum[src, s - 1], tab.bob_lnz[src, s - 1], u[:, 4])
            side = np.where(intercepted, side, -1).astype(np.int8)
            m = np.where(intercepted, m, 0)
        else:
            intercepted = np.ones(count, dtype=bool)
            k = _sample_rows(
                tab.gentle_bob_cum[side, m - 1, j - 1],
                tab.gentle_bob_lnz[side, m - 1, j - 1],
                u[:, 4],
            )

    n_opts = tab.n_options
    ai = np.minimum((u[:, 5] * n_opts).astype(np.int64), n_opts - 1)
    accepted = tab.accept_tab[j - 1, k - 1, ai]
    alice_bit = np.where(accepted, tab.alice_tab[j - 1, k - 1, ai], -1).astype(np.int8)
    bob_bit = np.where(accepted, tab.bob_tab[j - 1, k - 1, ai], -1).astype(np.int8)
    guessable = accepted & intercepted
    eve_bit = np.where(
        guessable, tab.eve_tab[np.maximum(side, 0), m - 1, k - 1, ai], -1
    ).astype(np.int8)

    return RoundArrays(
        signal=j.astype(np.int8),
        intercepted=intercepted,
        eve_side=side,
        eve_outcome=m.astype(np.int8),
        bob_outcome=k.astype(np.int8),
        announce_index=ai.astype(np.int8),
        accepted=accepted,
        alice_bit=alice_bit,
        bob_bit=bob_bit,
        eve_bit=eve_bit,
    )


# -- summary statistics ----------------------------------------------------------


@dataclass(frozen=True)
class SampleStats:
    """Counting summary of simulated rounds; conditional counts are per sifted round."""

    n_rounds: int
    n_sifted: int
    n_errors: int
    n_eve_agree_alice: int
    n_eve_agree_bob: int
    n_eve_abstain: int

    def __add__(self, other: "SampleStats") -> "SampleStats":
        if not isinstance(other, SampleStats):
            return NotImplemented
        return SampleStats(
            n_rounds=self.n_rounds + other.n_rounds,
            n_sifted=self.n_sifted + other.n_sifted,
            n_errors=self.n_errors + other.n_errors,
            n_eve_agree_alice=self.n_eve_agree_alice + other.n_eve_agree_alice,
            n_eve_agree_bob=self.n_eve_agree_bob + other.n_eve_agree_bob,
            n_eve_abstain=self.n_eve_abstain + other.n_eve_abstain,
        )

    @staticmethod
    def zero() -> "SampleStats":
        return SampleStats(0, 0, 0, 0, 0, 0)

    @property
    def sift_rate(self) -> float:
        return self.n_sifted / self.n_rounds if self.n_rounds else math.nan

    @property
    def qber(self) -> float:
        return self.n_errors / self.n_sifted if self.n_sifted else math.nan

    @property
    def eve_agree_alice_rate(self) -> float:
        return self.n_eve_agree_alice / self.n_sifted if self.n_sifted else math.nan

    @property
    def eve_agree_bob_rate(self) -> float:
        return self.n_eve_agree_bob / self.n_sifted if self.n_sifted else math.nan

    @property
    def eve_abstain_rate(self) -> float:
        return self.n_eve_abstain / self.n_sifted if self.n_sifted else math.nan


def proportion_se(count: int, trials: int) -> float:
    """Standard error of an empirical proportion, sqrt(p(1-p)/n)."""
    if trials <= 0:
        return math.nan
    p = count / trials
    return math.sqrt(p * (1.0 - p) / trials)


def stats_from_arrays(arrays: RoundArrays) -> SampleStats:
    acc = arrays.accepted
    guessed = acc & (arrays.eve_bit >= 0)
    return SampleStats(
        n_rounds=len(arrays),
        n_sifted=int(acc.sum()),
        n_errors=int((acc & (arrays.alice_bit != arrays.bob_bit)).sum()),
        n_eve_agree_alice=int((guessed & (arrays.eve_bit == arrays.alice_bit)).sum()),
        n_eve_agree_bob=int((guessed & (arrays.eve_bit == arrays.bob_bit)).sum()),
        n_eve_abstain=int((acc & ~guessed).sum()),
    )


def run_trials(config: TrialConfig, chunk_size: int = 1 << 16) -> SampleStats:
    """Run the whole trial in chunks and merge; totals are chunk-size invariant."""
    if chunk_size < 1:
        raise ValueError(f"chunk_size must be positive, got {chunk_size}")
    total = SampleStats.zero()
    start = 0
    while start < config.n_rounds:
        count = min(chunk_size, config.n_rounds - start)
        total = total + stats_from_arrays(simulate_rounds(config, start, count))
        start += count
    return total


# -- comparison against the exact distribution ------------------------------------


@dataclass(frozen=True)
class ZScore:
    name: str
    observed: int
    trials: int
    expected: float

    @property
    def z(self) -> float:
        mu = self.trials * self.expected
        var = mu * (1.0 - self.expected)
        if var <= 0.0:
            return 0.0 if self.observed == mu else math.inf
        return (self.observed - mu) / math.sqrt(var)


@dataclass(frozen=True)
class ComparisonReport:
    entries: tuple

    @property
    def max_abs_z(self) -> float:
        return max(abs(e.z) for e in self.entries)

    @property
    def ok(self) -> bool:
        """True when every counter sits within 4 standard deviations."""
        return all(abs(e.z) <= 4.0 for e in self.entries)

    def flagged(self) -> tuple:
        return tuple(e for e in self.entries if abs(e.z) > 4.0)


def compare_to_oracle(stats: SampleStats, joint) -> ComparisonReport:
    """Z-scores of the simulated counters against an exact JointDistribution.

    The sifting counter is binomial over all rounds; the conditional counters
    are binomial over the sifted rounds. A zero-variance counter scores 0
    on exact agreement and infinity otherwise.
    """
    entries = (
        ZScore("sift", stats.n_sifted, stats.n_rounds, float(joint.p_sift)),
        ZScore("error", stats.n_errors, stats.n_sifted, float(joint.qber)),
        ZScore(
            "eve_agree_alice",
            stats.n_eve_agree_alice,
            stats.n_sifted,
            float(joint.p_eve_agree_alice),
        ),
        ZScore(
            "eve_agree_bob",
            stats.n_eve_agree_bob,
            stats.n_sifted,
            float(joint.p_eve_agree_bob),
        ),
        ZScore("eve_abstain", stats.n_eve_abstain, stats.n_sifted, float(joint.p_eve_abstain)),
    )
    return ComparisonReport(entries=entries)
