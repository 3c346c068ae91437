"""Exact analysis: joint distributions, mutual information, key rates, thresholds.

The central object is the joint distribution p(a, b, e) of Alice's bit, Bob's
bit, and Eve's guess (0, 1, or None for abstention) conditioned on successful
sifting, produced by exhaustively enumerating every branch of a round. For
the intercept/resend attack every branch probability is rational, so the
enumeration runs in exact Fraction arithmetic whenever the inputs (q and the
depolarizing strength) are rational; the gentle attack introduces matrix
square roots and runs in double precision. The one-way distillable rate is
the classical bound

    R = I(A:B) - min(I(A:E), I(B:E))

with abstention kept as a third symbol in Eve's alphabet.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational

import numpy as np

from .codes import bloch_gram
from .eavesdrop import (
    EveRecord,
    GentleIntercept,
    InterceptResend,
    NOT_INTERCEPTED,
    EnsembleMix,
    _side_gentle_povm,
    eve_guess,
    eve_outcome_probability,
    measuring_code,
)
from .protocol import (
    Channel,
    IDEAL,
    ProtocolKind,
    alice_code,
    announcement_options,
    derive_bits,
    sift_accept,
)
from .states import born_probability, depolarize, sqrt_post_measurement_state


class NoThresholdError(RuntimeError):
    """Raised when the key rate does not change sign on q in [0, 1]."""


@dataclass(frozen=True, eq=False)
class JointDistribution:
    """p(a, b, e) conditioned on sifting success, plus the sifting probability.

    Table keys are (alice_bit, bob_bit, eve_guess) with eve_guess in
    {0, 1, None}; None marks abstention (including rounds Eve never touched).
    Values are Fractions when produced by the exact path, floats otherwise.
    """

    p_sift: object
    table: dict

    def __post_init__(self):
        for key, v in self.table.items():
            if v < 0:
                raise ValueError(f"negative probability {v!r} at {key}")
        total = float(sum(self.table.values()))
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"conditional table sums to {total!r}, expected 1")

    def mass(self, predicate):
        """Total conditional probability of entries whose (a, b, e) satisfies predicate."""
        return sum(v for k, v in self.table.items() if predicate(*k))

    @property
    def p_fail(self):
        return 1 - self.p_sift

    @property
    def qber(self):
        """Conditional probability that the sifted bits disagree."""
        return self.mass(lambda a, b, e: a != b)

    @property
    def p_ab_agree(self):
        return self.mass(lambda a, b, e: a == b)

    @property
    def p_eve_abstain(self):
        return self.mass(lambda a, b, e: e is None)

    @property
    def p_eve_guess(self):
        return self.mass(lambda a, b, e: e is not None)

    @property
    def p_eve_agree_alice(self):
        return self.mass(lambda a, b, e: e is not None and e == a)

    @property
    def p_eve_agree_bob(self):
        return self.mass(lambda a, b, e: e is not None and e == b)

    def pair_ab(self) -> dict:
        return self._pair(lambda a, b, e: (a, b))

    def pair_ae(self) -> dict:
        return self._pair(lambda a, b, e: (a, e))

    def pair_be(self) -> dict:
        return self._pair(lambda a, b, e: (b, e))

    def _pair(self, proj) -> dict:
        out: dict = {}
        for key, v in self.table.items():
            pk = proj(*key)
            out[pk] = out.get(pk, 0) + v
        return out


@dataclass(frozen=True)
class RateReport:
    """Mutual informations (bits) and the distillable rate R = i_ab - min(i_ae, i_be)."""

    i_ab: float
    i_ae: float
    i_be: float
    r: float


@dataclass(frozen=True)
class ThresholdResult:
    q_star: float
    qber_star: float


@dataclass(frozen=True)
class QSiftEstimate:
    """Attack fraction inferred from an observed sifting rate."""

    q: object
    q_raw: object
    in_model: bool


def _is_exact(x) -> bool:
    return isinstance(x, Rational)


def _negligible(p) -> bool:
    """True for branch weights that cannot contribute at double precision.

    Exact zeros are dropped in both arithmetics; float weights additionally
    drop roundoff dust below 1e-15 so that impossible branches (orthogonal
    outcomes that compute as ~1e-17) do not grow spurious table entries.
    """
    if isinstance(p, float):
        return p < 1e-15
    return p == 0


# -- branch generators ---------------------------------------------------------


def _resend_side_tag(protocol: ProtocolKind, side: str) -> str:
    # exclusion protocols: Bob-side Eve resends the dual (antipodal) state
    if side == "bob" and protocol.excludes_outcomes:
        return "dual"
    return "alice"


def _mix_sides(mix: EnsembleMix):
    if mix is EnsembleMix.ALICE_ONLY:
        return (("alice", Fraction(1)),)
    if mix is EnsembleMix.BOB_ONLY:
        return (("bob", Fraction(1)),)
    return (("alice", Fraction(1, 2)), ("bob", Fraction(1, 2)))


def _eve_branches(protocol: ProtocolKind, eve, j: int):
    """Yield (weight, forwarded state, EveRecord) for every interception branch.

    Forwarded states are ('alice'|'dual', index) tags on the exact path and
    density matrices on the gentle path.
    """
    n = protocol.n_signals
    if eve is None:
        yield 1, ("alice", j), None
        return
    if isinstance(eve, InterceptResend):
        if eve.q != 1:
            yield 1 - eve.q, ("alice", j), NOT_INTERCEPTED
        if eve.q == 0:
            return
        for side, ws in _mix_sides(eve.mix):
            tag = _resend_side_tag(protocol, side)
            for m in range(1, n + 1):
                p_m = eve_outcome_probability(protocol, eve, side, m, j)
                if _negligible(p_m):
                    continue
                rec = EveRecord(intercepted=True, ensemble_used=side, outcome_index=m)
                yield eve.q * ws * p_m, (tag, m), rec
        return
    if isinstance(eve, GentleIntercept):
        rho = alice_code(protocol).state(j)
        for side, ws in _mix_sides(eve.mix):
            povm = _side_gentle_povm(protocol, side, float(eve.q))
            for m in range(1, n + 1):
                p_m = born_probability(rho, povm.elements[m - 1])
                # below the cut the conditional state is numerically undefined
                # (full-strength orthogonal outcomes compute as ~1e-17, not 0)
                if _negligible(p_m):
                    continue
                forwarded = sqrt_post_measurement_state(rho, povm.elements[m - 1])
                rec = EveRecord(intercepted=True, ensemble_used=side, outcome_index=m)
                yield float(ws) * p_m, forwarded, rec
        return
    raise ValueError(f"unknown eavesdropping strategy: {eve!r}")


def _bob_row(protocol: ProtocolKind, state, channel: Channel):
    """Bob's outcome distribution over labels 1..n for one forwarded state."""
    n = protocol.n_signals
    p = channel.depolarizing
    if isinstance(state, tuple):
        side, s = state
        gram = bloch_gram(protocol.code_kind)
        bob_side = "dual" if protocol.excludes_outcomes else "alice"
        row = []
        for k in range(1, n + 1):
            d = gram[k - 1][s - 1]
            if bob_side != side:
                d = -d
            pk = (1 + d) * Fraction(1, n)
            if p != 0:
                pk = (1 - p) * pk + p * Fraction(1, n)
            row.append(pk)
        return row
    from .protocol import bob_povm

    rho = depolarize(state, float(p))
    return [born_probability(rho, e) for e in bob_povm(protocol).elements]


def enumerate_joint(protocol: ProtocolKind, eve=None, channel: Channel = IDEAL) -> JointDistribution:
    """Exhaustively enumerate one round and return the sifted joint distribution.

    Every branch (signal, interception outcome, Bob outcome, announcement) is
    walked with its probability; nothing is sampled. Arithmetic stays in
    exact rationals when the strategy and channel parameters are rational and
    the strategy is not gentle.

    Args:
        protocol: protocol to analyze.
        eve: None, InterceptResend, or GentleIntercept.
        channel: transmission channel applied after interception.

    Returns:
        JointDistribution with p_sift and the conditional p(a, b, e) table.
    """
    n = protocol.n_signals
    w_j = Fraction(1, n)
    table: dict = {}
    sift_mass = 0
    total_mass = 0
    for j in range(1, n + 1):
        for w_e, state, rec in _eve_branches(protocol, eve, j):
            row = _bob_row(protocol, state, channel)
            base = w_j * w_e
            for k in range(1, n + 1):
                pk = row[k - 1]
                if _negligible(pk):
                    continue
                options = announcement_options(protocol, k)
                w_a = Fraction(1, len(options))
                w = base * pk * w_a
                for ann in options:
                    total_mass += w
                    if not sift_accept(protocol, j, ann):
                        continue
                    a, b = derive_bits(protocol, j, k, ann)
                    e = eve_guess(rec, protocol, ann, True)
                    key = (a, b, e)
                    table[key] = table.get(key, 0) + w
                    sift_mass += w
    if abs(float(total_mass) - 1.0) > 1e-9:
        raise AssertionError(f"branch probabilities sum to {float(total_mass)!r}")
    cond = {key: v / sift_mass for key, v in table.items()}
    return JointDistribution(p_sift=sift_mass, table=cond)


# -- closed-form curves --------------------------------------------------------


@dataclass(frozen=True)
class AnalyticCurves:
    """Closed-form intercept/resend curves for the exclusion-sifted codes.

    All conditional quantities assume the symmetric ensemble mix except
    p_sift, p_ab and qber, which are mix-independent. Accepts exact or float
    q and preserves the input's arithmetic.
    """

    protocol: ProtocolKind

    def p_sift(self, q):
        if self.protocol is ProtocolKind.TRINE:
            return (6 + q) * Fraction(1, 12)
        return (3 + q) * Fraction(1, 9)

    def p_ab(self, q):
        if self.protocol is ProtocolKind.TRINE:
            return (6 - q) / (6 + q)
        return (6 - q) / (2 * (3 + q))

    def p_ae(self, q):
        if self.protocol is ProtocolKind.TRINE:
            return 9 * q / (2 * (6 + q))
        return 7 * q / (4 * (3 + q))

    def p_noguess(self, q):
        if self.protocol is ProtocolKind.TRINE:
            return 2 * (3 - 2 * q) / (6 + q)
        return (3 - q) / (3 + q)

    def qber(self, q):
        if self.protocol is ProtocolKind.TRINE:
            return 2 * q / (6 + q)
        return 3 * q / (2 * (3 + q))

    def sift_to_q(self, observed_sift):
        """Invert p_sift: the attack fraction exposed by the sifting rate."""
        if self.protocol is ProtocolKind.TRINE:
            return 12 * observed_sift - 6
        return 9 * observed_sift - 3


def analytic_curves(protocol: ProtocolKind) -> AnalyticCurves:
    """Closed-form curves; only the exclusion-sifted codes have them."""
    if not protocol.excludes_outcomes:
        raise ValueError(
            f"no closed-form curves for {protocol.value}; use enumerate_joint"
        )
    return AnalyticCurves(protocol=protocol)


# -- information quantities ----------------------------------------------------


def mutual_information(joint: dict) -> float:
    """Mutual information (bits) of a finite two-variable joint distribution.

    Args:
        joint: mapping (x, y) -> probability; must be nonnegative and sum to 1
            within 1e-9. Zero entries contribute zero.

    Raises:
        ValueError: on negative entries or a badly normalized table.
    """
    total = 0.0
    for key, v in joint.items():
        if v < 0:
            raise ValueError(f"negative probability {v!r} at {key}")
        total += float(v)
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"distribution sums to {total!r}, expected 1")
    px: dict = {}
    py: dict = {}
    for (x, y), v in joint.items():
        vf = float(v)
        px[x] = px.get(x, 0.0) + vf
        py[y] = py.get(y, 0.0) + vf
    info = 0.0
    for (x, y), v in joint.items():
        vf = float(v)
        if vf > 0.0:
            info += vf * math.log2(vf / (px[x] * py[y]))
    return info


def key_rate(joint: JointDistribution) -> RateReport:
    """Distillable-rate report from a sifted joint distribution."""
    i_ab = mutual_information(joint.pair_ab())
    i_ae = mutual_information(joint.pair_ae())
    i_be = mutual_information(joint.pair_be())
    return RateReport(i_ab=i_ab, i_ae=i_ae, i_be=i_be, r=i_ab - min(i_ae, i_be))


def _strategy_for(family: str, q, mix: EnsembleMix = EnsembleMix.SYMMETRIC):
    if family == "standard":
        return InterceptResend(q=q, mix=mix)
    if family == "gentle":
        return GentleIntercept(q=q, mix=mix)
    raise ValueError(f"unknown attack family: {family!r} (expected standard or gentle)")


def find_threshold(
    protocol: ProtocolKind,
    attack_family: str = "standard",
    mix: EnsembleMix = EnsembleMix.SYMMETRIC,
    channel: Channel = IDEAL,
) -> ThresholdResult:
    """Bisect for the attack strength where the key rate crosses zero.

    Stops when |R| < 1e-10 or the q-interval is narrower than 1e-9 and
    reports both the critical strength and the error rate it induces.

    Raises:
        NoThresholdError: if R does not change sign over q in [0, 1].
    """

    def rate_at(q: float):
        jd = enumerate_joint(protocol, _strategy_for(attack_family, q, mix), channel)
        return key_rate(jd).r, jd

    r_lo, _ = rate_at(0.0)
    r_hi, _ = rate_at(1.0)
    if not (r_lo > 0.0 > r_hi):
        raise NoThresholdError(
            f"key rate does not cross zero on [0, 1]: R(0)={r_lo!r}, R(1)={r_hi!r}"
        )
    lo, hi = 0.0, 1.0
    mid = 0.5
    jd_mid = None
    while hi - lo >= 1e-9:
        mid = (lo + hi) / 2
        r_mid, jd_mid = rate_at(mid)
        if abs(r_mid) < 1e-10:
            break
        if r_mid > 0.0:
            lo = mid
        else:
            hi = mid
    if jd_mid is None:  # interval already narrow; evaluate once
        mid = (lo + hi) / 2
        _, jd_mid = rate_at(mid)
    return ThresholdResult(q_star=mid, qber_star=float(jd_mid.qber))


def estimate_q_from_sift(protocol: ProtocolKind, observed_sift, margin=0) -> QSiftEstimate:
    """Infer the intercept/resend fraction from an observed sifting rate.

    The sifting rate of the exclusion-sifted codes rises linearly with the
    interception fraction, so the inversion is linear: q = 12 s - 6 (trine),
    q = 9 s - 3 (tetrahedron). The estimate is clamped to [0, 1]; a rate
    outside the attainable band by more than `margin` marks the observation
    out-of-model and emits a warning rather than failing.
    """
    curves = analytic_curves(protocol)  # rejects basis protocols
    raw = curves.sift_to_q(observed_sift)
    lo, hi = curves.p_sift(0), curves.p_sift(1)
    in_model = (lo - margin) <= observed_sift <= (hi + margin)
    if not in_model:
        warnings.warn(
            f"observed sifting rate {float(observed_sift)!r} is outside "
            f"[{float(lo)!r}, {float(hi)!r}] by more than the stated margin; "
            "the interception model cannot produce it",
            stacklevel=2,
        )
    q = min(max(raw, 0), 1)
    return QSiftEstimate(q=q, q_raw=raw, in_model=in_model)


@dataclass(frozen=True)
class DepolarizingPoint:
    p: object
    p_sift: object
    qber: object


def depolarizing_curves(protocol: ProtocolKind, p_grid) -> list:
    """Sifting and error rates of an eavesdropper-free depolarizing channel.

    Exact when the grid values are rational (pass Fractions for exact rows).
    """
    rows = []
    for p in p_grid:
        jd = enumerate_joint(protocol, eve=None, channel=Channel(depolarizing=p))
        rows.append(DepolarizingPoint(p=p, p_sift=jd.p_sift, qber=jd.qber))
    return rows
