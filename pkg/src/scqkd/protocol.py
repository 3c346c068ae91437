"""Round structure: signal choice, announcements, sifting, and bit derivation.

The trine and tetrahedron protocols sift by exclusion: Bob measures with the
dual code and announces outcomes he did not obtain (one index for the trine,
an ordered pair for the tetrahedron); Alice accepts when her signal is not
excluded, and each party infers the other's index from the announcement.
BB84 and six-state sift by basis agreement. Bob always announces, even when
his outcome already dooms the round.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from functools import lru_cache

from .codes import (
    CodeKind,
    SphericalCode,
    Povm,
    basis_label,
    code_povm,
    dual_code,
    eigen_bit,
    make_code,
    tetra_key_bit,
    trine_key_bit,
)
from .states import depolarize, sample_outcome


class ProtocolKind(Enum):
    TRINE = "trine"
    TETRAHEDRON = "tetra"
    BB84 = "bb84"
    SIX_STATE = "six-state"

    @property
    def code_kind(self) -> CodeKind:
        return _CODE_OF[self]

    @property
    def n_signals(self) -> int:
        return len(make_code(self.code_kind))

    @property
    def excludes_outcomes(self) -> bool:
        """True for the exclusion-sifted codes (trine, tetrahedron)."""
        return self in (ProtocolKind.TRINE, ProtocolKind.TETRAHEDRON)


_CODE_OF = {
    ProtocolKind.TRINE: CodeKind.TRINE,
    ProtocolKind.TETRAHEDRON: CodeKind.TETRAHEDRON,
    ProtocolKind.BB84: CodeKind.BB84,
    ProtocolKind.SIX_STATE: CodeKind.SIX_STATE,
}


@dataclass(frozen=True)
class Channel:
    """Transmission channel; depolarizing = 0 is the ideal channel."""

    depolarizing: object = 0

    def __post_init__(self):
        if not 0 <= float(self.depolarizing) <= 1:
            raise ValueError(
                f"depolarizing strength must lie in [0, 1], got {self.depolarizing!r}"
            )


IDEAL = Channel()


@dataclass(frozen=True)
class Announcement:
    """Public sifting message.

    Exclusion protocols fill `excluded` (one index for the trine, an ordered
    pair for the tetrahedron). Basis protocols fill the basis fields; Bob's
    announcement knows only his own basis, the sender side is completed by
    run_round.
    """

    excluded: tuple = ()
    alice_basis: str | None = None
    bob_basis: str | None = None


@dataclass(frozen=True)
class RoundTranscript:
    """Complete record of one protocol round (rejected rounds keep j, k, announcement)."""

    protocol: ProtocolKind
    signal_index: int
    bob_outcome: int
    announcement: Announcement
    accepted: bool
    alice_bit: int | None = None
    bob_bit: int | None = None
    eve_record: "EveRecord | None" = None  # noqa: F821 - defined in eavesdrop


@lru_cache(maxsize=None)
def alice_code(protocol: ProtocolKind) -> SphericalCode:
    return make_code(protocol.code_kind)


@lru_cache(maxsize=None)
def bob_code(protocol: ProtocolKind) -> SphericalCode:
    """Bob measures the dual code for exclusion protocols, the code itself otherwise."""
    if protocol.excludes_outcomes:
        return dual_code(protocol.code_kind)
    return make_code(protocol.code_kind)


@lru_cache(maxsize=None)
def bob_povm(protocol: ProtocolKind) -> Povm:
    return code_povm(bob_code(protocol))


def alice_pick(protocol: ProtocolKind, u: float) -> int:
    """Uniform signal choice from one uniform variate; u = 0 maps to signal 1."""
    n = protocol.n_signals
    return min(int(u * n), n - 1) + 1


@lru_cache(maxsize=None)
def announcement_options(protocol: ProtocolKind, k: int) -> tuple:
    """Ordered tuple of announcements Bob may make after outcome k.

    The order is fixed (ascending excluded index, then lexicographic pairs)
    so that a uniform variate maps to a choice reproducibly.
    """
    n = protocol.n_signals
    if not 1 <= k <= n:
        raise ValueError(f"outcome index {k} out of range 1..{n}")
    if protocol is ProtocolKind.TRINE:
        others = tuple(i for i in (1, 2, 3) if i != k)
        return tuple(Announcement(excluded=(l,)) for l in others)
    if protocol is ProtocolKind.TETRAHEDRON:
        others = tuple(i for i in (1, 2, 3, 4) if i != k)
        return tuple(
            Announcement(excluded=(l, m)) for l in others for m in others if m != l
        )
    return (Announcement(bob_basis=basis_label(k)),)


def bob_announce(protocol: ProtocolKind, k: int, u: float) -> Announcement:
    """Bob's announcement after outcome k, chosen uniformly from the legal options.

    Exclusion protocols announce outcomes Bob did not obtain; basis protocols
    announce his measurement basis (the variate is accepted but unused there,
    keeping the per-round variate layout fixed).
    """
    options = announcement_options(protocol, k)
    return options[min(int(u * len(options)), len(options) - 1)]


def sift_accept(protocol: ProtocolKind, j: int, ann: Announcement) -> bool:
    """Alice's accept/reject decision from her signal and the announcement."""
    if protocol.excludes_outcomes:
        return j not in ann.excluded
    return basis_label(j) == ann.bob_basis


def derive_bits(protocol: ProtocolKind, j: int, k: int, ann: Announcement) -> tuple:
    """Key bits (alice_bit, bob_bit) for an accepted round.

    Each party infers the other's index as the one not excluded and not its
    own; a noisy round where Bob's outcome equals the signal makes those
    inferences collide on the same wrong index, so the bits always disagree.

    Raises:
        ValueError: if the announcement is inconsistent with j or k.
    """
    n = protocol.n_signals
    if not 1 <= j <= n or not 1 <= k <= n:
        raise ValueError(f"signal/outcome index out of range 1..{n}: {(j, k)}")
    if protocol is ProtocolKind.TRINE:
        (l,) = ann.excluded
        if l == k:
            raise ValueError("announcement excludes Bob's actual outcome")
        if l == j:
            raise ValueError("round was not accepted: signal is excluded")
        k_inferred = 6 - j - l
        j_inferred = 6 - k - l
        return trine_key_bit(j, k_inferred, l), trine_key_bit(j_inferred, k, l)
    if protocol is ProtocolKind.TETRAHEDRON:
        l, m = ann.excluded
        if l == m or k in (l, m):
            raise ValueError("announcement inconsistent with Bob's outcome")
        if j in (l, m):
            raise ValueError("round was not accepted: signal is excluded")
        k_inferred = 10 - j - l - m
        j_inferred = 10 - k - l - m
        return tetra_key_bit(j, k_inferred, l, m), tetra_key_bit(j_inferred, k, l, m)
    if ann.bob_basis != basis_label(k):
        raise ValueError("announced basis inconsistent with Bob's outcome")
    if ann.alice_basis is not None and ann.alice_basis != basis_label(j):
        raise ValueError("announced basis inconsistent with Alice's signal")
    if basis_label(j) != ann.bob_basis:
        raise ValueError("round was not accepted: bases differ")
    return eigen_bit(j), eigen_bit(k)


def run_round(protocol: ProtocolKind, eve, channel: Channel, rng) -> RoundTranscript:
    """Execute one round: Alice -> Eve -> channel -> Bob -> announcements.

    Consumes one aligned block of 8 uniforms from rng (6 named variates in
    fixed order: Alice pick, Eve coin, Eve ensemble coin, Eve outcome, Bob
    outcome, announcement; 2 reserved), so transcripts are replayable from
    (seed, round index) alone.

    Args:
        protocol: which protocol to run.
        eve: eavesdropping strategy, or None for no eavesdropper.
        channel: transmission channel, applied after any interception.
        rng: numpy Generator; exactly rng.random(8) is consumed.

    Returns:
        RoundTranscript; rejected rounds still record signal, outcome and
        announcement but carry no key bits.
    """
    from .eavesdrop import intercept_with_uniforms  # cycle: strategies need codes

    u = rng.random(8)
    j = alice_pick(protocol, u[0])
    rho = alice_code(protocol).state(j)
    rho, record = intercept_with_uniforms(eve, protocol, rho, u[1], u[2], u[3])
    rho = depolarize(rho, channel.depolarizing)
    k = sample_outcome(rho, bob_povm(protocol), u[4])
    ann = bob_announce(protocol, k, u[5])
    if not protocol.excludes_outcomes:
        ann = replace(ann, alice_basis=basis_label(j))
    accepted = sift_accept(protocol, j, ann)
    alice_bit = bob_bit = None
    if accepted:
        alice_bit, bob_bit = derive_bits(protocol, j, k, ann)
    return RoundTranscript(
        protocol=protocol,
        signal_index=j,
        bob_outcome=k,
        announcement=ann,
        accepted=accepted,
        alice_bit=alice_bit,
        bob_bit=bob_bit,
        eve_record=record,
    )
