"""Signal constellations: equiangular spherical codes and basis-pair codes.

A code is an ordered set of n pure-state Bloch vectors with an associated
measurement weight 2/n, so the subnormalized projectors (2/n)|psi_m><psi_m|
form a POVM. The trine and tetrahedron have antipodal dual codes used by the
receiver; BB84 and six-state consist of orthogonal basis pairs and are their
own antipode set. All public signal indices are 1-based.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .states import pure_from_bloch, Povm


class CodeKind(Enum):
    TRINE = "trine"
    TETRAHEDRON = "tetrahedron"
    BB84 = "bb84"
    SIX_STATE = "six-state"


@dataclass(frozen=True, eq=False)
class SphericalCode:
    """Ordered constellation of unit Bloch vectors with POVM weight 2/n."""

    kind: CodeKind
    states: np.ndarray  # shape (n, 3), read-only
    povm_weight: Fraction

    def __post_init__(self):
        s = np.asarray(self.states, dtype=np.float64)
        s.setflags(write=False)
        object.__setattr__(self, "states", s)

    def __len__(self) -> int:
        return len(self.states)

    def bloch(self, index: int) -> np.ndarray:
        """Bloch vector of signal `index` (1-based)."""
        if not 1 <= index <= len(self):
            raise ValueError(f"signal index {index} out of range 1..{len(self)}")
        return self.states[index - 1]

    def state(self, index: int) -> np.ndarray:
        """Density matrix of signal `index` (1-based)."""
        return pure_from_bloch(self.bloch(index))


def _trine_states() -> np.ndarray:
    # coplanar in the x-z plane, angle 2*pi*(j-1)/3 from +z
    rows = []
    for j in range(3):
        ang = 2 * math.pi * j / 3
        rows.append([math.sin(ang), 0.0, math.cos(ang)])
    return np.array(rows)


def _tetrahedron_states() -> np.ndarray:
    r2 = math.sqrt(2.0)
    r23 = math.sqrt(2.0 / 3.0)
    return np.array(
        [
            [0.0, 0.0, 1.0],
            [2 * r2 / 3, 0.0, -1.0 / 3],
            [-r2 / 3, r23, -1.0 / 3],
            [-r2 / 3, -r23, -1.0 / 3],
        ]
    )


_BASIS_AXES = {"z": [0.0, 0.0, 1.0], "x": [1.0, 0.0, 0.0], "y": [0.0, 1.0, 0.0]}


def _basis_pair_states(bases: str) -> np.ndarray:
    rows = []
    for b in bases:
        axis = np.array(_BASIS_AXES[b])
        rows.append(axis)
        rows.append(-axis)
    return np.array(rows)


@lru_cache(maxsize=None)
def make_code(kind: CodeKind) -> SphericalCode:
    """Construct the constellation for `kind` with its exact coordinates."""
    if kind is CodeKind.TRINE:
        states = _trine_states()
    elif kind is CodeKind.TETRAHEDRON:
        states = _tetrahedron_states()
    elif kind is CodeKind.BB84:
        states = _basis_pair_states("zx")
    elif kind is CodeKind.SIX_STATE:
        states = _basis_pair_states("zxy")
    else:
        raise ValueError(f"unknown code kind: {kind!r}")
    return SphericalCode(kind=kind, states=states, povm_weight=Fraction(2, len(states)))


@lru_cache(maxsize=None)
def dual_code(kind: CodeKind) -> SphericalCode:
    """Antipodal code: each dual state is orthogonal to exactly one code state.

    Only defined for the trine and tetrahedron; the basis-pair codes are their
    own antipode set and take no separate dual.
    """
    if kind not in (CodeKind.TRINE, CodeKind.TETRAHEDRON):
        raise ValueError(f"dual code is not defined for {kind.value}")
    base = make_code(kind)
    return SphericalCode(kind=kind, states=-base.states, povm_weight=base.povm_weight)


def code_povm(code: SphericalCode) -> Povm:
    """POVM with elements (2/n)|psi_m><psi_m| over the code's states."""
    w = float(code.povm_weight)
    elements = tuple(w * pure_from_bloch(v) for v in code.states)
    return Povm(elements=elements)


@lru_cache(maxsize=None)
def bloch_gram(kind: CodeKind) -> tuple:
    """Exact Gram matrix of Bloch-vector dot products, as Fractions.

    Equiangular codes have constant off-diagonal overlap (-1/2 for the trine,
    -1/3 for the tetrahedron); basis-pair codes have -1 within a pair and 0
    across pairs.
    """
    n = len(make_code(kind))
    if kind is CodeKind.TRINE:
        off = lambda i, j: Fraction(-1, 2)  # noqa: E731
    elif kind is CodeKind.TETRAHEDRON:
        off = lambda i, j: Fraction(-1, 3)  # noqa: E731
    else:
        off = lambda i, j: Fraction(-1) if j == i ^ 1 else Fraction(0)  # noqa: E731
    rows = []
    for i in range(n):
        rows.append(
            tuple(Fraction(1) if i == j else off(i, j) for j in range(n))
        )
    return tuple(rows)


# -- basis-pair helpers (BB84 / six-state ordering: +z,-z,+x,-x,+y,-y) --------


def basis_label(index: int) -> str:
    """Basis ('z', 'x' or 'y') of a basis-pair code signal (1-based index)."""
    if not 1 <= index <= 6:
        raise ValueError(f"signal index {index} out of range 1..6")
    return "zxy"[(index - 1) // 2]


def eigen_bit(index: int) -> int:
    """Key bit of a basis-pair signal: + eigenstate encodes 0, - encodes 1."""
    if index < 1:
        raise ValueError(f"signal index {index} out of range")
    return (index - 1) % 2


# -- permutation-symbol key bits ----------------------------------------------


def _levi_civita(indices: tuple, n: int) -> int:
    for i in indices:
        if not isinstance(i, int) or not 1 <= i <= n:
            raise ValueError(f"index {i!r} out of range 1..{n}")
    if len(set(indices)) != len(indices):
        return 0
    sign = 1
    perm = list(indices)
    for i in range(len(perm)):
        for j in range(i + 1, len(perm)):
            if perm[i] > perm[j]:
                sign = -sign
    return sign


def levi_civita_3(j: int, k: int, l: int) -> int:
    """Three-index permutation symbol over {1,2,3}: +1 even, -1 odd, 0 on repeats."""
    return _levi_civita((j, k, l), 3)


def levi_civita_4(j: int, k: int, l: int, m: int) -> int:
    """Four-index permutation symbol over {1,2,3,4}."""
    return _levi_civita((j, k, l, m), 4)


def trine_key_bit(j: int, k: int, l: int) -> int:
    """Key bit (1 - eps_jkl)/2 from a full trine index assignment.

    j is the sender's signal, k the receiver's outcome, l the announced
    excluded outcome; the three must be distinct.
    """
    eps = levi_civita_3(j, k, l)
    if eps == 0:
        raise ValueError(f"trine key bit needs distinct indices, got {(j, k, l)}")
    return (1 - eps) // 2


def tetra_key_bit(j: int, k: int, l: int, m: int) -> int:
    """Key bit (1 + eps_jklm)/2 from a full tetrahedron index assignment."""
    eps = levi_civita_4(j, k, l, m)
    if eps == 0:
        raise ValueError(
            f"tetrahedron key bit needs distinct indices, got {(j, k, l, m)}"
        )
    return (1 + eps) // 2
