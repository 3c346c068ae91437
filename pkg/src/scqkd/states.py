"""Qubit state and measurement primitives.

States are 2x2 complex density matrices; Bloch vectors are the real
three-component view rho = (I + v.sigma)/2. All functions are pure and never
mutate their inputs. Numerical tolerance for validity checks is 1e-12 unless
stated otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

ATOL = 1e-12

I2: NDArray[np.complex128] = np.eye(2, dtype=np.complex128)
SIGMA_X: NDArray[np.complex128] = np.array([[0, 1], [1, 0]], dtype=np.complex128)
SIGMA_Y: NDArray[np.complex128] = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
SIGMA_Z: NDArray[np.complex128] = np.array([[1, 0], [0, -1]], dtype=np.complex128)

MIXED: NDArray[np.complex128] = I2 / 2


def _frozen(a: np.ndarray) -> np.ndarray:
    out = np.asarray(a, dtype=np.complex128)
    out.setflags(write=False)
    return out


def pure_from_bloch(v) -> NDArray[np.complex128]:
    """Density matrix of the pure state with unit Bloch vector v.

    Args:
        v: length-3 real sequence with |v| = 1 (tolerance 1e-9).

    Returns:
        2x2 complex density matrix (I + v.sigma)/2, read-only.

    Raises:
        ValueError: if v is not a unit vector.
    """
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (3,):
        raise ValueError(f"Bloch vector must have 3 components, got shape {v.shape}")
    norm = float(np.linalg.norm(v))
    if abs(norm - 1.0) > 1e-9:
        raise ValueError(f"not a unit Bloch vector: |v| = {norm!r}")
    rho = (I2 + v[0] * SIGMA_X + v[1] * SIGMA_Y + v[2] * SIGMA_Z) / 2
    return _frozen(rho)


def bloch_of(rho) -> NDArray[np.float64]:
    """Bloch vector (x, y, z) of a density matrix."""
    rho = np.asarray(rho, dtype=np.complex128)
    return np.array(
        [2 * rho[0, 1].real, -2 * rho[0, 1].imag, (rho[0, 0] - rho[1, 1]).real]
    )


def validate_state(rho, atol: float = ATOL) -> None:
    """Check that rho is Hermitian, unit trace, and positive semidefinite.

    Raises:
        ValueError: naming the violated property.
    """
    rho = np.asarray(rho, dtype=np.complex128)
    if rho.shape != (2, 2):
        raise ValueError(f"density matrix must be 2x2, got {rho.shape}")
    if not np.allclose(rho, rho.conj().T, atol=atol):
        raise ValueError("density matrix is not Hermitian")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > atol:
        raise ValueError(f"density matrix trace is {tr!r}, expected 1")
    # eigenvalues of a Hermitian 2x2: (t +- sqrt(t^2 - 4d))/2
    det = np.linalg.det(rho).real
    disc = max(tr * tr - 4 * det, 0.0)
    lam_min = (tr - disc**0.5) / 2
    if lam_min < -atol:
        raise ValueError(f"density matrix has negative eigenvalue {lam_min!r}")


@dataclass(frozen=True, eq=False)
class Povm:
    """A POVM: ordered elements summing to the identity, with outcome labels.

    Labels default to 1..n; all public outcome indexing is 1-based.
    """

    elements: tuple
    labels: tuple = field(default=())

    def __post_init__(self):
        elems = tuple(_frozen(e) for e in self.elements)
        object.__setattr__(self, "elements", elems)
        if not self.labels:
            object.__setattr__(self, "labels", tuple(range(1, len(elems) + 1)))
        if len(self.labels) != len(elems):
            raise ValueError("labels and elements must have equal length")

    def __len__(self) -> int:
        return len(self.elements)

    def validate(self, atol: float = ATOL) -> None:
        """Check each element is Hermitian PSD and the set sums to identity."""
        total = np.zeros((2, 2), dtype=np.complex128)
        for e in self.elements:
            if e.shape != (2, 2):
                raise ValueError("POVM element must be 2x2")
            if not np.allclose(e, e.conj().T, atol=atol):
                raise ValueError("POVM element is not Hermitian")
            tr = np.trace(e).real
            det = np.linalg.det(e).real
            disc = max(tr * tr - 4 * det, 0.0)
            if (tr - disc**0.5) / 2 < -atol:
                raise ValueError("POVM element has a negative eigenvalue")
            total = total + e
        if not np.allclose(total, I2, atol=atol):
            raise ValueError("POVM elements do not sum to the identity")


def born_probability(rho, element) -> float:
    """Outcome probability tr(rho E), clamped into [0, 1].

    Clamping absorbs roundoff from products of valid states and elements;
    callers may rely on the result being a legal probability.
    """
    p = float(np.einsum("ij,ji->", np.asarray(rho), np.asarray(element)).real)
    if p < 0.0:
        return 0.0
    if p > 1.0:
        return 1.0
    return p


def sqrt_psd_2x2(e) -> NDArray[np.complex128]:
    """Principal square root of a 2x2 Hermitian PSD matrix, closed form.

    Uses sqrt(E) = (E + sqrt(det) I) / sqrt(tr + 2 sqrt(det)), which follows
    from Cayley-Hamilton for 2x2 PSD matrices. The zero matrix maps to zero.
    """
    e = np.asarray(e, dtype=np.complex128)
    t = float(np.trace(e).real)
    d = float(np.linalg.det(e).real)
    if d < -ATOL:
        raise ValueError(f"matrix is not PSD: det = {d!r}")
    # determinant dust on a singular matrix would be amplified by the square
    # root (1e-17 becomes 3e-9), so snap near-rank-1 inputs to exact rank 1
    if d < 1e-14 * t * t:
        d = 0.0
    s = d**0.5
    denom2 = t + 2 * s
    if denom2 <= ATOL:
        return np.zeros((2, 2), dtype=np.complex128)
    return (e + s * I2) / denom2**0.5


def sqrt_post_measurement_state(rho, element) -> NDArray[np.complex128]:
    """State after obtaining `element`, using the square-root update rule.

    Returns sqrt(E) rho sqrt(E) normalized by its trace. This is the gentlest
    update consistent with the outcome statistics; for a rank-1 projector it
    reduces to projection, and for any multiple of the identity it leaves the
    state unchanged.

    Raises:
        ValueError: if the outcome has (numerically) zero probability, since
            the conditional state is then undefined.
    """
    p = born_probability(rho, element)
    if p < 1e-15:
        raise ValueError("conditional state undefined: outcome probability is zero")
    root = sqrt_psd_2x2(element)
    out = root @ np.asarray(rho, dtype=np.complex128) @ root
    return _frozen(out / np.trace(out).real)


def depolarize(rho, p):
    """Depolarizing channel: (1 - p) rho + p I/2.

    Args:
        rho: input density matrix.
        p: depolarization strength in [0, 1]; p = 1 erases all information.

    Raises:
        ValueError: if p is outside [0, 1].
    """
    pf = float(p)
    if not 0.0 <= pf <= 1.0:
        raise ValueError(f"depolarization strength must lie in [0, 1], got {p!r}")
    if pf == 0.0:
        return _frozen(np.asarray(rho, dtype=np.complex128))
    return _frozen((1.0 - pf) * np.asarray(rho, dtype=np.complex128) + pf * MIXED)


def sample_outcome(rho, povm: Povm, u: float):
    """Sample a measurement outcome by inverse CDF over the POVM's Born probabilities.

    Outcomes are scanned in element order; the outcome returned is the first
    whose cumulative probability exceeds u, so u = 0 selects the first outcome
    of nonzero probability and zero-probability outcomes are never returned.
    If roundoff leaves u at or beyond the total cumulative mass, the last
    nonzero-probability outcome is returned.

    Args:
        rho: state being measured.
        povm: measurement; probabilities are computed per element.
        u: uniform variate in [0, 1).

    Returns:
        The label (1-based by default) of the sampled outcome.
    """
    c = 0.0
    last_nonzero = None
    for label, e in zip(povm.labels, povm.elements):
        p = born_probability(rho, e)
        c += p
        if p > 0.0:
            last_nonzero = label
            if u < c:
                return label
    if last_nonzero is None:
        raise ValueError("all outcomes have zero probability")
    return last_nonzero
