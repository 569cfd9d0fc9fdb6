"""Complex-time-ordered two-point kernels and their matrix assembly.

The ordering rule: a pair at times (z1, z2) keeps its order when
Im(z1) <= Im(z2) and is swapped with a minus sign otherwise, where
Im(t - is) = -s is read as a signed value.  Ties take the kept branch.

Closed forms (phi1 creation side, phi2 annihilation side):

    kept:    <phi2, exp(i(z1-z2) H) (1 + exp(beta H))^-1 phi1>
    swapped: -<phi2, exp((beta + i(z1-z2)) H) (1 + exp(beta H))^-1 phi1>

Both are a single thermal symbol with exponent of real part inside [0, beta];
matrices are never formed by multiplying separately exponentiated factors.
The field kernel expands B(phi) = a*(phi) + a(phi) and keeps the two surviving
gauge-invariant terms, each again one thermal symbol.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ParameterError
from .fock import ANNIHILATION, CREATION, FIELD, DressedVector
from .operators import ComplexTime, EnergyWindow, HermitianOperator, thermal_symbol
from .pfaffian import determinant, norm_product_bound, pfaffian


def time_order(z1: ComplexTime, z2: ComplexTime) -> tuple[bool, int]:
    """(first_then_second, sign): kept order with +1 iff Im(z1) <= Im(z2)."""
    if z1.imag <= z2.imag:
        return True, 1
    return False, -1


def evolve(dv: DressedVector, op: HermitianOperator) -> np.ndarray:
    """Complex-time evolution of the one-particle argument.

    Creation vectors evolve with exp(izH), annihilation vectors with the
    conjugated time exp(iz*H); field flavor has no single evolved vector.
    """
    if dv.flavor == FIELD:
        raise ParameterError("field flavor evolves as a sum of both flavors; "
                             "evolve creation/annihilation parts separately")
    z = dv.time.z if dv.flavor == CREATION else np.conj(dv.time.z)
    return op.apply_function(lambda lam: np.exp(1j * z * lam)) @ dv.vector


def _sandwich(op: HermitianOperator, w: complex, beta: float,
              left: np.ndarray, right: np.ndarray) -> complex:
    """<left, exp(wH)(1+exp(beta H))^-1 right> via one scalar symbol."""
    lam, u = op.eigensystem()
    a = u.conj().T @ left
    b = u.conj().T @ right
    return complex(np.sum(np.conj(a) * thermal_symbol(lam, w, beta) * b))


def pair_correlation_ordered(
    op: HermitianOperator,
    beta: float,
    phi1: np.ndarray,
    z1: ComplexTime,
    phi2: np.ndarray,
    z2: ComplexTime,
    first_then_second: bool,
) -> complex:
    """Expectation of the ordered pair (creation at z1, annihilation at z2).

    The kept order gives rho(tau_z1(a*(phi1)) tau_z2(a(phi2))); the swapped
    order carries the fermionic minus sign.  The branch flag is explicit so
    time orderings induced by a permutation (not by Im comparison) can reuse
    the same closed forms.
    """
    z1.validate(beta)
    z2.validate(beta)
    dz = z1.z - z2.z
    if first_then_second:
        return _sandwich(op, 1j * dz, beta, phi2, phi1)
    return -_sandwich(op, beta + 1j * dz, beta, phi2, phi1)


def two_point(
    op: HermitianOperator,
    beta: float,
    left: DressedVector,
    right: DressedVector,
) -> complex:
    """Time-ordered two-point function of a creation/annihilation pair."""
    if left.flavor != CREATION or right.flavor != ANNIHILATION:
        raise ParameterError("two_point expects (creation, annihilation) flavors")
    kept, _ = time_order(left.time, right.time)
    return pair_correlation_ordered(
        op, beta, left.vector, left.time, right.vector, right.time, kept
    )


def field_pair_terms(
    op: HermitianOperator,
    beta: float,
    phi1: np.ndarray,
    z1: ComplexTime,
    phi2: np.ndarray,
    z2: ComplexTime,
) -> tuple[complex, complex]:
    """The two gauge-invariant terms of rho(tau_z1(B(phi1)) tau_z2(B(phi2))).

    Term 1 is the a* a contraction, term 2 the a a* contraction:

        t1 = <phi2, exp(i(z1-z2) H) (1+exp(beta H))^-1 phi1>
        t2 = <phi1, exp((beta + i(z2-z1)) H) (1+exp(beta H))^-1 phi2>

    (the a a* closed form is validated against the Fock oracle in the tests).
    Under phases i^p1, i^p2 the terms scale as i^(p1-p2) and i^(p2-p1).
    """
    z1.validate(beta)
    z2.validate(beta)
    dz = z1.z - z2.z
    t1 = _sandwich(op, 1j * dz, beta, phi2, phi1)
    t2 = _sandwich(op, beta - 1j * dz, beta, phi1, phi2)
    return t1, t2


def field_two_point(
    op: HermitianOperator,
    beta: float,
    left: DressedVector,
    right: DressedVector,
) -> complex:
    """Time-ordered two-point function of two field operators.

    Antisymmetric under argument exchange whenever the imaginary parts differ;
    on ties both orders take the kept branch.
    """
    if left.flavor != FIELD or right.flavor != FIELD:
        raise ParameterError("field_two_point expects two field-flavor vectors")
    kept, _ = time_order(left.time, right.time)
    # phase factors are already folded into DressedVector.vector, and the
    # sesquilinear terms inherit them as i^(p1-p2) / i^(p2-p1) automatically
    if kept:
        t1, t2 = field_pair_terms(op, beta, left.vector, left.time, right.vector, right.time)
        return t1 + t2
    t1, t2 = field_pair_terms(op, beta, right.vector, right.time, left.vector, left.time)
    return -(t1 + t2)


@dataclass(frozen=True)
class KernelMatrix:
    """N x N matrix of ordered two-point values plus its generating vectors."""

    matrix: np.ndarray
    norms: tuple[float, ...]

    @property
    def size(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class SkewKernelMatrix:
    """2N x 2N field-kernel matrix, exactly skew by construction (zero diagonal)."""

    matrix: np.ndarray
    norms: tuple[float, ...]

    def __post_init__(self):
        m = self.matrix
        if m.shape[0] % 2 != 0:
            raise ParameterError("skew kernel matrix must have even dimension")
        if np.abs(m + m.T).max(initial=0.0) != 0.0:
            raise ParameterError("matrix must be exactly skew-symmetric")

    @property
    def size(self) -> int:
        return self.matrix.shape[0]


def universal_bound_check(km: "KernelMatrix | SkewKernelMatrix") -> tuple[bool, float]:
    """|det| (kernel) or |Pf| (skew kernel) against the product of vector norms.

    Returns (satisfied, ratio); the ratio never exceeds one for matrices built
    from the thermal state, up to rounding slack.
    """
    if isinstance(km, SkewKernelMatrix):
        value = pfaffian(km.matrix)
    elif isinstance(km, KernelMatrix):
        value = determinant(km.matrix)
    else:
        raise ParameterError("expected a KernelMatrix or SkewKernelMatrix")
    return norm_product_bound(value, km.norms)


def _window_vectors(
    op: HermitianOperator, window: EnergyWindow, box, sites, spins
) -> list[np.ndarray]:
    """chi_I(H) applied to the requested basis vectors."""
    lam, u = op.eigensystem()
    chi = window.indicator(lam)
    vecs = []
    for x, sigma in zip(sites, spins):
        e = box.basis_vector(x, sigma)
        vecs.append((u * chi) @ (u.conj().T @ e))
    return vecs


def assemble_correlation_matrix(
    op: HermitianOperator,
    beta: float,
    window: EnergyWindow,
    box,
    sites: Sequence,
    spins: Sequence[int],
    times: Sequence[ComplexTime],
) -> KernelMatrix:
    """Kernel matrix with entry (k, l) pairing index k with index N+l.

    ``sites``/``spins``/``times`` have length 2N: the first N label the
    creation side, the last N the annihilation side; every vector passes
    through the spectral window first.
    """
    m = len(sites)
    if m % 2 != 0 or m == 0:
        raise ParameterError("need an even, positive number of sites")
    if len(spins) != m or len(times) != m:
        raise ParameterError("sites, spins and times must have equal length")
    n = m // 2
    vecs = _window_vectors(op, window, box, sites, spins)
    mat = np.zeros((n, n), dtype=complex)
    for k in range(n):
        for l in range(n):
            left = DressedVector(vecs[k], times[k], CREATION)
            right = DressedVector(vecs[n + l], times[n + l], ANNIHILATION)
            mat[k, l] = two_point(op, beta, left, right)
    norms = tuple(float(np.linalg.norm(v)) for v in vecs)
    return KernelMatrix(mat, norms)


def assemble_field_matrix(
    op: HermitianOperator,
    beta: float,
    window: EnergyWindow,
    box,
    sites: Sequence,
    spins: Sequence[int],
    phases: Sequence[int],
    times: Sequence[ComplexTime],
) -> SkewKernelMatrix:
    """Skew field-kernel matrix: upper triangle evaluated, mirrored with a sign.

    Entry (k, l), k < l, is the ordered field two-point value of vectors
    i^(p_k) chi_I(H) e_k and i^(p_l) chi_I(H) e_l; the diagonal is forced to
    zero (the Pfaffian never reads it).
    """
    m = len(sites)
    if m % 2 != 0 or m == 0:
        raise ParameterError("need an even, positive number of sites")
    if not (len(spins) == len(phases) == len(times) == m):
        raise ParameterError("sites, spins, phases and times must have equal length")
    vecs = _window_vectors(op, window, box, sites, spins)
    mat = np.zeros((m, m), dtype=complex)
    for k in range(m):
        for l in range(k + 1, m):
            left = DressedVector(vecs[k], times[k], FIELD, phases[k])
            right = DressedVector(vecs[l], times[l], FIELD, phases[l])
            mat[k, l] = field_two_point(op, beta, left, right)
            mat[l, k] = -mat[k, l]
    norms = tuple(float(np.linalg.norm(v)) for v in vecs)
    return SkewKernelMatrix(mat, norms)
