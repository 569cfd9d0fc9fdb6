"""Exact Fock-space oracle for quasi-free thermal expectations.

Everything is brute force on the 2^n-dimensional Fock space of n modes, so it
is slow and small by design: it exists to validate the closed-form kernels and
the Wick determinant/Pfaffian identities, never to run experiments.

Construction notes
------------------
* Mode operators carry the usual fermionic sign string over lower mode indices;
  the canonical anticommutation relations hold to rounding.
* Work happens in the eigenbasis of the one-particle Hamiltonian: the many-body
  Hamiltonian is then diagonal with energies sum_{k occupied} lam_k, and Gibbs
  weights are formed as exp(-beta (E - E_ground)) to avoid overflow.
* Complex-time factors evolve the one-particle argument (creation vectors pick
  up exp(iz lam), annihilation vectors exp(iz* lam)); the Fock-space propagator
  itself is never exponentiated at complex times.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ParameterError, ResourceLimitError
from .operators import ComplexTime, HermitianOperator
from .pfaffian import determinant, pfaffian

MODE_CAP = 10

CREATION = "creation"
ANNIHILATION = "annihilation"
FIELD = "field"


@dataclass(frozen=True)
class DressedVector:
    """One-particle vector with an attached complex time, flavor and phase.

    ``phase`` multiplies the vector by i**phase; it is how the second Majorana
    flavor enters the Pfaffian experiments.
    """

    vector: np.ndarray
    time: ComplexTime
    flavor: str = CREATION
    phase: int = 0

    def __post_init__(self):
        if self.flavor not in (CREATION, ANNIHILATION, FIELD):
            raise ParameterError(f"unknown flavor {self.flavor!r}")
        if self.phase not in (0, 1):
            raise ParameterError(f"phase exponent must be 0 or 1, got {self.phase}")
        v = np.asarray(self.vector, dtype=complex)
        if self.phase:
            v = 1j * v
        v.flags.writeable = False
        object.__setattr__(self, "vector", v)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.vector))


def _parity_sign(state: int, mode: int) -> int:
    mask = (1 << mode) - 1
    return -1 if bin(state & mask).count("1") % 2 else 1


def _mode_lowering(n_modes: int, mode: int) -> np.ndarray:
    """Dense matrix of the annihilation operator for one mode (bit = occupation)."""
    dim = 1 << n_modes
    a = np.zeros((dim, dim), dtype=complex)
    bit = 1 << mode
    for s in range(dim):
        if s & bit:
            a[s ^ bit, s] = _parity_sign(s, mode)
    return a


class FockRep:
    """Fock representation over the eigenmodes of a one-particle Hamiltonian."""

    def __init__(self, op: HermitianOperator):
        n = op.dim
        if n > MODE_CAP:
            raise ResourceLimitError(f"fock oracle capped at {MODE_CAP} modes, got {n}")
        self.operator = op
        self.n_modes = n
        self.eigenvalues, self.basis = op.eigensystem()
        self._lower = [_mode_lowering(n, k) for k in range(n)]
        # diagonal many-body energies: occupation-weighted eigenvalue sums
        dim = 1 << n
        occ = ((np.arange(dim)[:, None] >> np.arange(n)[None, :]) & 1).astype(float)
        self.energies = occ @ self.eigenvalues

    def lowering(self, mode: int) -> np.ndarray:
        return self._lower[mode]

    def annihilator(self, phi: np.ndarray) -> np.ndarray:
        """a(phi) = sum_k conj(coeff_k) a_k in the eigenmode basis (antilinear)."""
        psi = self.basis.conj().T @ np.asarray(phi, dtype=complex)
        out = np.zeros_like(self._lower[0])
        for k in range(self.n_modes):
            c = np.conj(psi[k])
            if c != 0:
                out += c * self._lower[k]
        return out

    def creator(self, phi: np.ndarray) -> np.ndarray:
        return self.annihilator(phi).conj().T

    def gibbs_weights(self, beta: float) -> np.ndarray:
        e0 = float(self.energies.min())
        return np.exp(-beta * (self.energies - e0))

    def evolved_factor(self, dv: DressedVector, beta: float) -> np.ndarray:
        """Fock matrix of one complex-time factor.

        Creation uses exp(iz lam) on the eigenmode coefficients, annihilation
        exp(i z* lam); a field factor is the sum of both on the same vector.
        """
        dv.time.validate(beta)
        z = dv.time.z
        psi = self.basis.conj().T @ dv.vector
        ev_cr = np.exp(1j * z * self.eigenvalues)
        if dv.flavor == CREATION:
            coeff = ev_cr * psi
            return self._build(coeff, create=True)
        if dv.flavor == ANNIHILATION:
            coeff = np.exp(1j * np.conj(z) * self.eigenvalues) * psi
            return self._build(coeff, create=False)
        coeff_cr = ev_cr * psi
        coeff_an = np.exp(1j * np.conj(z) * self.eigenvalues) * psi
        return self._build(coeff_cr, create=True) + self._build(coeff_an, create=False)

    def _build(self, coeff: np.ndarray, create: bool) -> np.ndarray:
        out = np.zeros_like(self._lower[0])
        for k in range(self.n_modes):
            if coeff[k] == 0:
                continue
            if create:
                out += coeff[k] * self._lower[k].conj().T
            else:
                out += np.conj(coeff[k]) * self._lower[k]
        return out


def build_fock(op: HermitianOperator) -> FockRep:
    return FockRep(op)


def permutation_sign(perm: Sequence[int]) -> int:
    inv = 0
    p = list(perm)
    for i in range(len(p)):
        for j in range(i + 1, len(p)):
            if p[i] > p[j]:
                inv += 1
    return -1 if inv % 2 else 1


@dataclass(frozen=True)
class OrderedMonomial:
    """Factors with a permutation placing factor j at product slot perm[j].

    ``perm`` is 0-based over the factor list; the realized operator is
    sgn(perm) * F_{perm^-1(0)} F_{perm^-1(1)} ... as in the signed monomial
    convention.
    """

    factors: tuple[DressedVector, ...]
    perm: tuple[int, ...]

    def __post_init__(self):
        m = len(self.factors)
        if sorted(self.perm) != list(range(m)):
            raise ParameterError(f"perm must be a permutation of 0..{m - 1}")

    @property
    def sign(self) -> int:
        return permutation_sign(self.perm)

    def product_order(self) -> list[int]:
        """Factor indices read left to right in the realized product."""
        inverse = [0] * len(self.perm)
        for j, p in enumerate(self.perm):
            inverse[p] = j
        return inverse


def gibbs_expectation(rep: FockRep, beta: float, monomial: OrderedMonomial) -> complex:
    """Thermal expectation of the signed, ordered product of dressed factors."""
    if beta <= 0:
        raise ParameterError(f"beta must be positive, got {beta}")
    w = rep.gibbs_weights(beta)
    z = w.sum()
    if not monomial.factors:
        return 1.0 + 0.0j
    mats = [rep.evolved_factor(f, beta) for f in monomial.factors]
    prod = None
    for j in monomial.product_order():
        prod = mats[j] if prod is None else prod @ mats[j]
    value = np.dot(w, np.diagonal(prod)) / z
    return complex(monomial.sign * value)


def _display_order(n_pairs: int) -> list[int]:
    """Factor labels in the determinant display order 1..N, 2N..N+1 (0-based)."""
    n = n_pairs
    return list(range(n)) + list(range(2 * n - 1, n - 1, -1))


def _positional_perm(label_perm: Sequence[int], display: Sequence[int]) -> tuple[int, ...]:
    """Convert a label-indexed permutation to list positions of ``display``."""
    return tuple(label_perm[lab] for lab in display)


def wick_determinant_check(
    rep: FockRep,
    beta: float,
    vectors: Sequence[np.ndarray],
    times: Sequence[ComplexTime],
    label_perm: Sequence[int],
) -> tuple[complex, complex, float]:
    """Wick identity: det of pairwise ordered two-point values vs the full product.

    ``vectors``/``times`` hold 2N entries; labels 0..N-1 are creation factors and
    N..2N-1 annihilation factors.  ``label_perm`` maps each label to its product
    position; entry (k, l) of the matrix pairs labels (k, N+l) ordered by the
    permutation, i.e. kept if perm[k] < perm[N+l], else swapped with a sign.
    Returns (determinant, oracle value, |difference|).
    """
    m = len(vectors)
    if m % 2 != 0 or m == 0:
        raise ParameterError("need an even, positive number of vectors")
    n = m // 2
    if len(times) != m or len(label_perm) != m:
        raise ParameterError("vectors, times and permutation must have equal length")

    def factor(label: int) -> DressedVector:
        flavor = CREATION if label < n else ANNIHILATION
        return DressedVector(vectors[label], times[label], flavor)

    mat = np.zeros((n, n), dtype=complex)
    for k in range(n):
        for l in range(n):
            a, b = factor(k), factor(n + l)
            if label_perm[k] < label_perm[n + l]:
                mono = OrderedMonomial((a, b), (0, 1))
            else:
                mono = OrderedMonomial((a, b), (1, 0))
            mat[k, l] = gibbs_expectation(rep, beta, mono)
    lhs = determinant(mat)

    display = _display_order(n)
    factors = tuple(factor(lab) for lab in display)
    mono = OrderedMonomial(factors, _positional_perm(label_perm, display))
    rhs = gibbs_expectation(rep, beta, mono)
    return lhs, rhs, abs(lhs - rhs)


def wick_pfaffian_check(
    rep: FockRep,
    beta: float,
    vectors: Sequence[np.ndarray],
    times: Sequence[ComplexTime],
    label_perm: Sequence[int],
    phases: Sequence[int] | None = None,
) -> tuple[complex, complex, float]:
    """Wick identity for field operators: Pf of ordered pair values vs the product.

    All 2N factors are field flavored; entry (k, l) is the expectation of the
    pair ordered by the permutation (kept if perm[k] < perm[l]), the diagonal
    is zero, and the matrix is skew by construction.
    """
    m = len(vectors)
    if m % 2 != 0 or m == 0:
        raise ParameterError("need an even, positive number of vectors")
    if len(times) != m or len(label_perm) != m:
        raise ParameterError("vectors, times and permutation must have equal length")
    phases = list(phases) if phases is not None else [0] * m

    def factor(label: int) -> DressedVector:
        return DressedVector(vectors[label], times[label], FIELD, phases[label])

    mat = np.zeros((m, m), dtype=complex)
    for k in range(m):
        for l in range(k + 1, m):
            a, b = factor(k), factor(l)
            if label_perm[k] < label_perm[l]:
                mono = OrderedMonomial((a, b), (0, 1))
            else:
                mono = OrderedMonomial((a, b), (1, 0))
            mat[k, l] = gibbs_expectation(rep, beta, mono)
            mat[l, k] = -mat[k, l]
    lhs = pfaffian(mat)

    factors = tuple(factor(lab) for lab in range(m))
    mono = OrderedMonomial(factors, tuple(label_perm))
    rhs = gibbs_expectation(rep, beta, mono)
    return lhs, rhs, abs(lhs - rhs)
