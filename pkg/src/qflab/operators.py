"""One-particle Hermitian operator calculus.

Everything here runs through a cached spectral decomposition H = U diag(lam) U*.
The central scalar family is the thermal symbol

    g(lam) = exp(w * lam) / (1 + exp(beta * lam)),   Re(w) in [0, beta],

which covers the filtered propagator exp(izH) chi_I(H) (1 + exp(beta H))^-1 for
all z = t - i s in the strip S_beta (there w = s + i t) as well as every ordered
two-point kernel of :mod:`qflab.kernels`.  The symbol is evaluated on a branch
split at lam = 0 so that no exponential with positive real exponent is formed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import NumericError, ParameterError, ValidationError

HERMITICITY_TOL = 1e-10
STRIP_TOL = 1e-12


@dataclass(frozen=True)
class ComplexTime:
    """Point z = t - i*s of the strip S_beta = R - i[0, beta].

    ``s`` is the depth into the strip; the signed imaginary part is -s.
    """

    t: float
    s: float = 0.0

    def __post_init__(self):
        if self.s < -STRIP_TOL:
            raise ParameterError(f"strip depth s must be >= 0, got {self.s}")

    @property
    def z(self) -> complex:
        return complex(self.t, -self.s)

    @property
    def imag(self) -> float:
        return -self.s

    def validate(self, beta: float) -> "ComplexTime":
        if self.s > beta + STRIP_TOL:
            raise ParameterError(f"time depth {self.s} exceeds strip depth beta={beta}")
        return self

    @classmethod
    def from_complex(cls, z: complex) -> "ComplexTime":
        return cls(float(np.real(z)), -float(np.imag(z)))


@dataclass(frozen=True)
class EnergyWindow:
    """Closed interval [lo, hi], or the full real line."""

    lo: float = -np.inf
    hi: float = np.inf

    # eigenvalues this close to an endpoint count as inside
    EDGE_TOL = 1e-12

    def __post_init__(self):
        if self.lo > self.hi:
            raise ParameterError(f"window must satisfy lo <= hi, got [{self.lo}, {self.hi}]")

    @classmethod
    def full(cls) -> "EnergyWindow":
        return cls(-np.inf, np.inf)

    @property
    def is_full(self) -> bool:
        return np.isneginf(self.lo) and np.isposinf(self.hi)

    def indicator(self, lam: np.ndarray) -> np.ndarray:
        """0/1 mask of eigenvalues inside the window (closed, with edge slack)."""
        lam = np.asarray(lam)
        return ((lam >= self.lo - self.EDGE_TOL) & (lam <= self.hi + self.EDGE_TOL)).astype(float)


class HermitianOperator:
    """Dense Hermitian matrix with lazily cached spectral data.

    Immutable after construction; safe to share across threads.
    """

    def __init__(self, matrix: np.ndarray):
        m = np.asarray(matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValidationError(f"expected a square matrix, got shape {m.shape}")
        scale = max(1.0, float(np.abs(m).max(initial=0.0)))
        if np.abs(m - m.conj().T).max(initial=0.0) > HERMITICITY_TOL * scale:
            raise ValidationError("matrix is not Hermitian within tolerance")
        self._m = 0.5 * (m + m.conj().T)
        self._m.flags.writeable = False
        self._eig: tuple[np.ndarray, np.ndarray] | None = None

    @property
    def matrix(self) -> np.ndarray:
        return self._m

    @property
    def dim(self) -> int:
        return self._m.shape[0]

    def eigensystem(self) -> tuple[np.ndarray, np.ndarray]:
        """Ascending eigenvalues and the unitary of eigenvectors (columns)."""
        if self._eig is None:
            lam, u = np.linalg.eigh(self._m)
            lam.flags.writeable = False
            u.flags.writeable = False
            self._eig = (lam, u)
        return self._eig

    def apply_function(self, f: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
        """U f(lam) U* via the cached eigensystem.

        ``f`` maps the eigenvalue vector to a vector of (complex) scalars.
        """
        lam, u = self.eigensystem()
        flam = np.asarray(f(lam), dtype=complex)
        if flam.shape != lam.shape:
            raise ParameterError("scalar function must return one value per eigenvalue")
        bad = ~np.isfinite(flam)
        if bad.any():
            raise NumericError(f"scalar function not finite at eigenvalue(s) {lam[bad][:5]}")
        return (u * flam) @ u.conj().T

    def norm(self) -> float:
        lam, _ = self.eigensystem()
        return float(np.abs(lam).max())


def eigendecompose(op: HermitianOperator) -> tuple[np.ndarray, np.ndarray]:
    """Spectral data of a Hermitian operator (eigenvalues ascending)."""
    return op.eigensystem()


def thermal_symbol(lam: np.ndarray, w: complex, beta: float) -> np.ndarray:
    """exp(w*lam) / (1 + exp(beta*lam)) without forming growing exponentials.

    Stable whenever Re(w) lies in [0, beta]; for lam > 0 the identity
    exp(w l)/(1+exp(b l)) = exp((w-b) l)/(1+exp(-b l)) is used.
    """
    lam = np.asarray(lam, dtype=float)
    out = np.empty(lam.shape, dtype=complex)
    neg = lam <= 0
    out[neg] = np.exp(w * lam[neg]) / (1.0 + np.exp(beta * lam[neg]))
    pos = ~neg
    out[pos] = np.exp((w - beta) * lam[pos]) / (1.0 + np.exp(-beta * lam[pos]))
    return out


def fermi_factor(lam: np.ndarray, beta: float) -> np.ndarray:
    """(1 + exp(beta*lam))^-1 on the stable branch per sign of lam."""
    return thermal_symbol(lam, 0.0, beta).real


def spectral_projection(op: HermitianOperator, window: EnergyWindow) -> np.ndarray:
    """chi_I(H) for an interval window (closed endpoints, documented edge rule)."""
    return op.apply_function(window.indicator)


def weighted_propagator(
    op: HermitianOperator, z: ComplexTime, beta: float, window: EnergyWindow
) -> np.ndarray:
    """exp(izH) chi_I(H) (1 + exp(beta H))^-1 for z in the strip S_beta.

    The operator norm of the result is at most 1 for any z in the strip.
    """
    if beta <= 0:
        raise ParameterError(f"beta must be positive, got {beta}")
    z.validate(beta)
    w = complex(z.s, z.t)  # exp(iz*lam) = exp((s + it) * lam)

    def symbol(lam):
        return thermal_symbol(lam, w, beta) * window.indicator(lam)

    return op.apply_function(symbol)
