"""Determinant and Pfaffian numerics with the bound checks used throughout.

Two independent Pfaffian routes are kept side by side: a numerically stable
skew elimination with partial pivoting (O(N^3)) and the literal combinatorial
sum over all permutations (exact definition, capped at dimension 10).  Laplace
expansions along rows/columns and the row/column-sum and norm-product bound
checks live here as well.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, ResourceLimitError, ValidationError

COMBINATORIAL_DIM_CAP = 10
SKEW_TOL = 1e-10
BOUND_TOL = 1e-12


def determinant(m: np.ndarray) -> complex:
    """Determinant via pivoted LU factorization; singular inputs give 0."""
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ParameterError(f"expected a square matrix, got shape {m.shape}")
    if m.shape[0] == 0:
        return 1.0 + 0.0j
    return complex(np.linalg.det(m))


def determinant_cofactor(m: np.ndarray) -> complex:
    """O(n!) cofactor recursion; independent cross-check for small matrices."""
    m = np.asarray(m, dtype=complex)
    n = m.shape[0]
    if n == 0:
        return 1.0 + 0.0j
    if n == 1:
        return complex(m[0, 0])
    total = 0.0 + 0.0j
    rest = np.arange(1, n)
    for j in range(n):
        cols = [c for c in range(n) if c != j]
        total += (-1) ** j * m[0, j] * determinant_cofactor(m[np.ix_(rest, cols)])
    return total


def _check_skew(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ParameterError(f"expected a square matrix, got shape {m.shape}")
    n = m.shape[0]
    if n % 2 != 0:
        raise ValidationError(f"skew-symmetric dimension must be even, got {n}")
    scale = float(np.abs(m).max(initial=0.0))
    if scale > 0 and np.abs(m + m.T).max(initial=0.0) > SKEW_TOL * scale:
        raise ValidationError("matrix is not skew-symmetric within tolerance")
    return m


def _pfaffian_parlett_reid(m: np.ndarray) -> complex:
    """Skew elimination with partial pivoting, permutation sign tracked."""
    a = m.copy()
    n = a.shape[0]
    pf = 1.0 + 0.0j
    for k in range(0, n - 1, 2):
        # pivot: move the largest entry of column k below the diagonal to row k+1
        kp = k + 1 + int(np.argmax(np.abs(a[k + 1 :, k])))
        if kp != k + 1:
            a[[k + 1, kp], :] = a[[kp, k + 1], :]
            a[:, [k + 1, kp]] = a[:, [kp, k + 1]]
            pf = -pf
        if a[k + 1, k] == 0.0:
            return 0.0 + 0.0j
        pf = pf * a[k, k + 1]
        if k + 2 < n:
            tau = a[k, k + 2 :] / a[k, k + 1]
            col = a[k + 2 :, k + 1]
            a[k + 2 :, k + 2 :] += np.outer(tau, col) - np.outer(col, tau)
    return complex(pf)


def _permutations_array(n: int) -> np.ndarray:
    flat = np.fromiter(
        itertools.chain.from_iterable(itertools.permutations(range(n))),
        dtype=np.int8,
        count=n * math.factorial(n),
    )
    return flat.reshape(-1, n)


def _permutation_signs(perms: np.ndarray) -> np.ndarray:
    n = perms.shape[1]
    inversions = np.zeros(perms.shape[0], dtype=np.int64)
    for i in range(n):
        for j in range(i + 1, n):
            inversions += perms[:, i] > perms[:, j]
    return 1 - 2 * (inversions & 1)


def _pfaffian_combinatorial(m: np.ndarray) -> complex:
    """Literal definition: (1 / 2^N N!) sum over all pi of sgn(pi) prod M[pi(2j-1), pi(2j)]."""
    n = m.shape[0]
    if n > COMBINATORIAL_DIM_CAP:
        raise ResourceLimitError(
            f"combinatorial pfaffian capped at dimension {COMBINATORIAL_DIM_CAP}, got {n}"
        )
    if n == 0:
        return 1.0 + 0.0j
    perms = _permutations_array(n)
    signs = _permutation_signs(perms)
    prod = np.ones(perms.shape[0], dtype=complex)
    for j in range(n // 2):
        prod *= m[perms[:, 2 * j], perms[:, 2 * j + 1]]
    half = n // 2
    norm = (2.0**half) * math.factorial(half)
    return complex(np.sum(signs * prod) / norm)


def pfaffian(m: np.ndarray, method: str = "stable") -> complex:
    """Pfaffian of an even-dimensional skew-symmetric complex matrix.

    ``method='stable'`` uses pivoted skew elimination; ``method='combinatorial'``
    evaluates the defining permutation sum (dimension capped).  Pf of the empty
    matrix is 1 by convention.
    """
    m = _check_skew(m)
    if method == "stable":
        return _pfaffian_parlett_reid(m)
    if method == "combinatorial":
        return _pfaffian_combinatorial(m)
    raise ParameterError(f"unknown pfaffian method {method!r}")


@dataclass(frozen=True)
class ExpansionReport:
    """Direct value vs Laplace expansion values along rows/columns."""

    direct: complex
    expansions: dict
    max_discrepancy: float


def laplace_expand_determinant(m: np.ndarray, index: int, axis: str = "row") -> ExpansionReport:
    """Expand det along one row or column: sum_n (-1)^(m+n) M[m,n] minor(m,n).

    ``index`` is 1-based like the textbook formula.
    """
    m = np.asarray(m, dtype=complex)
    n = m.shape[0]
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ParameterError(f"expected a square matrix, got shape {m.shape}")
    if not 1 <= index <= n:
        raise ParameterError(f"index must lie in 1..{n}, got {index}")
    if axis not in ("row", "column"):
        raise ParameterError(f"axis must be 'row' or 'column', got {axis!r}")
    i = index - 1
    direct = determinant(m)
    total = 0.0 + 0.0j
    for j in range(n):
        rows = [r for r in range(n) if r != (i if axis == "row" else j)]
        cols = [c for c in range(n) if c != (j if axis == "row" else i)]
        entry = m[i, j] if axis == "row" else m[j, i]
        total += (-1) ** (i + j) * entry * determinant(m[np.ix_(rows, cols)])
    disc = abs(total - direct)
    return ExpansionReport(direct, {f"{axis} {index}": complex(total)}, float(disc))


def laplace_expand_pfaffian(m: np.ndarray, row: int) -> ExpansionReport:
    """Expand Pf along row ``row`` (1-based):

        sum_{n != m} (-1)^(m+n+1+theta(m-n)) M[m,n] Pf(M with rows/cols m,n removed)

    with theta the Heaviside step.
    """
    m = _check_skew(m)
    n = m.shape[0]
    if not 1 <= row <= n:
        raise ParameterError(f"row must lie in 1..{n}, got {row}")
    direct = pfaffian(m)
    i = row - 1
    total = 0.0 + 0.0j
    for j in range(n):
        if j == i:
            continue
        keep = [k for k in range(n) if k not in (i, j)]
        theta = 1 if (row - (j + 1)) > 0 else 0
        sign = (-1) ** (row + (j + 1) + 1 + theta)
        total += sign * m[i, j] * pfaffian(m[np.ix_(keep, keep)])
    disc = abs(total - direct)
    return ExpansionReport(direct, {f"row {row}": complex(total)}, float(disc))


def det_row_column_bound(m: np.ndarray) -> tuple[float, bool, float]:
    """|det| against the smallest row/column sum of entry moduli.

    Holds for every kernel matrix generated by norm-one dressed vectors; the
    returned tuple is (bound, satisfied, margin).
    """
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ParameterError(f"expected a square matrix, got shape {m.shape}")
    mods = np.abs(m)
    bound = float(min(mods.sum(axis=1).min(), mods.sum(axis=0).min()))
    val = abs(determinant(m))
    tol = BOUND_TOL * max(1.0, bound)
    return bound, bool(val <= bound + tol), float(bound - val)


def pf_row_sum_bound(m: np.ndarray, row: int) -> tuple[float, bool]:
    """|Pf| against the sum of off-diagonal entry moduli of one row (1-based)."""
    m = _check_skew(m)
    n = m.shape[0]
    if not 1 <= row <= n:
        raise ParameterError(f"row must lie in 1..{n}, got {row}")
    bound = float(np.abs(m[row - 1]).sum())  # diagonal is zero for skew input
    val = abs(pfaffian(m))
    tol = BOUND_TOL * max(1.0, bound)
    return bound, bool(val <= bound + tol)


def norm_product_bound(value: complex, norms) -> tuple[bool, float]:
    """|det or Pf| divided by the product of generating vector norms, vs 1.

    Returns (satisfied, ratio); satisfied allows 1e-10 slack for rounding.
    """
    denom = float(np.prod(np.asarray(norms, dtype=float)))
    if denom <= 0:
        raise ParameterError("vector norms must be positive")
    ratio = abs(value) / denom
    return bool(ratio <= 1.0 + 1e-10), float(ratio)
