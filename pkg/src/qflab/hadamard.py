"""Tube/simplex machinery: ordering permutations, the cumulative-time
correlator, log-sups over grids, and convexity / boundary-maximum checks.

The tube of depth beta over n complex arguments restricts the vector of
imaginary parts to the simplex

    K_n = { s in [-beta, 0]^n : s_1 + ... + s_n >= -beta }.

The central object is the ordered 2N-point correlator whose factor with label
j receives the cumulative argument xi_1 + ... + xi_{2N - pi(j) + 1}; it is
analytic on the tube, invariant under a common real shift (only xi_1 shifts
all factors), and its log-sup along horizontal grid slices is convex in the
imaginary parts up to grid resolution.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ParameterError
from .fock import (
    ANNIHILATION,
    CREATION,
    DressedVector,
    FockRep,
    OrderedMonomial,
    gibbs_expectation,
    permutation_sign,
)
from .operators import ComplexTime, HermitianOperator

STRIP_TOL = 1e-9


def time_ordering_permutation(times: Sequence[ComplexTime], mode: str) -> tuple[int, ...]:
    """Product position of each time label under the ordering rules (0-based).

    ``mode='pfaffian'``: position ascending in Im, ties broken by label.
    ``mode='determinant'``: 2N labels split into a creation half (first N) and
    an annihilation half; positions ascend in Im with cross-half ties placing
    the creation label first, and each half internally keeps label order on
    ties.  Both modes are deterministic.
    """
    m = len(times)
    if mode == "pfaffian":
        keys = [(t.imag, j) for j, t in enumerate(times)]
    elif mode == "determinant":
        if m % 2 != 0:
            raise ParameterError("determinant mode needs an even number of times")
        half = m // 2
        keys = [(t.imag, 0 if j < half else 1, j) for j, t in enumerate(times)]
    else:
        raise ParameterError(f"unknown ordering mode {mode!r}")
    order = sorted(range(m), key=lambda j: keys[j])
    perm = [0] * m
    for pos, j in enumerate(order):
        perm[j] = pos
    return tuple(perm)


def simplex_contains(s: np.ndarray, beta: float, tol: float = STRIP_TOL) -> bool:
    """Membership of the imaginary-part vector in K_n."""
    s = np.asarray(s, dtype=float)
    return bool(
        (s <= tol).all() and (s >= -beta - tol).all() and s.sum() >= -beta - tol
    )


def cumulative_times(perm: Sequence[int], xis: np.ndarray) -> np.ndarray:
    """Argument of each factor label: partial sum of xis by product position.

    The factor at product position p receives xi_1 + ... + xi_{m - p} summed
    0-based, so the leftmost factor collects every increment and the rightmost
    only the first.
    """
    xis = np.asarray(xis, dtype=complex)
    m = len(perm)
    if xis.shape[-1] != m:
        raise ParameterError("need one increment per factor")
    csum = np.cumsum(xis, axis=-1)
    counts = np.array([m - p for p in perm])  # terms per label
    return csum[..., counts - 1]


@dataclass(frozen=True)
class TubeFunction:
    """Bounded continuous function on the tube, callable on batches of points.

    ``fn`` maps an (G, n) complex array to (G,) complex values.
    """

    fn: Callable[[np.ndarray], np.ndarray]
    n_args: int
    beta: float
    bound: float | None = None

    def __call__(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=complex))
        if pts.shape[-1] != self.n_args:
            raise ParameterError(f"expected points with {self.n_args} coordinates")
        return np.asarray(self.fn(pts), dtype=complex).reshape(pts.shape[0])


class CumulativeCorrelator:
    """Ordered 2N-point thermal correlator with cumulative complex arguments.

    Labels 0..N-1 are creation factors, N..2N-1 annihilation factors; the
    permutation fixes both the factor order and the pairwise orderings of the
    equivalent two-point determinant (fast path).  The fast path and the Fock
    oracle agree to rounding, which the tests pin.
    """

    def __init__(
        self,
        op: HermitianOperator,
        beta: float,
        vectors: Sequence[np.ndarray],
        perm: Sequence[int] | None = None,
    ):
        m = len(vectors)
        if m % 2 != 0 or m == 0:
            raise ParameterError("need an even, positive number of vectors")
        self.op = op
        self.beta = float(beta)
        self.vectors = [np.asarray(v, dtype=complex) for v in vectors]
        self.n_pairs = m // 2
        self.perm = tuple(perm) if perm is not None else tuple(range(m))
        if sorted(self.perm) != list(range(m)):
            raise ParameterError("perm must be a permutation of the factor labels")
        lam, u = op.eigensystem()
        self._lam = lam
        coeff = [u.conj().T @ v for v in self.vectors]
        # per matrix entry (k, l): weights conj(psi_{N+l}) * psi_k and branch
        n = self.n_pairs
        self._weights = np.empty((n, n, lam.size), dtype=complex)
        self._kept = np.empty((n, n), dtype=bool)
        for k in range(n):
            for l in range(n):
                self._weights[k, l] = np.conj(coeff[n + l]) * coeff[k]
                self._kept[k, l] = self.perm[k] < self.perm[n + l]

    @property
    def norm_product(self) -> float:
        return float(np.prod([np.linalg.norm(v) for v in self.vectors]))

    def _validate(self, points: np.ndarray):
        im = points.imag
        total = im.sum(axis=-1)
        if (im > STRIP_TOL).any() or (im < -self.beta - STRIP_TOL).any() or (
            total < -self.beta - STRIP_TOL
        ).any():
            raise ParameterError("increments leave the tube of depth beta")

    def _symbol_batch(self, wexp: np.ndarray) -> np.ndarray:
        """exp(w * lam) / (1 + exp(beta * lam)) on the overflow-safe branch."""
        lam = self._lam
        beta = self.beta
        out = np.empty((wexp.size, lam.size), dtype=complex)
        neg = lam <= 0
        out[:, neg] = np.exp(np.outer(wexp, lam[neg])) / (1.0 + np.exp(beta * lam[neg]))
        pos = ~neg
        out[:, pos] = np.exp(np.outer(wexp - beta, lam[pos])) / (
            1.0 + np.exp(-beta * lam[pos])
        )
        return out

    def value_batch(self, points: np.ndarray) -> np.ndarray:
        """Fast path: determinant of pairwise ordered two-point values."""
        pts = np.atleast_2d(np.asarray(points, dtype=complex))
        self._validate(pts)
        times = cumulative_times(self.perm, pts)  # (G, 2N)
        n = self.n_pairs
        g = pts.shape[0]
        mats = np.empty((g, n, n), dtype=complex)
        for k in range(n):
            for l in range(n):
                dz = times[:, k] - times[:, n + l]
                if self._kept[k, l]:
                    sym = self._symbol_batch(1j * dz)
                    mats[:, k, l] = sym @ self._weights[k, l]
                else:
                    sym = self._symbol_batch(self.beta + 1j * dz)
                    mats[:, k, l] = -(sym @ self._weights[k, l])
        return np.linalg.det(mats)

    def value(self, xis: Sequence[complex]) -> complex:
        return complex(self.value_batch(np.asarray(xis, dtype=complex)[None, :])[0])

    def oracle_value(self, rep: FockRep, xis: Sequence[complex]) -> complex:
        """Same correlator through the Fock oracle (verification scale only)."""
        xis = np.asarray(xis, dtype=complex)
        self._validate(xis[None, :])
        times = cumulative_times(self.perm, xis)
        n = self.n_pairs
        labels = list(range(n)) + list(range(2 * n - 1, n - 1, -1))
        factors = []
        for lab in labels:
            flavor = CREATION if lab < n else ANNIHILATION
            t = ComplexTime(float(times[lab].real), -float(times[lab].imag))
            factors.append(DressedVector(self.vectors[lab], t, flavor))
        perm_pos = tuple(self.perm[lab] for lab in labels)
        return gibbs_expectation(rep, self.beta, OrderedMonomial(tuple(factors), perm_pos))

    def _positioned_factor(self, position: int, time: complex) -> DressedVector:
        """Factor occupying a given product position, at an explicit time."""
        m = 2 * self.n_pairs
        inverse = [0] * m
        for j, p in enumerate(self.perm):
            inverse[p] = j
        label = inverse[position]
        flavor = CREATION if label < self.n_pairs else ANNIHILATION
        t = ComplexTime(float(np.real(time)), -float(np.imag(time)))
        return DressedVector(self.vectors[label], t, flavor)

    def exchange_pair(self, rep: FockRep, t_real: np.ndarray, k: int) -> tuple[complex, complex]:
        """Both sides of the thermal cyclic-exchange identity, 1-based slot k.

        Left side: the correlator with increment k pushed down by i*beta, which
        shifts every factor whose cumulative argument contains it (the leading
        block of the product).  Right side: that block moved to the end of the
        product at unshifted real times -- the exchange the equilibrium state
        satisfies exactly.
        """
        m = 2 * self.n_pairs
        t_real = np.asarray(t_real, dtype=float)
        lhs_args = t_real.astype(complex)
        lhs_args[k - 1] -= 1j * self.beta
        lhs = self.oracle_value(rep, lhs_args)

        times = cumulative_times(self.perm, t_real.astype(complex))
        pos_times = [0.0] * m
        for lab in range(m):
            pos_times[self.perm[lab]] = times[lab]
        shifted_block_end = m - k  # 0-based positions 0..m-k carry increment k
        order = list(range(shifted_block_end + 1, m)) + list(range(0, shifted_block_end + 1))
        factors = tuple(self._positioned_factor(p, pos_times[p]) for p in order)
        plain = gibbs_expectation(rep, self.beta, OrderedMonomial(factors, tuple(range(m))))
        # oracle_value carries the display-relative sign; reproduce it here
        n = self.n_pairs
        labels = list(range(n)) + list(range(2 * n - 1, n - 1, -1))
        disp_sign = permutation_sign(tuple(self.perm[lab] for lab in labels))
        rhs = disp_sign * plain
        return lhs, rhs

    def as_tube_function(self) -> TubeFunction:
        return TubeFunction(self.value_batch, 2 * self.n_pairs, self.beta, self.norm_product)


def upsilon(
    op: HermitianOperator,
    beta: float,
    vectors: Sequence[np.ndarray],
    perm: Sequence[int],
    xis: Sequence[complex],
    rep: FockRep | None = None,
) -> complex:
    """Ordered correlator at one tube point; oracle-evaluated when a Fock
    representation is supplied, closed-form otherwise."""
    corr = CumulativeCorrelator(op, beta, vectors, perm)
    if rep is not None:
        return corr.oracle_value(rep, xis)
    return corr.value(xis)


def product_grid(axes: Sequence[np.ndarray]) -> np.ndarray:
    """Cartesian product of per-axis real grids, shaped (G, n)."""
    mesh = np.meshgrid(*[np.asarray(a, dtype=float) for a in axes], indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def log_grid_sup(f: TubeFunction, s: np.ndarray, t_grid: np.ndarray) -> float:
    """ln max over the grid of |f(t + i s)|, with ln 0 = -inf.

    A finer grid never decreases the value (it is a max), so grid values are
    certified lower bounds of the true sup along the slice.
    """
    s = np.asarray(s, dtype=float)
    t = np.atleast_2d(np.asarray(t_grid, dtype=float))
    if t.shape[0] == 0:
        raise ParameterError("t grid must be nonempty")
    if t.shape[1] != f.n_args or s.shape != (f.n_args,):
        raise ParameterError("grid and imaginary parts must match the arity of f")
    vals = np.abs(f(t + 1j * s[None, :]))
    if not np.isfinite(vals).all():
        raise ParameterError("function not finite on the grid")
    top = float(vals.max())
    return -np.inf if top == 0.0 else float(np.log(top))


def polished_grid_sup(
    f: TubeFunction,
    s: np.ndarray,
    t_grid: np.ndarray,
    spacing: float,
    free_axes: Sequence[int] | None = None,
    rounds: int = 3,
    points: int = 33,
) -> float:
    """Grid sup followed by local coordinate refinement around the argmax.

    Extra evaluation points only ever raise a grid max, so the result is still
    a certified lower bound of the true sup, just a much tighter one.
    """
    s = np.asarray(s, dtype=float)
    t = np.atleast_2d(np.asarray(t_grid, dtype=float))
    vals = np.abs(f(t + 1j * s[None, :]))
    i0 = int(np.argmax(vals))
    best = float(vals[i0])
    best_t = t[i0].copy()
    axes = list(free_axes) if free_axes is not None else list(range(f.n_args))
    width = spacing
    for _ in range(rounds):
        for ax in axes:
            local = np.repeat(best_t[None, :], points, axis=0)
            local[:, ax] = best_t[ax] + np.linspace(-width, width, points)
            lv = np.abs(f(local + 1j * s[None, :]))
            i = int(np.argmax(lv))
            if lv[i] > best:
                best = float(lv[i])
                best_t = local[i]
        width /= points - 1
    return -np.inf if best == 0.0 else float(np.log(best))


@dataclass(frozen=True)
class ConvexityReport:
    n_pairs: int
    violations: tuple[float, ...]
    worst_violation: float
    passed: bool
    grid_span: float
    grid_spacing: float


def convexity_check(
    f: TubeFunction,
    pairs: Sequence[tuple[np.ndarray, np.ndarray]],
    alpha_grid: Sequence[float],
    t_grid: np.ndarray,
    tol: float,
    spacing: float | None = None,
    free_axes: Sequence[int] | None = None,
) -> ConvexityReport:
    """Convexity of the log-sup along simplex segments, on matched grids.

    For each pair (s, s') and every alpha, the violation is
    B(alpha s' + (1-alpha) s) - [alpha B(s') + (1-alpha) B(s)]; the check
    passes when the worst violation stays below ``tol`` (grid slack).
    """
    beta = f.beta

    def b_of(s):
        s = np.asarray(s, dtype=float)
        if not simplex_contains(s, beta):
            raise ParameterError("imaginary parts leave the simplex")
        if spacing is None:
            return log_grid_sup(f, s, t_grid)
        return polished_grid_sup(f, s, t_grid, spacing, free_axes)

    per_pair = []
    for s, sp in pairs:
        s = np.asarray(s, dtype=float)
        sp = np.asarray(sp, dtype=float)
        b0 = b_of(s)
        b1 = b_of(sp)
        worst_here = -np.inf
        for alpha in alpha_grid:
            mid = alpha * sp + (1.0 - alpha) * s
            bm = b_of(mid)
            target = alpha * b1 + (1.0 - alpha) * b0
            if np.isneginf(bm) and np.isneginf(target):
                violation = 0.0
            else:
                violation = float(bm - target)
            worst_here = max(worst_here, violation)
        per_pair.append(worst_here)
    worst = max(per_pair) if per_pair else -np.inf
    t = np.atleast_2d(t_grid)
    span = float(t.max() - t.min()) if t.size else 0.0
    step = spacing if spacing is not None else 0.0
    return ConvexityReport(
        len(pairs), tuple(per_pair), float(worst), bool(worst <= tol), span, step
    )


@dataclass(frozen=True)
class BoundaryMaxReport:
    interior_max: float
    boundary_max: float
    norm_product: float
    interior_below_boundary: bool
    boundary_below_norms: bool
    passed: bool


def boundary_imaginary_patterns(n: int, beta: float) -> list[np.ndarray]:
    """Imaginary-part vectors of the tube boundary: entries in {-beta, 0} with
    total in {-beta, 0} -- the all-zero pattern plus one -beta in each slot."""
    pats = [np.zeros(n)]
    for j in range(n):
        s = np.zeros(n)
        s[j] = -beta
        pats.append(s)
    return pats


def boundary_max_check(
    f: TubeFunction,
    interior_points: Sequence[np.ndarray],
    t_grid: np.ndarray,
    tol: float,
    spacing: float | None = None,
    free_axes: Sequence[int] | None = None,
) -> BoundaryMaxReport:
    """Interior grid sup vs boundary grid sup vs the norm-product ceiling.

    Sup values are compared in linear scale: the interior max may not exceed
    the boundary max beyond ``tol``, and the boundary max must respect the
    declared bound of ``f`` (product of vector norms for correlators).
    """
    if f.bound is None:
        raise ParameterError("boundary check needs a declared bound on f")

    def sup_of(s):
        if spacing is None:
            b = log_grid_sup(f, np.asarray(s, float), t_grid)
        else:
            b = polished_grid_sup(f, np.asarray(s, float), t_grid, spacing, free_axes)
        return float(np.exp(b)) if np.isfinite(b) else 0.0

    interior = max(sup_of(s) for s in interior_points)
    boundary = max(sup_of(s) for s in boundary_imaginary_patterns(f.n_args, f.beta))
    ok_inner = interior <= boundary + tol
    ok_bound = boundary <= f.bound + tol
    return BoundaryMaxReport(
        interior, boundary, f.bound, bool(ok_inner), bool(ok_bound), bool(ok_inner and ok_bound)
    )


def sample_simplex_point(rng, n: int, beta: float, fill: float | None = None) -> np.ndarray:
    """Random interior point of K_n: nonpositive entries summing above -beta."""
    r = float(rng.uniform(0.1, 0.9)) if fill is None else fill
    return -beta * r * rng.dirichlet(np.ones(n))


def upsilon_hadamard_suite(
    seed: int,
    n_modes: int,
    n_pairs: int,
    beta: float,
    pair_count: int,
    interior_count: int,
    span: float,
    spacing: float,
    conv_tol: float,
    bmax_tol: float,
) -> dict:
    """Convexity and boundary-maximum checks on a random correlator instance.

    The correlator is invariant under shifts of its first increment, so the
    first grid axis is pinned to zero and the span/spacing apply to the free
    axes; local refinement around each argmax tightens the grid sups far
    below the stated tolerances.
    """
    rng = np.random.Generator(np.random.Philox(key=[seed & (2**64 - 1), 3 << 32]))
    m = 2 * n_pairs
    a = rng.normal(size=(n_modes, n_modes)) + 1j * rng.normal(size=(n_modes, n_modes))
    op = HermitianOperator((a + a.conj().T) / 2)
    vectors = []
    for _ in range(m):
        v = rng.normal(size=n_modes) + 1j * rng.normal(size=n_modes)
        vectors.append(v / np.linalg.norm(v))
    times = [ComplexTime(float(rng.uniform(-1, 1)), float(rng.uniform(0, beta)))
             for _ in range(m)]
    perm = time_ordering_permutation(times, "determinant")
    corr = CumulativeCorrelator(op, beta, vectors, perm)
    f = corr.as_tube_function()

    free = np.arange(-span / 2, span / 2 + 0.5 * spacing, spacing)
    axes = [np.array([0.0])] + [free] * (m - 1)
    t_grid = product_grid(axes)
    free_axes = list(range(1, m))

    pairs = [(sample_simplex_point(rng, m, beta), sample_simplex_point(rng, m, beta))
             for _ in range(pair_count)]
    conv = convexity_check(f, pairs, (0.5,), t_grid, conv_tol,
                           spacing=spacing, free_axes=free_axes)
    interior = [sample_simplex_point(rng, m, beta) for _ in range(interior_count)]
    bmax = boundary_max_check(f, interior, t_grid, bmax_tol,
                              spacing=spacing, free_axes=free_axes)
    return {
        "violations": list(conv.violations),
        "worst_violation": conv.worst_violation,
        "convexity_passed": conv.passed,
        "grid_span": span,
        "grid_spacing": spacing,
        "boundary": {
            "interior_max": bmax.interior_max,
            "boundary_max": bmax.boundary_max,
            "norm_product": bmax.norm_product,
            "interior_below_boundary": bmax.interior_below_boundary,
            "boundary_below_norms": bmax.boundary_below_norms,
            "passed": bmax.passed,
        },
        "passed": bool(conv.passed and bmax.passed),
    }


def kms_exchange_check(
    rep: FockRep,
    beta: float,
    vectors: Sequence[np.ndarray],
    times: Sequence[float],
    k: int,
    perm: Sequence[int] | None = None,
) -> float:
    """Cyclic exchange identity of the thermal state on the cumulative correlator.

    For real increments t_1..t_m, pushing increment ``k`` (1-based) down by
    i*beta shifts the leading block of the ordered product, and the thermal
    state trades that shift for moving the block to the end at real times.
    Returns |lhs - rhs| evaluated through the Fock oracle.
    """
    m = len(vectors)
    if m % 2 != 0 or m == 0:
        raise ParameterError("need an even, positive number of vectors")
    if not 1 <= k <= m:
        raise ParameterError(f"k must lie in 1..{m}, got {k}")
    t = np.asarray(times, dtype=float)
    if t.shape != (m,):
        raise ParameterError("need one real increment per factor")
    corr = CumulativeCorrelator(rep.operator, beta, vectors, perm)
    lhs, rhs = corr.exchange_pair(rep, t, k)
    return float(abs(lhs - rhs))
