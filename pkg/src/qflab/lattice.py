"""Finite boxes of Z^d and the point-set distances used to quantify localization.

Distances are built on the power metric |x - y|^eps (Euclidean norm raised to
eps in (0, 1]), which is a translation-invariant metric on the lattice.
Three set quantities derive from it:

* ``hausdorff_distance``  -- max of the two directed max-min distances,
* ``symmetrized_distance`` -- best max distance over perfect matchings,
* ``splitting_width``     -- largest nearest-neighbour distance inside one set.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, ResourceLimitError

# exhaustive matching search is factorial; above this it serves no test purpose
MATCHING_SIZE_CAP = 8


@dataclass(frozen=True)
class Box:
    """Finite box [0, L)^d with a spin index per site.

    One-particle indices are laid out site-major: ``index = site * n_spins + spin``
    with sites enumerated lexicographically.
    """

    dimension: int
    side: int
    n_spins: int = 1

    def __post_init__(self):
        if self.dimension < 1 or self.side < 1 or self.n_spins < 1:
            raise ParameterError("Box requires dimension, side and n_spins >= 1")

    @property
    def n_sites(self) -> int:
        return self.side**self.dimension

    @property
    def dim_h(self) -> int:
        """Dimension of the one-particle space, sites times spins."""
        return self.n_sites * self.n_spins

    def sites(self) -> list[tuple[int, ...]]:
        return list(itertools.product(range(self.side), repeat=self.dimension))

    def site_index(self, x: tuple[int, ...]) -> int:
        if len(x) != self.dimension:
            raise ParameterError(f"site {x} has wrong dimension, expected {self.dimension}")
        idx = 0
        for c in x:
            if not 0 <= c < self.side:
                raise ParameterError(f"site {x} outside box of side {self.side}")
            idx = idx * self.side + c
        return idx

    def index(self, x: tuple[int, ...], spin: int = 0) -> int:
        """Flat one-particle index of (site, spin)."""
        if not 0 <= spin < self.n_spins:
            raise ParameterError(f"spin {spin} outside 0..{self.n_spins - 1}")
        return self.site_index(x) * self.n_spins + spin

    def basis_vector(self, x: tuple[int, ...], spin: int = 0) -> np.ndarray:
        e = np.zeros(self.dim_h, dtype=complex)
        e[self.index(x, spin)] = 1.0
        return e


@dataclass(frozen=True)
class Configuration:
    """Ordered list of pairwise distinct spatial points of Z^d."""

    points: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if len(self.points) == 0:
            raise ParameterError("configuration must contain at least one point")
        dims = {len(p) for p in self.points}
        if len(dims) != 1:
            raise ParameterError("configuration points have mixed dimensions")
        if len(set(self.points)) != len(self.points):
            raise ParameterError("configuration points must be pairwise distinct")
        object.__setattr__(self, "points", tuple(tuple(int(c) for c in p) for p in self.points))

    @classmethod
    def from_iterable(cls, pts) -> "Configuration":
        norm = []
        for p in pts:
            if np.isscalar(p):
                norm.append((int(p),))
            else:
                norm.append(tuple(int(c) for c in p))
        return cls(tuple(norm))

    def __len__(self) -> int:
        return len(self.points)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.points, dtype=float)


def power_metric(x, y, eps: float) -> float:
    """Euclidean distance between lattice points raised to eps in (0, 1]."""
    if not 0.0 < eps <= 1.0:
        raise ParameterError(f"eps must lie in (0, 1], got {eps}")
    dx = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    return float(np.linalg.norm(dx) ** eps)


def _pairwise_powers(x1: Configuration, x2: Configuration, eps: float) -> np.ndarray:
    # (|X1|, |X2|) matrix of |x - y|^eps
    a = x1.as_array()
    b = x2.as_array()
    d = np.linalg.norm(a[:, None, :] - b[None, :, :], axis=-1)
    return d**eps


def hausdorff_distance(x1: Configuration, x2: Configuration, eps: float) -> float:
    """Hausdorff distance of two nonempty point sets under the power metric."""
    if not 0.0 < eps <= 1.0:
        raise ParameterError(f"eps must lie in (0, 1], got {eps}")
    d = _pairwise_powers(x1, x2, eps)
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


def symmetrized_distance(x1: Configuration, x2: Configuration, eps: float) -> float:
    """Minimum over pairings pi of max_j |x_j - y_pi(j)|^eps, by exhaustive search.

    Requires equal sizes; dominates the Hausdorff distance.
    """
    if not 0.0 < eps <= 1.0:
        raise ParameterError(f"eps must lie in (0, 1], got {eps}")
    n = len(x1)
    if n != len(x2):
        raise ParameterError(f"configurations must have equal sizes, got {n} and {len(x2)}")
    if n > MATCHING_SIZE_CAP:
        raise ResourceLimitError(
            f"matching search capped at {MATCHING_SIZE_CAP} points, got {n}"
        )
    d = _pairwise_powers(x1, x2, eps)
    best = np.inf
    for perm in itertools.permutations(range(n)):
        worst = max(d[j, perm[j]] for j in range(n))
        if worst < best:
            best = worst
    return float(best)


def splitting_width(x: Configuration, eps: float) -> float:
    """Largest nearest-neighbour power distance within the configuration.

    Small iff every point has a close partner; undefined (error) for singletons.
    """
    if not 0.0 < eps <= 1.0:
        raise ParameterError(f"eps must lie in (0, 1], got {eps}")
    if len(x) < 2:
        raise ParameterError("splitting width needs at least two points")
    d = _pairwise_powers(x, x, eps)
    np.fill_diagonal(d, np.inf)
    return float(d.min(axis=1).max())
