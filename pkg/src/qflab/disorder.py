"""Anderson-type disordered Hamiltonians and deterministic Monte Carlo averaging.

The disorder model is nearest-neighbour hopping on a finite box with open
boundaries plus i.i.d. uniform[-1, 1] on-site potentials shared across spin
components.  Sample ``index`` under master ``seed`` is generated from a Philox
counter-based stream keyed on ``(seed, index)``, so every sample is
reproducible in isolation and the whole average is independent of evaluation
order and thread count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ParameterError
from .lattice import Box
from .operators import HermitianOperator


@dataclass(frozen=True)
class DisorderModel:
    box: Box
    hopping: float = 1.0
    disorder: float = 4.0
    seed: int = 0

    def __post_init__(self):
        if self.disorder < 0:
            raise ParameterError(f"disorder strength must be >= 0, got {self.disorder}")

    def hopping_matrix(self) -> np.ndarray:
        """-t on nearest-neighbour pairs (open boundary), spin-diagonal."""
        box = self.box
        n_sites = box.n_sites
        h_site = np.zeros((n_sites, n_sites), dtype=float)
        for x in box.sites():
            ix = box.site_index(x)
            for axis in range(box.dimension):
                if x[axis] + 1 < box.side:
                    y = list(x)
                    y[axis] += 1
                    iy = box.site_index(tuple(y))
                    h_site[ix, iy] = -self.hopping
                    h_site[iy, ix] = -self.hopping
        if box.n_spins == 1:
            return h_site
        return np.kron(h_site, np.eye(box.n_spins))

    def potential(self, index: int) -> np.ndarray:
        """Per-site uniform[-1, 1] draw for sample ``index``."""
        if index < 0:
            raise ParameterError(f"sample index must be >= 0, got {index}")
        rng = np.random.Generator(np.random.Philox(key=[self.seed & (2**64 - 1), index]))
        return rng.uniform(-1.0, 1.0, self.box.n_sites)


def sample_hamiltonian(model: DisorderModel, index: int) -> HermitianOperator:
    """H = hopping + disorder * diag(v), v i.i.d. per site, shared across spins."""
    h = model.hopping_matrix()
    v = model.potential(index)
    diag = model.disorder * np.repeat(v, model.box.n_spins)
    return HermitianOperator(h + np.diag(diag))


@dataclass(frozen=True)
class MonteCarloEstimate:
    """Sample mean with its standard error (stddev / sqrt(count))."""

    mean: float
    stderr: float
    count: int


def _welford(values: Sequence[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    """One-pass mean/M2 in fixed sample order; stable and thread-independent."""
    mean = np.zeros_like(np.asarray(values[0], dtype=float))
    m2 = np.zeros_like(mean)
    for k, v in enumerate(values, start=1):
        v = np.asarray(v, dtype=float)
        delta = v - mean
        mean = mean + delta / k
        m2 = m2 + delta * (v - mean)
    return mean, m2


def expectation(
    model: DisorderModel,
    estimator: Callable[[HermitianOperator], float | np.ndarray],
    n_samples: int,
    threads: int = 1,
    offset: int = 0,
) -> MonteCarloEstimate | list[MonteCarloEstimate]:
    """Disorder average of ``estimator`` over samples offset..offset+n_samples-1.

    The estimator receives each sampled Hamiltonian and must be a pure
    function of it.  Scalar estimators yield one estimate; vector estimators
    yield a list of estimates, one per component.  The reduction runs in
    sample-index order regardless of ``threads``.
    """
    if n_samples < 2:
        raise ParameterError(f"need at least 2 samples for a standard error, got {n_samples}")

    def one(i: int):
        try:
            return estimator(sample_hamiltonian(model, i))
        except Exception as exc:  # surface which sample broke
            raise RuntimeError(f"estimator failed on sample {i}") from exc

    indices = range(offset, offset + n_samples)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            values = list(pool.map(one, indices))
    else:
        values = [one(i) for i in indices]

    mean, m2 = _welford(values)
    stderr = np.sqrt(m2 / (n_samples - 1) / n_samples)
    if mean.ndim == 0:
        return MonteCarloEstimate(float(mean), float(stderr), n_samples)
    return [
        MonteCarloEstimate(float(m), float(s), n_samples) for m, s in zip(mean, stderr)
    ]
