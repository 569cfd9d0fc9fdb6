"""Seeded invariant battery behind the ``verify`` subcommand.

Each check is deterministic given the seed and returns a named result; the
battery covers the distance geometry, operator calculus, determinant and
Pfaffian numerics, the Fock oracle, and the closed-form kernels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import hadamard, kernels, lattice
from .pfaffian import (
    determinant,
    determinant_cofactor,
    laplace_expand_determinant,
    laplace_expand_pfaffian,
    pfaffian,
)
from .fock import (
    ANNIHILATION,
    CREATION,
    FIELD,
    DressedVector,
    OrderedMonomial,
    build_fock,
    gibbs_expectation,
    wick_determinant_check,
    wick_pfaffian_check,
)
from .operators import (
    ComplexTime,
    EnergyWindow,
    HermitianOperator,
    fermi_factor,
    spectral_projection,
    thermal_symbol,
    weighted_propagator,
)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _rand_herm(rng, n) -> HermitianOperator:
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return HermitianOperator((a + a.conj().T) / 2)


def _rand_unit(rng, n) -> np.ndarray:
    v = rng.normal(size=n) + 1j * rng.normal(size=n)
    return v / np.linalg.norm(v)


def _rand_config(rng, n_points, d=1, span=20) -> lattice.Configuration:
    pts = set()
    while len(pts) < n_points:
        pts.add(tuple(int(c) for c in rng.integers(-span, span, d)))
    return lattice.Configuration(tuple(sorted(pts)))


def verify_lattice(rng) -> list[CheckResult]:
    out = []
    worst = 0.0
    ok = True
    for _ in range(100):
        eps = float(rng.uniform(0.2, 1.0))
        a, b, c = (_rand_config(rng, int(rng.integers(1, 6))) for _ in range(3))
        dab = lattice.hausdorff_distance(a, b, eps)
        dba = lattice.hausdorff_distance(b, a, eps)
        ok &= abs(dab - dba) < 1e-12
        ok &= lattice.hausdorff_distance(a, a, eps) == 0.0
        tri = lattice.hausdorff_distance(a, c, eps) - (
            dab + lattice.hausdorff_distance(b, c, eps)
        )
        worst = max(worst, tri)
    ok &= worst <= 1e-12
    out.append(CheckResult("lattice: hausdorff pseudometric", bool(ok),
                           f"worst triangle excess {worst:.2e}"))

    ok = True
    for _ in range(100):
        eps = float(rng.uniform(0.2, 1.0))
        x1, x2, y1, y2 = (_rand_config(rng, int(rng.integers(1, 4))) for _ in range(4))
        union1 = lattice.Configuration.from_iterable(set(x1.points) | set(x2.points))
        union2 = lattice.Configuration.from_iterable(set(y1.points) | set(y2.points))
        lhs = lattice.hausdorff_distance(union1, union2, eps)
        rhs = max(lattice.hausdorff_distance(x1, y1, eps),
                  lattice.hausdorff_distance(x2, y2, eps))
        ok &= lhs <= rhs + 1e-12
    out.append(CheckResult("lattice: union subadditivity", bool(ok), ""))

    ok = True
    for _ in range(60):
        eps = float(rng.uniform(0.2, 1.0))
        n = int(rng.integers(1, 5))
        x = _rand_config(rng, n)
        y = _rand_config(rng, n)
        ok &= lattice.hausdorff_distance(x, y, eps) <= lattice.symmetrized_distance(x, y, eps) + 1e-12
        if 2 * n <= 8:
            both = set(x.points) | set(y.points)
            if len(both) == 2 * n:
                whole = lattice.Configuration.from_iterable(both)
                ok &= lattice.splitting_width(whole, eps) <= lattice.hausdorff_distance(x, y, eps) + 1e-12
                ok &= lattice.splitting_width(whole, eps) <= lattice.symmetrized_distance(x, y, eps) + 1e-12
    out.append(CheckResult("lattice: matching and splitting-width dominations", bool(ok), ""))
    return out


def verify_operators(rng) -> list[CheckResult]:
    out = []
    op = _rand_herm(rng, 16)
    lam, u = op.eigensystem()
    rec = np.abs((u * lam) @ u.conj().T - op.matrix).max()
    uni = np.abs(u.conj().T @ u - np.eye(16)).max()
    out.append(CheckResult("operators: spectral reconstruction", rec <= 1e-10 and uni <= 1e-10,
                           f"residuals {rec:.2e}, {uni:.2e}"))

    worst = 0.0
    for beta in (0.5, 1.0, 2.0):
        lam_grid = np.linspace(-8, 8, 101)
        for s in np.linspace(0, beta, 7):
            vals = np.abs(thermal_symbol(lam_grid, s + 1j * 0.73, beta))
            worst = max(worst, float(vals.max()))
    out.append(CheckResult("operators: strip symbol bounded by one", worst <= 1.0 + 1e-12,
                           f"max modulus {worst:.12f}"))

    x = np.linspace(-700, 700, 4001)
    mine = fermi_factor(x, 1.0)
    ref = 1.0 / (1.0 + np.exp(np.asarray(x, dtype=np.longdouble)))
    rel = np.abs(mine - ref.astype(float)) / np.maximum(ref.astype(float), 1e-300)
    out.append(CheckResult("operators: fermi factor stability", float(rel.max()) <= 1e-12,
                           f"worst relative error {float(rel.max()):.2e}"))

    ok = True
    for _ in range(20):
        n = int(rng.integers(2, 12))
        op = _rand_herm(rng, n)
        beta = float(rng.uniform(0.3, 2.5))
        z = ComplexTime(float(rng.uniform(-3, 3)), float(rng.uniform(0, beta)))
        w = weighted_propagator(op, z, beta, EnergyWindow.full())
        ok &= np.linalg.norm(w, 2) <= 1.0 + 1e-10
    out.append(CheckResult("operators: propagator norm at most one", bool(ok), ""))

    op = _rand_herm(rng, 10)
    beta = 1.3
    w0 = weighted_propagator(op, ComplexTime(0.0), beta, EnergyWindow.full())
    herm = np.abs(w0 - w0.conj().T).max()
    spec = np.linalg.eigvalsh(w0)
    out.append(CheckResult("operators: zero-time propagator is the fermi operator",
                           herm <= 1e-12 and 0 < spec.min() and spec.max() < 1,
                           f"hermiticity {herm:.2e}, spectrum [{spec.min():.3f}, {spec.max():.3f}]"))

    lam, _ = op.eigensystem()
    window = EnergyWindow(float(np.median(lam)), float(lam.max()))
    p = spectral_projection(op, window)
    idem = np.abs(p @ p - p).max()
    comm = np.abs(p @ op.matrix - op.matrix @ p).max()
    out.append(CheckResult("operators: spectral projection idempotent and commuting",
                           idem <= 1e-10 and comm <= 1e-10,
                           f"residuals {idem:.2e}, {comm:.2e}"))
    return out


def verify_pfaffian(rng) -> list[CheckResult]:
    out = []
    worst = 0.0
    for _ in range(20):
        n = int(rng.integers(2, 7))
        m = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        d1 = determinant(m)
        d2 = determinant_cofactor(m)
        worst = max(worst, abs(d1 - d2) / max(1.0, abs(d2)))
    out.append(CheckResult("pfaffian: determinant vs cofactor oracle", worst <= 1e-9,
                           f"worst relative {worst:.2e}"))

    worst_sq = 0.0
    worst_two = 0.0
    for dim in (2, 4, 6, 8, 10, 12):
        a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        m = a - a.T
        pf = pfaffian(m)
        det = determinant(m)
        worst_sq = max(worst_sq, abs(pf**2 - det) / max(1.0, abs(det)))
        if dim <= 10:
            pc = pfaffian(m, method="combinatorial")
            worst_two = max(worst_two, abs(pf - pc) / max(1.0, abs(pc)))
    out.append(CheckResult("pfaffian: square equals determinant", worst_sq <= 1e-8,
                           f"worst relative {worst_sq:.2e}"))
    out.append(CheckResult("pfaffian: stable vs combinatorial", worst_two <= 1e-9,
                           f"worst relative {worst_two:.2e}"))

    worst = 0.0
    m = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
    for idx in range(1, 6):
        for axis in ("row", "column"):
            rep = laplace_expand_determinant(m, idx, axis)
            worst = max(worst, rep.max_discrepancy)
    a = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    skew = a - a.T
    for idx in range(1, 7):
        rep = laplace_expand_pfaffian(skew, idx)
        worst = max(worst, rep.max_discrepancy)
    out.append(CheckResult("pfaffian: laplace expansions reproduce direct values",
                           worst <= 1e-9, f"worst discrepancy {worst:.2e}"))

    ok = True
    for _ in range(10):
        dim = 6
        a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        m = a - a.T
        i, j = rng.choice(dim, size=2, replace=False)
        swapped = m.copy()
        swapped[[i, j], :] = swapped[[j, i], :]
        swapped[:, [i, j]] = swapped[:, [j, i]]
        ok &= abs(pfaffian(swapped) + pfaffian(m)) <= 1e-9 * max(
            1.0, abs(pfaffian(m))
        )
    out.append(CheckResult("pfaffian: sign flip under pair swap", bool(ok), ""))
    return out


def verify_fock(rng) -> list[CheckResult]:
    out = []
    rep = build_fock(_rand_herm(rng, 3))
    worst = 0.0
    for j in range(3):
        aj = rep.lowering(j)
        for k in range(3):
            ak = rep.lowering(k)
            anti = aj @ ak + ak @ aj
            mixed = aj @ ak.conj().T + ak.conj().T @ aj
            worst = max(worst, np.abs(anti).max())
            target = np.eye(aj.shape[0]) if j == k else 0.0
            worst = max(worst, np.abs(mixed - target).max())
    out.append(CheckResult("fock: canonical anticommutation relations", worst <= 1e-12,
                           f"worst residual {worst:.2e}"))

    worst = 0.0
    for _ in range(50):
        n = int(rng.integers(2, 5))
        op = _rand_herm(rng, n)
        repn = build_fock(op)
        beta = float(rng.uniform(0.4, 2.0))
        p1, p2 = _rand_unit(rng, n), _rand_unit(rng, n)
        z0 = ComplexTime(0.0)
        mono = OrderedMonomial(
            (DressedVector(p1, z0, CREATION), DressedVector(p2, z0, ANNIHILATION)), (0, 1)
        )
        val = gibbs_expectation(repn, beta, mono)
        lam, u = op.eigensystem()
        expected = np.sum(
            np.conj(u.conj().T @ p2) * fermi_factor(lam, beta) * (u.conj().T @ p1)
        )
        worst = max(worst, abs(val - expected))
    out.append(CheckResult("fock: defining two-point relation", worst <= 1e-10,
                           f"worst deviation {worst:.2e}"))

    worst = 0.0
    op = _rand_herm(rng, 4)
    rep4 = build_fock(op)
    beta = 0.9
    for count in (1, 3):
        factors = tuple(
            DressedVector(_rand_unit(rng, 4), ComplexTime(float(rng.uniform(-1, 1))),
                          CREATION if rng.uniform() < 0.5 else ANNIHILATION)
            for _ in range(count)
        )
        mono = OrderedMonomial(factors, tuple(rng.permutation(count).tolist()))
        worst = max(worst, abs(gibbs_expectation(rep4, beta, mono)))
    out.append(CheckResult("fock: odd monomials vanish", worst <= 1e-12,
                           f"worst magnitude {worst:.2e}"))

    worst = 0.0
    for _ in range(10):
        n = int(rng.integers(2, 5))
        repn = build_fock(_rand_herm(rng, n))
        beta = float(rng.uniform(0.4, 2.0))
        npairs = int(rng.integers(1, 3))
        m = 2 * npairs
        vecs = [_rand_unit(rng, n) for _ in range(m)]
        times = [ComplexTime(float(rng.uniform(-1.5, 1.5)), float(rng.uniform(0, beta)))
                 for _ in range(m)]
        perm = tuple(int(p) for p in rng.permutation(m))
        _, rhs, disc = wick_determinant_check(repn, beta, vecs, times, perm)
        worst = max(worst, disc / max(1.0, abs(rhs)))
        phases = [int(p) for p in rng.integers(0, 2, m)]
        _, rhs2, disc2 = wick_pfaffian_check(repn, beta, vecs, times, perm, phases)
        worst = max(worst, disc2 / max(1.0, abs(rhs2)))
    out.append(CheckResult("fock: wick determinant and pfaffian identities", worst <= 1e-9,
                           f"worst relative {worst:.2e}"))

    worst = 0.0
    rep4 = build_fock(_rand_herm(rng, 4))
    beta = 1.1
    vecs = [_rand_unit(rng, 4) for _ in range(4)]
    t = rng.uniform(-1.5, 1.5, 4)
    for k in range(1, 5):
        worst = max(worst, hadamard.kms_exchange_check(rep4, beta, vecs, t, k))
    out.append(CheckResult("fock: cyclic exchange identity", worst <= 1e-9,
                           f"worst deviation {worst:.2e}"))
    return out


def verify_kernels(rng) -> list[CheckResult]:
    out = []
    worst = 0.0
    for _ in range(50):
        n = int(rng.integers(2, 8))
        op = _rand_herm(rng, n)
        beta = float(rng.uniform(0.4, 2.0))
        p1, p2 = _rand_unit(rng, n), _rand_unit(rng, n)
        t = float(rng.uniform(-2, 2))
        val = kernels.two_point(
            op, beta,
            DressedVector(p1, ComplexTime(t), CREATION),
            DressedVector(p2, ComplexTime(t), ANNIHILATION),
        )
        lam, u = op.eigensystem()
        expected = np.sum(np.conj(u.conj().T @ p2) * fermi_factor(lam, beta) * (u.conj().T @ p1))
        worst = max(worst, abs(val - expected))
    out.append(CheckResult("kernels: equal-time reduction to the state", worst <= 1e-12,
                           f"worst deviation {worst:.2e}"))

    worst = 0.0
    for _ in range(40):
        n = int(rng.integers(2, 6))
        op = _rand_herm(rng, n)
        repn = build_fock(op)
        beta = float(rng.uniform(0.4, 2.0))
        p1, p2 = _rand_unit(rng, n), _rand_unit(rng, n)
        z1 = ComplexTime(float(rng.uniform(-2, 2)), float(rng.uniform(0, beta)))
        z2 = ComplexTime(float(rng.uniform(-2, 2)), float(rng.uniform(0, beta)))
        left = DressedVector(p1, z1, CREATION)
        right = DressedVector(p2, z2, ANNIHILATION)
        kept, _ = kernels.time_order(z1, z2)
        mono = OrderedMonomial((left, right), (0, 1) if kept else (1, 0))
        worst = max(worst, abs(kernels.two_point(op, beta, left, right)
                               - gibbs_expectation(repn, beta, mono)))
        fl = DressedVector(p1, z1, FIELD, int(rng.integers(0, 2)))
        fr = DressedVector(p2, z2, FIELD, int(rng.integers(0, 2)))
        monof = OrderedMonomial((fl, fr), (0, 1) if kept else (1, 0))
        worst = max(worst, abs(kernels.field_two_point(op, beta, fl, fr)
                               - gibbs_expectation(repn, beta, monof)))
    out.append(CheckResult("kernels: closed forms match the oracle", worst <= 1e-9,
                           f"worst deviation {worst:.2e}"))

    ok = True
    worst = 0.0
    for _ in range(40):
        n = int(rng.integers(2, 6))
        op = _rand_herm(rng, n)
        beta = float(rng.uniform(0.4, 2.0))
        p1, p2 = _rand_unit(rng, n), _rand_unit(rng, n)
        s1, s2 = rng.uniform(0, beta, 2)
        if abs(s1 - s2) < 1e-6:
            s2 = min(beta, s1 + 0.1)
        z1 = ComplexTime(float(rng.uniform(-2, 2)), float(s1))
        z2 = ComplexTime(float(rng.uniform(-2, 2)), float(s2))
        fl = DressedVector(p1, z1, FIELD)
        fr = DressedVector(p2, z2, FIELD)
        a = kernels.field_two_point(op, beta, fl, fr)
        b = kernels.field_two_point(op, beta, fr, fl)
        worst = max(worst, abs(a + b))
        ok &= abs(a + b) <= 1e-10
        ok &= abs(a) <= 1.0 + 1e-10
        g = kernels.two_point(op, beta,
                              DressedVector(p1, z1, CREATION),
                              DressedVector(p2, z2, ANNIHILATION))
        ok &= abs(g) <= 1.0 + 1e-10
    out.append(CheckResult("kernels: field antisymmetry and norm bounds", bool(ok),
                           f"worst antisymmetry defect {worst:.2e}"))

    op = _rand_herm(rng, 6)
    beta = 1.0
    p1, p2 = _rand_unit(rng, 6), _rand_unit(rng, 6)
    ts = np.linspace(-4, 4, 81)
    vals = np.array([
        kernels.two_point(op, beta,
                          DressedVector(p1, ComplexTime(float(t), 0.3), CREATION),
                          DressedVector(p2, ComplexTime(0.0, 0.7), ANNIHILATION))
        for t in ts
    ])
    second = np.abs(np.diff(vals, 2)).max()
    bounded = np.abs(vals).max() <= 1.0 + 1e-10
    out.append(CheckResult("kernels: strip slice smooth and bounded",
                           bool(second <= 1.0 and bounded),
                           f"max second difference {second:.2e}"))
    return out


def run_battery(seed: int = 0) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    results = []
    results += verify_lattice(rng)
    results += verify_operators(rng)
    results += verify_pfaffian(rng)
    results += verify_fock(rng)
    results += verify_kernels(rng)
    return results
