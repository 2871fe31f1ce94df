"""Randomized invariant checks, seeded and deterministic.

Each check returns a :class:`CheckResult`; :func:`run_suite` runs them all.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from . import catalog
from .hofstadter import BlochGrid, RationalFlux, bloch_matrices, bloch_spectrum
from .metrics import edge_deviation, fit_scaling, hausdorff, norm_chain_check, triangle_chain_check
from .quantize import hermiticity_residual, weyl_hopping
from .symbols import (
    Add,
    Const,
    Cos,
    Mul,
    Neg,
    Sin,
    Symbol,
    Var,
    eval_expr,
    parse_expr,
    perturb,
    reconstruct,
    to_text,
    xi_decompose,
)

EXACT_TOL = 1e-12
CHAIN_TOL = 1e-10


@dataclass(frozen=True)
class CheckResult:
    name: str
    trials: int
    failures: int
    worst: float  # largest violation seen (0 when none)

    def __post_init__(self):
        object.__setattr__(self, "worst", float(self.worst))

    @property
    def passed(self) -> bool:
        return self.failures == 0

    def to_dict(self) -> dict:
        return asdict(self)


def random_hermitian(rng: np.random.Generator, n: int, scale: float = 1.0) -> np.ndarray:
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return scale * (a + a.conj().T) / 2


def check_norm_chain(rng, trials: int = 200, n: int = 20) -> CheckResult:
    fails, worst = 0, 0.0
    for _ in range(trials):
        A = random_hermitian(rng, n)
        B = A + random_hermitian(rng, n, scale=10 ** rng.uniform(-3, 0))
        c = norm_chain_check(A, B, CHAIN_TOL)
        worst = max(worst, c.lhs - c.mid, c.mid - c.rhs, 0.0)
        fails += not c.passed
    return CheckResult("norm_chain", trials, fails, worst)


def check_triangle_chain(rng, trials: int = 100, n: int = 16) -> CheckResult:
    fails = 0
    for _ in range(trials):
        A = random_hermitian(rng, n)
        B, C, D = (A + random_hermitian(rng, n, scale=10 ** rng.uniform(-3, 0)) for _ in range(3))
        fails += not triangle_chain_check(A, B, C, D, CHAIN_TOL)
    return CheckResult("triangle_chain", trials, fails, 0.0)


def _random_set(rng) -> np.ndarray:
    n = int(rng.integers(1, 12))
    return np.sort(rng.uniform(-5, 5, size=n))


def check_hausdorff_axioms(rng, trials: int = 500) -> CheckResult:
    """Symmetry, identity of indiscernibles, triangle inequality, and edges <= d_h."""
    fails, worst = 0, 0.0
    for _ in range(trials):
        a, b, c = _random_set(rng), _random_set(rng), _random_set(rng)
        dab, dba = hausdorff(a, b), hausdorff(b, a)
        bad = [
            abs(dab - dba),
            abs(hausdorff(a, a)),
            max(0.0, dab - hausdorff(a, c) - hausdorff(c, b) - EXACT_TOL),
            max(0.0, max(edge_deviation(a, b)) - dab - EXACT_TOL),
        ]
        # distinct sets must be at positive distance
        if not np.array_equal(np.unique(a), np.unique(b)) and dab == 0:
            bad.append(1.0)
        worst = max(worst, *bad)
        fails += any(v > EXACT_TOL for v in bad)
    return CheckResult("hausdorff_metric", trials, fails, worst)


def check_fit_recovery(rng, trials: int = 50) -> CheckResult:
    fails, worst = 0, 0.0
    for _ in range(trials):
        p = rng.uniform(0.2, 2.0)
        C = rng.uniform(0.1, 10.0)
        deltas = np.sort(rng.uniform(1e-4, 1e-1, size=int(rng.integers(3, 8))))
        if len(set(deltas)) < 3:
            continue
        rep = fit_scaling([(d, C * d**p) for d in deltas])
        err = max(abs(rep.exponent - p), abs(rep.constant - C) / C)
        worst = max(worst, err)
        fails += err > 1e-9
    return CheckResult("fit_recovery", trials, fails, worst)


# -- random admissible symbols -------------------------------------------


def _random_bounded(rng, dim: int, depth: int):
    """Random xi-free expression with bounded derivatives."""
    r = rng.random()
    if depth <= 0 or r < 0.3:
        return Const(float(np.round(rng.uniform(-2, 2), 3)))
    if r < 0.6:
        trig = Cos if rng.random() < 0.5 else Sin
        return trig(_random_affine(rng, dim))
    if r < 0.8:
        return Add(_random_bounded(rng, dim, depth - 1), _random_bounded(rng, dim, depth - 1))
    if r < 0.9:
        return Neg(_random_bounded(rng, dim, depth - 1))
    return Mul(_random_bounded(rng, dim, depth - 1), _random_bounded(rng, dim, depth - 1))


def _random_affine(rng, dim: int):
    j = int(rng.integers(1, dim + 1))
    out = Mul(Const(float(np.round(rng.uniform(-2, 2), 3))), Var("x", j))
    if rng.random() < 0.5:
        out = Add(out, Const(float(np.round(rng.uniform(-1, 1), 3))))
    return out


def random_symbol(rng, dim: int, terms: int = 3) -> Symbol:
    """Sum of ``m(x) * trig(k.xi + g(x))`` terms with random integer hops."""
    expr = None
    for _ in range(terms):
        k = rng.integers(-2, 3, size=dim)
        arg = None
        for j, kj in enumerate(k):
            if kj:
                v = Var("xi", j + 1)
                term = v if kj == 1 else Mul(Const(float(kj)), v)
                arg = term if arg is None else Add(arg, term)
        shift = _random_bounded(rng, dim, 1) if rng.random() < 0.5 else _random_affine(rng, dim)
        arg = shift if arg is None else Add(arg, shift)
        trig = Cos if rng.random() < 0.5 else Sin
        term = Mul(_random_bounded(rng, dim, 2), trig(arg))
        expr = term if expr is None else Add(expr, term)
    return Symbol(dim, expr, {})


def _random_points(rng, dim: int, n: int, box: float = 10.0):
    return rng.uniform(-box, box, size=(dim, n)), rng.uniform(-math.pi, math.pi, size=(dim, n))


def check_round_trip(rng, trials: int = 50, points: int = 100) -> CheckResult:
    fails, worst = 0, 0.0
    for _ in range(trials):
        dim = int(rng.integers(1, 3))
        s = random_symbol(rng, dim)
        again = parse_expr(to_text(s.expr), dim)
        x, xi = _random_points(rng, dim, points)
        err = float(np.max(np.abs(eval_expr(s.expr, x, xi) - eval_expr(again, x, xi))))
        worst = max(worst, err)
        fails += err > EXACT_TOL
    return CheckResult("dsl_round_trip", trials, fails, worst)


def _symbols_under_test(rng, random_count: int):
    out = []
    for name in sorted(catalog.SYMBOLS):
        s = catalog.builtin_symbol(name)
        out.append(s)
        for fname in catalog.fields_for(s.dim):
            out.append(perturb(s, catalog.builtin_field(fname), 0.05))
    for _ in range(random_count):
        out.append(random_symbol(rng, int(rng.integers(1, 3))))
    return out


def check_reconstruction(rng, random_count: int = 20, points: int = 1000) -> CheckResult:
    fails, worst, trials = 0, 0.0, 0
    for s in _symbols_under_test(rng, random_count):
        coeffs = xi_decompose(s)
        x, xi = _random_points(rng, s.dim, points)
        err = float(np.max(np.abs(s(x, xi) - reconstruct(coeffs, x, xi, s.params))))
        # Hermitian symmetry of the coefficients
        for k, c in coeffs.items():
            mk = tuple(-v for v in k)
            err = max(err, float(np.max(np.abs(coeffs[mk](x, s.params) - np.conj(c(x, s.params))))))
        trials += 1
        worst = max(worst, err)
        fails += err > EXACT_TOL
    return CheckResult("xi_reconstruction", trials, fails, worst)


def check_hermiticity(rng, random_count: int = 20) -> CheckResult:
    fails, worst, trials = 0, 0.0, 0
    for s in _symbols_under_test(rng, random_count):
        r = hermiticity_residual(weyl_hopping(s), samples=256, seed=int(rng.integers(2**31)))
        trials += 1
        worst = max(worst, r)
        fails += r > EXACT_TOL
    return CheckResult("hermiticity", trials, fails, worst)


def check_zero_perturbation(rng, points: int = 100) -> CheckResult:
    """perturb(s, F, 0) equals s pointwise for every built-in field (all have F(0) = 0)."""
    fails, worst, trials = 0, 0.0, 0
    for name in sorted(catalog.SYMBOLS):
        s = catalog.builtin_symbol(name)
        x, xi = _random_points(rng, s.dim, points)
        for fname in catalog.fields_for(s.dim):
            p = perturb(s, catalog.builtin_field(fname), 0.0)
            err = float(np.max(np.abs(np.broadcast_to(s(x, xi) - p(x, xi), (points,)))))
            trials += 1
            worst = max(worst, err)
            fails += err > EXACT_TOL
    return CheckResult("zero_perturbation", trials, fails, worst)


def check_bloch_identities(rng, trials: int = 40) -> CheckResult:
    """Trace identity, q = 2 dispersion, and E -> -E symmetry of Harper matrices."""
    fails, worst = 0, 0.0
    for _ in range(trials):
        q = int(rng.integers(1, 13))
        p = int(rng.integers(0, q))
        flux = RationalFlux(p, q)
        t1, t2 = rng.uniform(0, 2 * math.pi, size=2)
        H = bloch_matrices(flux, [t1], [t2])[0]
        w = np.linalg.eigvalsh(H)
        m = np.arange(flux.q)
        trace = np.sum(2 * np.cos(2 * math.pi * flux.p * m / flux.q + t2))
        if flux.q == 1:
            trace += 2 * math.cos(t1)  # both hops wrap onto the diagonal
        bad = [abs(w.sum() - trace)]
        if flux.q == 2:
            e = math.sqrt(4 * math.cos(t1) ** 2 + 4 * math.cos(t2) ** 2)
            bad.append(float(np.max(np.abs(w - [-e, e]))))
        worst = max(worst, *bad)
        fails += any(b > CHAIN_TOL for b in bad)
    # particle-hole symmetry of whole spectra
    for frac in (Fraction(1, 2), Fraction(1, 3), Fraction(2, 5), Fraction(3, 8)):
        S = bloch_spectrum(RationalFlux.of(frac), BlochGrid(16, 16)).values
        err = hausdorff(S, -S)
        worst = max(worst, err)
        fails += err > 1e-9
    return CheckResult("bloch_identities", trials + 4, fails, worst)


SUITE: dict[str, Callable[[np.random.Generator], CheckResult]] = {
    "norm_chain": check_norm_chain,
    "triangle_chain": check_triangle_chain,
    "hausdorff_metric": check_hausdorff_axioms,
    "fit_recovery": check_fit_recovery,
    "dsl_round_trip": check_round_trip,
    "xi_reconstruction": check_reconstruction,
    "hermiticity": check_hermiticity,
    "zero_perturbation": check_zero_perturbation,
    "bloch_identities": check_bloch_identities,
}


def run_suite(seed: int = 0, names=None) -> list[CheckResult]:
    """Run the checks in ``names`` (default: all), each with its own child RNG."""
    names = list(SUITE) if names is None else list(names)
    children = np.random.SeedSequence(seed).spawn(len(SUITE))
    seeds = dict(zip(SUITE, children))
    return [SUITE[n](np.random.default_rng(seeds[n])) for n in names]
