import itertools
import math

import numpy as np
import pytest

from specstab import catalog
from specstab.quantize import (
    FiberMatrix,
    HoppingOperator,
    WindowCapError,
    fiber_matrix,
    fiber_offsets,
    hermiticity_residual,
    weyl_hopping,
    window_sites,
)
from specstab.symbols import parse_symbol, perturb


def kernel_hop(s, k, x, n=16):
    """h_k(x) = K(x, x + k) from the Weyl kernel, by quadrature over the torus.

    K(x, y) = (2 pi)^-d  int a((x + y)/2, xi) exp(-i xi.(y - x)) dxi; the
    uniform rule with n nodes per axis is exact for trigonometric
    polynomials of degree < n.
    """
    d = s.dim
    nodes = 2 * np.pi * np.arange(n) / n
    mid = np.asarray(x, float) + np.asarray(k, float) / 2
    total = 0j
    for xi in itertools.product(nodes, repeat=d):
        total += s(mid, np.array(xi)) * np.exp(-1j * np.dot(xi, k))
    return total / n**d


@pytest.mark.parametrize("name", ["free1d", "amo", "modulated", "harper", "mixed2d"])
def test_weyl_hops_match_kernel_integral(name):
    s = catalog.builtin_symbol(name)
    A = weyl_hopping(s)
    rng = np.random.default_rng(1)
    for _ in range(5):
        x = rng.uniform(-5, 5, s.dim)
        for k in A.hops:
            got = complex(A.coefficient(k, x.reshape(-1, 1))[0])
            assert got == pytest.approx(kernel_hop(s, k, x), abs=1e-12)
        # every hop the kernel sees is in the hop set
        for k in itertools.product(range(-3, 4), repeat=s.dim):
            if k not in A.hops:
                assert abs(kernel_hop(s, k, x)) < 1e-12


def test_free_hopping_coefficients():
    A = weyl_hopping(parse_symbol("cos(xi1)", 1))
    assert sorted(A.hops) == [(-1,), (1,)]
    x = np.linspace(-3, 3, 7).reshape(1, -1)
    for k in A.hops:
        assert np.allclose(A.coefficient(k, x), 0.5)


def test_multiplication_symbol_is_diagonal():
    s = parse_symbol("cos(x1) + 0.5*sin(3*x1)", 1)
    A = weyl_hopping(s)
    assert list(A.hops) == [(0,)]
    fm = fiber_matrix(A, [0.25], 6)
    sites = np.arange(-6, 7) + 0.25
    assert np.allclose(np.diag(fm.dense()), np.cos(sites) + 0.5 * np.sin(3 * sites))
    assert np.count_nonzero(fm.dense() - np.diag(np.diag(fm.dense()))) == 0


def test_magnetic_hop_half_shift_leaves_x1():
    b = 0.7
    A = weyl_hopping(parse_symbol("cos(xi2 + b*x1)", 2, {"b": b}))
    x = np.array([[1.5, -2.0], [0.3, 4.0]])
    assert np.allclose(A.coefficient((0, 1), x), 0.5 * np.exp(1j * b * x[0]))
    assert np.allclose(A.coefficient((0, -1), x), 0.5 * np.exp(-1j * b * x[0]))


@pytest.mark.parametrize("name", sorted(catalog.SYMBOLS))
def test_hermiticity_of_builtins_and_perturbations(name):
    s = catalog.builtin_symbol(name)
    assert hermiticity_residual(weyl_hopping(s)) <= 1e-12
    for fname in catalog.fields_for(s.dim):
        p = perturb(s, catalog.builtin_field(fname), 0.05)
        assert hermiticity_residual(weyl_hopping(p)) <= 1e-12


def test_hermiticity_negative_control():
    good = weyl_hopping(parse_symbol("cos(xi1)", 1))
    bad = HoppingOperator(1, {(1,): good.hops[(1,)], (-1,): lambda x: 0.5 + 0.3j + 0 * x[0]})
    assert hermiticity_residual(bad) > 0.1


def test_hop_set_must_be_symmetric():
    with pytest.raises(ValueError, match="negation"):
        HoppingOperator(1, {(1,): lambda x: 0 * x[0]})


def test_three_site_window_closed_form():
    fm = fiber_matrix(weyl_hopping(parse_symbol("cos(xi1)", 1)), [0.0], 1)
    H = fm.dense()
    assert np.array_equal(H, [[0, 0.5, 0], [0.5, 0, 0.5], [0, 0.5, 0]])
    w = np.linalg.eigvalsh(H)
    assert np.allclose(w, [math.cos(j * math.pi / 4) for j in (3, 2, 1)], atol=1e-15)


def test_constant_symbol_is_identity_multiple():
    fm = fiber_matrix(weyl_hopping(parse_symbol("0.5", 1)), [0.3], 5)
    assert np.array_equal(fm.dense(), 0.5 * np.eye(11))


def test_harper_window_shape_and_exact_hermiticity():
    s = catalog.builtin_symbol("harper")
    fm = fiber_matrix(weyl_hopping(s), [0.0, 0.0], 20)
    H = fm.dense()
    assert H.shape == (41**2, 41**2)
    assert np.max(np.abs(H - H.conj().T)) == 0.0


def test_entries_follow_hops_and_vanish_elsewhere():
    s = perturb(catalog.builtin_symbol("mixed2d"), catalog.builtin_field("sin2d"), 0.1)
    A = weyl_hopping(s)
    x0 = np.array([0.25, 0.5])
    M = 3
    fm = fiber_matrix(A, x0, M)
    H = fm.dense()
    sites = window_sites(2, M).T
    index = {tuple(n): i for i, n in enumerate(sites)}
    for n in sites:
        for m in sites:
            k = tuple(m - n)
            value = H[index[tuple(n)], index[tuple(m)]]
            if k in A.hops:
                expect = complex(A.coefficient(k, (x0 + n).reshape(-1, 1))[0])
                assert value == pytest.approx(expect, abs=1e-14)
            else:
                assert value == 0


def test_translation_covariance_1d():
    s = perturb(catalog.builtin_symbol("modulated"), catalog.builtin_field("sin1d"), 0.2)
    A = weyl_hopping(s)
    M, shift = 6, 2
    H0 = fiber_matrix(A, [0.3], M).dense()
    H1 = fiber_matrix(A, [0.3 + shift], M).dense()
    # site n of the shifted window is site n + shift of the original one
    n = 2 * M + 1
    assert np.allclose(H1[: n - shift, : n - shift], H0[shift:, shift:], atol=1e-14)


def test_window_cap():
    A = weyl_hopping(catalog.builtin_symbol("harper"))
    with pytest.raises(WindowCapError):
        fiber_matrix(A, [0, 0], 40)
    assert fiber_matrix(A, [0, 0], 40, cap=81**2).size == 81**2


def test_boundary_mask_counts():
    fm = FiberMatrix(np.zeros(2), 5, 2, np.zeros((1, 121)))
    assert fm.boundary_mask(1).sum() == 121 - 81
    assert fm.boundary_mask(2).sum() == 121 - 49


def test_fiber_offsets():
    offs = fiber_offsets(2, 3)
    assert len(offs) == 9
    assert {tuple(o) for o in offs} == {(i / 3, j / 3) for i in range(3) for j in range(3)}
    with pytest.raises(ValueError):
        fiber_offsets(2, (3,))
