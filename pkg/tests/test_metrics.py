import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.distance import directed_hausdorff

from specstab.metrics import (
    FitError,
    OneSidedSpectrumError,
    ScalingReport,
    edge_deviation,
    fit_scaling,
    hausdorff,
    norm_chain_check,
    track_inner_gap,
    triangle_chain_check,
)
from specstab.spectrum import EmptySpectrumError

finite = st.floats(-50, 50, allow_nan=False, allow_infinity=False)
sets = st.lists(finite, min_size=1, max_size=40)


def brute_hausdorff(a, b):
    a, b = np.asarray(a, float), np.asarray(b, float)
    d = np.abs(a[:, None] - b[None, :])
    return max(d.min(axis=1).max(), d.min(axis=0).max())


# -- examples -------------------------------------------------------------------


def test_hausdorff_examples():
    assert hausdorff([0.0], [1.0]) == 1.0
    assert hausdorff([0.0, 1.0], [0.0]) == 1.0
    assert hausdorff([0.0, 1.0], [0.0, 1.0]) == 0.0
    assert hausdorff([-1.0, 0.0, 5.0], [0.5]) == 4.5


def test_hausdorff_empty_raises():
    with pytest.raises(EmptySpectrumError):
        hausdorff([], [1.0])


def test_edge_deviation_example():
    lo, hi = edge_deviation([0.2, 1.3], [0.0, 1.0])
    assert lo == pytest.approx(0.2)
    assert hi == pytest.approx(0.3)


def test_track_inner_gap_examples():
    S = [-2.0, -1.1, -0.9, 0.8, 1.2, 2.0]
    assert track_inner_gap(S, -1.0, 1.0) == (-0.9, 0.8)
    # a point on the midpoint counts as lower
    assert track_inner_gap([-1.0, 0.0, 1.0], -0.5, 0.5) == (0.0, 1.0)


def test_track_inner_gap_errors():
    with pytest.raises(OneSidedSpectrumError):
        track_inner_gap([1.0, 2.0], -1.0, 0.5)
    with pytest.raises(OneSidedSpectrumError):
        track_inner_gap([-3.0, -2.0], -1.0, 1.0)
    with pytest.raises(ValueError):
        track_inner_gap([0.0], 1.0, 1.0)


def test_fit_recovers_square_root():
    d = [1e-3, 1e-2, 1e-1]
    r = fit_scaling([(x, math.sqrt(x)) for x in d])
    assert r.exponent == pytest.approx(0.5, abs=1e-12)
    assert r.constant == pytest.approx(1.0, abs=1e-12)
    assert r.r2 == pytest.approx(1.0)


def test_fit_recovers_linear_with_constant():
    r = fit_scaling([(x, 3 * x) for x in (0.01, 0.02, 0.05, 0.1)])
    assert r.exponent == pytest.approx(1.0, abs=1e-12)
    assert r.constant == pytest.approx(3.0, abs=1e-12)


def test_fit_excludes_nonpositive_and_needs_three_points():
    r = fit_scaling([(0.01, 0.1), (0.02, 0.0), (0.04, 0.2), (0.08, 0.3)])
    assert r.excluded == ((0.02, 0.0),)
    assert len(r.points) == 3
    with pytest.raises(FitError):
        fit_scaling([(0.1, 1.0), (0.2, 0.0), (0.3, -1.0)])
    with pytest.raises(FitError):
        fit_scaling([(0.1, 1.0), (0.1, 2.0), (0.2, 1.0)])


def test_scaling_report_round_trip():
    r = fit_scaling([(0.01, 0.2), (0.03, 0.31), (0.1, 0.7), (0.0, 1.0)])
    again = ScalingReport.from_dict(r.to_dict())
    assert again == r
    assert again.predict(0.05) == pytest.approx(r.constant * 0.05**r.exponent)


def test_norm_chain_example():
    chain = norm_chain_check(np.diag([0.0, 1.0]), np.diag([0.1, 1.1]))
    assert chain.lhs == pytest.approx(0.1)
    assert chain.mid == pytest.approx(0.1)
    assert chain.rhs == pytest.approx(0.1)
    assert chain.passed


def test_chain_checks_dimension_mismatch():
    with pytest.raises(ValueError, match="dimension"):
        norm_chain_check(np.eye(2), np.eye(3))
    with pytest.raises(ValueError, match="dimension"):
        triangle_chain_check(np.eye(2), np.eye(2), np.eye(2), np.eye(3))


def test_triangle_chain_trivial():
    A = np.diag([-1.0, 2.0])
    assert triangle_chain_check(A, A, A, A)
    assert triangle_chain_check(A, A + 0.1 * np.eye(2), A + 0.1 * np.eye(2), A)


# -- properties -----------------------------------------------------------------


@settings(max_examples=200, deadline=None)
@given(sets, sets)
def test_hausdorff_matches_brute_force_and_scipy(a, b):
    d = hausdorff(a, b)
    assert d == pytest.approx(brute_hausdorff(a, b), abs=1e-12)
    pa, pb = np.reshape(a, (-1, 1)), np.reshape(b, (-1, 1))
    ref = max(directed_hausdorff(pa, pb)[0], directed_hausdorff(pb, pa)[0])
    assert d == pytest.approx(ref, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(sets, sets, sets)
def test_hausdorff_metric_axioms(a, b, c):
    assert hausdorff(a, a) == 0.0
    assert hausdorff(a, b) == hausdorff(b, a)
    assert hausdorff(a, b) >= 0.0
    assert hausdorff(a, c) <= hausdorff(a, b) + hausdorff(b, c) + 1e-12


@settings(max_examples=200, deadline=None)
@given(sets, sets)
def test_edges_bounded_by_hausdorff(a, b):
    lo, hi = edge_deviation(a, b)
    d = hausdorff(a, b)
    assert max(lo, hi) <= d + 1e-12


@settings(max_examples=100, deadline=None)
@given(st.floats(-2, 2), st.floats(0.01, 10), st.lists(st.floats(1e-4, 1.0), min_size=3, max_size=8, unique=True))
def test_fit_exact_power_law(p, C, deltas):
    if max(deltas) / min(deltas) < 1.5:
        deltas = deltas + [min(deltas) * 2, min(deltas) * 4]
    r = fit_scaling([(d, C * d**p) for d in deltas])
    assert r.exponent == pytest.approx(p, abs=1e-8)
    assert r.constant == pytest.approx(C, rel=1e-8)


@settings(max_examples=100, deadline=None)
@given(st.lists(finite, min_size=1, max_size=20), st.lists(finite, min_size=1, max_size=20))
def test_track_returns_unperturbed_edges(low, high):
    lower = sorted(x - 60 for x in low)
    upper = sorted(x + 60 for x in high)
    S = np.array(lower + upper)
    assert track_inner_gap(S, lower[-1], upper[0]) == (lower[-1], upper[0])


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_norm_chain_random_hermitian(seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(12, 12)) + 1j * rng.normal(size=(12, 12))
    b = rng.normal(size=(12, 12)) + 1j * rng.normal(size=(12, 12))
    A = (a + a.conj().T) / 2
    B = A + rng.uniform(0, 1) * (b + b.conj().T) / 2
    assert norm_chain_check(A, B).passed
