"""Measures of spectral motion and power-law fits."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .spectrum import EmptySpectrumError, SpectralSet, _as_values, edges

CHAIN_TOL = 1e-10


class OneSidedSpectrumError(ValueError):
    """No spectrum on one side of the gap midpoint: the gap has closed."""


class FitError(ValueError):
    pass


def _nonempty(S) -> np.ndarray:
    v = _as_values(S)
    if v.size == 0:
        raise EmptySpectrumError("empty spectral set")
    return v


def directed_distance(a: np.ndarray, b: np.ndarray) -> float:
    """sup over ``a`` of the distance to the sorted array ``b``."""
    j = np.searchsorted(b, a)
    left = b[np.clip(j - 1, 0, b.size - 1)]
    right = b[np.clip(j, 0, b.size - 1)]
    return float(np.max(np.minimum(np.abs(a - left), np.abs(a - right))))


def hausdorff(Sa, Sb) -> float:
    a, b = _nonempty(Sa), _nonempty(Sb)
    return max(directed_distance(a, b), directed_distance(b, a))


def edge_deviation(S_delta, S_0) -> tuple[float, float]:
    lo_d, hi_d = edges(_nonempty(S_delta))
    lo_0, hi_0 = edges(_nonempty(S_0))
    return abs(lo_d - lo_0), abs(hi_d - hi_0)


def track_inner_gap(S_delta, lower0: float, upper0: float) -> tuple[float, float]:
    """Edges of the perturbed gap, split at the unperturbed midpoint.

    Returns (sup of points <= midpoint, inf of points > midpoint); a point
    sitting exactly on the midpoint counts as lower.
    """
    if not lower0 < upper0:
        raise ValueError("need lower0 < upper0")
    v = _nonempty(S_delta)
    mid = 0.5 * (lower0 + upper0)
    below = v[v <= mid]
    above = v[v > mid]
    if below.size == 0 or above.size == 0:
        raise OneSidedSpectrumError(f"spectrum lies on one side of the midpoint {mid}")
    return float(below[-1]), float(above[0])


@dataclass(frozen=True)
class ScalingReport:
    """Least-squares fit ``metric ~ constant * delta**exponent`` in log-log coordinates."""

    points: tuple[tuple[float, float], ...]
    exponent: float
    log_constant: float
    r2: float
    excluded: tuple[tuple[float, float], ...] = field(default=())

    @property
    def constant(self) -> float:
        return math.exp(self.log_constant)

    def predict(self, delta):
        return self.constant * np.asarray(delta, dtype=float) ** self.exponent

    def to_dict(self) -> dict:
        return {
            "points": [list(p) for p in self.points],
            "excluded": [list(p) for p in self.excluded],
            "exponent": self.exponent,
            "log_constant": self.log_constant,
            "constant": self.constant,
            "r2": self.r2,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ScalingReport":
        return cls(
            tuple(tuple(p) for p in data["points"]),
            data["exponent"],
            data["log_constant"],
            data["r2"],
            tuple(tuple(p) for p in data.get("excluded", ())),
        )


def fit_scaling(points: Sequence[tuple[float, float]]) -> ScalingReport:
    usable = [(float(d), float(m)) for d, m in points if d > 0 and m > 0]
    excluded = tuple((float(d), float(m)) for d, m in points if not (d > 0 and m > 0))
    if len(usable) < 3 or len({d for d, _ in usable}) < 3:
        raise FitError(f"need >= 3 points with positive metric and distinct delta, got {len(usable)}")
    usable.sort()
    x = np.log([d for d, _ in usable])
    y = np.log([m for _, m in usable])
    design = np.vstack([x, np.ones_like(x)]).T
    (slope, intercept), *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - (slope * x + intercept)
    ss_res = float(resid @ resid)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot > 0:
        r2 = 1.0 - ss_res / ss_tot
    else:
        r2 = 1.0 if ss_res <= 1e-24 else 0.0
    return ScalingReport(tuple(usable), float(slope), float(intercept), float(min(1.0, max(0.0, r2))), excluded)


# ---------------------------------------------------------------------------
# Matrix-level inequality checks


class NormChain(NamedTuple):
    lhs: float  # max edge deviation
    mid: float  # Hausdorff distance of the spectra
    rhs: float  # spectral norm of A - B
    passed: bool


def _hermitian_pair(*mats):
    arrs = [np.asarray(m) for m in mats]
    shape = arrs[0].shape
    if any(a.shape != shape for a in arrs) or len(shape) != 2 or shape[0] != shape[1]:
        raise ValueError("dimension mismatch")
    return arrs


def spectral_norm(H) -> float:
    return float(np.max(np.abs(np.linalg.eigvalsh(H))))


def norm_chain_check(A, B, tol: float = CHAIN_TOL) -> NormChain:
    """|E+-(A) - E+-(B)| <= d_h(spec A, spec B) <= ||A - B|| for Hermitian A, B."""
    A, B = _hermitian_pair(A, B)
    wa, wb = np.linalg.eigvalsh(A), np.linalg.eigvalsh(B)
    lhs = max(abs(wa[0] - wb[0]), abs(wa[-1] - wb[-1]))
    mid = hausdorff(wa, wb)
    rhs = spectral_norm(A - B)
    return NormChain(float(lhs), mid, rhs, bool(lhs <= mid + tol and mid <= rhs + tol))


def triangle_chain_check(A, B, C, D, tol: float = CHAIN_TOL) -> bool:
    """|E+-(A) - E+-(D)| <= ||A - B|| + |E+-(B) - E+-(C)| + ||C - D||."""
    A, B, C, D = _hermitian_pair(A, B, C, D)
    ea, eb, ec, ed = (np.linalg.eigvalsh(m)[[0, -1]] for m in (A, B, C, D))
    ab, cd = spectral_norm(A - B), spectral_norm(C - D)
    return bool(np.all(np.abs(ea - ed) <= ab + np.abs(eb - ec) + cd + tol))
