"""Spectral sets from fiber windows: eigensolves, boundary filtering, gaps, edges."""

from __future__ import annotations

import hashlib
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
import scipy.linalg

from .quantize import DEFAULT_WINDOW_CAP, FiberMatrix, HoppingOperator, fiber_matrix, fiber_offsets

MERGE_ATOL = 1e-12
MASS_STEP = 1e-9


class EmptySpectrumError(ValueError):
    """Every eigenvalue was rejected as boundary-localized (or the set is empty)."""


@dataclass(frozen=True, eq=False)
class SpectralSet:
    """Sorted finite sample of a spectrum.

    ``resolution`` is the smallest spacing that counts as an open gap and
    ``provenance`` records where the sample came from ("bloch" or "truncation").
    """

    values: np.ndarray
    resolution: float
    provenance: str

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        if not np.all(np.isfinite(v)):
            raise ValueError("spectral values must be finite")
        if np.any(np.diff(v) < 0):
            v = np.sort(v)
        if not self.resolution > 0:
            raise ValueError("resolution must be positive")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_values(cls, values, resolution: float, provenance: str, atol: float = MERGE_ATOL):
        """Sort ``values`` and collapse consecutive points closer than ``atol``."""
        v = np.sort(np.asarray(values, dtype=float).ravel())
        if v.size:
            keep = np.empty(v.size, dtype=bool)
            keep[0] = True
            keep[1:] = np.diff(v) > atol
            v = v[keep]
        return cls(v, resolution, provenance)

    def __len__(self):
        return self.values.size

    def __iter__(self):
        return iter(self.values.tolist())

    @property
    def span(self) -> tuple[float, float]:
        return edges(self)

    def scaled(self, factor: float) -> "SpectralSet":
        return SpectralSet(np.sort(self.values * factor), self.resolution * abs(factor), self.provenance)


class Gap(NamedTuple):
    lower: float
    upper: float

    @property
    def width(self) -> float:
        return self.upper - self.lower

    @property
    def center(self) -> float:
        return 0.5 * (self.lower + self.upper)


def _as_values(S) -> np.ndarray:
    return S.values if isinstance(S, SpectralSet) else np.sort(np.asarray(S, dtype=float).ravel())


# ---------------------------------------------------------------------------
# Eigensolvers


def eigen_hermitian(H, vectors: bool = False):
    """All eigenvalues of a dense Hermitian matrix, ascending."""
    H = np.asarray(H)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {H.shape}")
    if not np.all(np.isfinite(H)):
        raise ValueError("matrix has non-finite entries")
    if vectors:
        return scipy.linalg.eigh(H, driver="evr")
    return scipy.linalg.eigh(H, eigvals_only=True, driver="evr")


def band_eigenvalues(band: np.ndarray) -> np.ndarray:
    """Eigenvalues of a Hermitian matrix given in lower band storage."""
    if band.shape[0] == 1:
        return np.sort(band[0].real)
    return scipy.linalg.eig_banded(band, lower=True, eigvals_only=True, check_finite=False)


def boundary_masses(fm: FiberMatrix, margin: int, method: str = "perturbative", step: float = MASS_STEP):
    """Eigenvalues of a fiber window and the boundary mass of each eigenvector.

    The boundary mass of an eigenvector ``v`` is ``<v, P v>`` with ``P`` the
    projector on sites closer than ``margin`` to the window edge.

    ``method="perturbative"`` never forms eigenvectors: ``<v, P v>`` is the
    derivative of the eigenvalue under ``H + t P`` (Hellmann-Feynman), taken
    as a forward difference in ``t``. Inside a degenerate eigenspace this picks
    the basis that diagonalizes ``P``. Masses are accurate to about 1e-5
    (eigensolver roundoff over the step). A central difference would not: the
    split cluster comes back sorted in opposite orders for ``+t`` and ``-t``,
    which averages the largest mass with the smallest. ``method="vectors"``
    uses a dense eigendecomposition instead, with whatever basis LAPACK returns
    inside degenerate eigenspaces.
    """
    mask = fm.boundary_mask(margin)
    if method == "vectors":
        w, v = eigen_hermitian(fm.dense(), vectors=True)
        return w, np.sum(np.abs(v[mask]) ** 2, axis=0)
    if method != "perturbative":
        raise ValueError(f"unknown method {method!r}")
    scale = max(1.0, float(np.max(np.abs(fm.band))))
    h = step * scale
    shifted = fm.band.copy()
    shifted[0] = shifted[0] + h * mask
    w = band_eigenvalues(fm.band)
    wp = band_eigenvalues(shifted)
    masses = np.clip((wp - w) / h, 0.0, 1.0)
    return w, masses


def default_margin(M: int) -> int:
    return max(1, math.ceil(M / 10))


def truncation_resolution(A: HoppingOperator, M: int, samples: int = 64) -> float:
    """3x a finite-size level-spacing estimate: (sum_k |k| max|h_k|) * pi / (2M + 1)."""
    rng = np.random.default_rng(0)
    x = rng.uniform(-M, M, size=(A.dim, samples))
    speed = 0.0
    for k in A.hops:
        norm_k = float(np.sqrt(np.sum(np.square(k))))
        if norm_k:
            speed += norm_k * float(np.max(np.abs(A.coefficient(k, x))))
    est = speed * math.pi / (2 * M + 1)
    return 3.0 * est if est > 0 else 1e-9


def _fingerprint(fm: FiberMatrix) -> bytes:
    return hashlib.sha1(fm.band.tobytes()).digest() + str(fm.band.dtype).encode()


def filtered_spectrum(
    A: HoppingOperator,
    fibers: int | Sequence[int] = 16,
    M: int = 100,
    margin: int | None = None,
    threshold: float = 0.1,
    resolution: float | None = None,
    workers: int = 1,
    cap: int = DEFAULT_WINDOW_CAP,
    method: str = "perturbative",
) -> SpectralSet:
    """Union over fibers of window eigenvalues whose boundary mass is below ``threshold``.

    Windows with identical matrices (e.g. fibers that differ only along an
    axis the coefficients ignore) are solved once.
    """
    margin = default_margin(M) if margin is None else margin
    if not 1 <= margin < M:
        raise ValueError(f"boundary margin must satisfy 1 <= r < M, got r={margin}, M={M}")
    if not 0 < threshold < 1:
        raise ValueError("threshold must lie in (0, 1)")
    mats = [fiber_matrix(A, x0, M, cap) for x0 in fiber_offsets(A.dim, fibers)]
    unique: dict[bytes, FiberMatrix] = {}
    for fm in mats:
        unique.setdefault(_fingerprint(fm), fm)
    keys = sorted(unique)

    def solve(key):
        w, mass = boundary_masses(unique[key], margin, method)
        return w[mass < threshold]

    if workers > 1 and len(keys) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(solve, keys))
    else:
        parts = [solve(key) for key in keys]
    kept = np.concatenate(parts) if parts else np.empty(0)
    if kept.size == 0:
        raise EmptySpectrumError("all window states are boundary-localized")
    eps = truncation_resolution(A, M) if resolution is None else resolution
    return SpectralSet.from_values(kept, eps, "truncation")


# ---------------------------------------------------------------------------
# Edges and gaps


def edges(S) -> tuple[float, float]:
    v = _as_values(S)
    if v.size == 0:
        raise EmptySpectrumError("edges of an empty set")
    return float(v[0]), float(v[-1])


def detect_gaps(S, eps: float | None = None) -> list[Gap]:
    """Maximal open intervals between consecutive points that are wider than ``eps``."""
    if eps is None:
        eps = S.resolution
    if not eps > 0:
        raise ValueError("gap resolution must be positive")
    v = _as_values(S)
    idx = np.flatnonzero(np.diff(v) > eps)
    return [Gap(float(v[i]), float(v[i + 1])) for i in idx]


def gap_near(S, energy: float, eps: float | None = None) -> Gap | None:
    """The detected gap whose closure is nearest to ``energy``."""
    best, best_dist = None, math.inf
    for g in detect_gaps(S, eps):
        if g.lower <= energy <= g.upper:
            dist = 0.0
        else:
            dist = min(abs(energy - g.lower), abs(energy - g.upper))
        if dist < best_dist:
            best, best_dist = g, dist
    return best


def first_gap_above(S, energy: float, eps: float | None = None) -> Gap | None:
    """The detected gap with the smallest lower edge strictly above ``energy``."""
    above = [g for g in detect_gaps(S, eps) if g.lower > energy]
    return min(above, key=lambda g: g.lower) if above else None
