"""Weyl quantization of band-limited symbols into lattice hopping operators.

For a(x, xi) = sum_k c_k(x) exp(i k.xi) the Weyl rule gives

    (A psi)(x) = sum_k c_k(x + k/2) psi(x + k),

so A acts independently on every fiber ``x0 + Z^d``. Fiber windows are
stored in LAPACK lower band format, which is what the banded eigensolvers in
:mod:`specstab.spectrum` consume.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from .symbols import Symbol, xi_decompose

DEFAULT_WINDOW_CAP = 4096

Hop = tuple[int, ...]


class WindowCapError(ValueError):
    pass


@dataclass(frozen=True)
class HoppingOperator:
    """Finite-range lattice operator ``(A psi)(x) = sum_k h_k(x) psi(x + k)``.

    Each ``hops[k]`` maps an array of shape ``(d, N)`` of positions to ``N``
    complex values.
    """

    dim: int
    hops: Mapping[Hop, Callable[[np.ndarray], np.ndarray]]

    def __post_init__(self):
        for k in self.hops:
            if len(k) != self.dim:
                raise ValueError(f"hop {k} has wrong length for dimension {self.dim}")
            if tuple(-c for c in k) not in self.hops:
                raise ValueError(f"hop set not closed under negation: missing {tuple(-c for c in k)}")

    @property
    def hop_set(self) -> list[Hop]:
        return sorted(self.hops)

    def coefficient(self, k: Hop, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            x = x.reshape(self.dim, -1)
        return np.broadcast_to(np.asarray(self.hops[k](x), dtype=complex), x.shape[1:])

    def apply(self, psi: Mapping[Hop, complex], x0=None) -> dict[Hop, complex]:
        """Apply to a finitely supported function on ``x0 + Z^d`` (dict site -> value)."""
        x0 = np.zeros(self.dim) if x0 is None else np.asarray(x0, float)
        out: dict[Hop, complex] = {}
        targets = set()
        for n in psi:
            for k in self.hops:
                targets.add(tuple(a - b for a, b in zip(n, k)))
        for n in sorted(targets):
            pos = (x0 + np.array(n, float)).reshape(self.dim, 1)
            total = 0j
            for k in self.hops:
                m = tuple(a + b for a, b in zip(n, k))
                if m in psi:
                    total += complex(self.coefficient(k, pos)[0]) * psi[m]
            out[n] = total
        return out


def _weyl_evaluator(coeff, k: Hop, params):
    half = np.asarray(k, dtype=float).reshape(-1, 1) / 2.0

    def h(x):
        return coeff(x + half, params)

    return h


def weyl_hopping(s: Symbol) -> HoppingOperator:
    """Weyl quantization of a band-limited symbol: ``h_k(x) = c_k(x + k/2)``."""
    coeffs = xi_decompose(s)
    params = dict(s.params)
    return HoppingOperator(s.dim, {k: _weyl_evaluator(c, k, params) for k, c in coeffs.items()})


def hermiticity_residual(A: HoppingOperator, samples: int = 256, seed: int = 0, box: float = 100.0) -> float:
    """max |h_{-k}(x + k) - conj(h_k(x))| over random ``x`` in ``[-box, box]^d``."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    x = rng.uniform(-box, box, size=(A.dim, samples))
    worst = 0.0
    for k in A.hops:
        mk = tuple(-c for c in k)
        shifted = x + np.asarray(k, float).reshape(-1, 1)
        diff = A.coefficient(mk, shifted) - np.conj(A.coefficient(k, x))
        worst = max(worst, float(np.max(np.abs(diff))))
    return worst


def window_sites(dim: int, M: int) -> np.ndarray:
    """Integer sites of the window ``{-M..M}^d`` in row-major order, shape ``(d, N)``."""
    axis = np.arange(-M, M + 1)
    grids = np.meshgrid(*([axis] * dim), indexing="ij")
    return np.stack([g.ravel() for g in grids])


@dataclass(frozen=True, eq=False)
class FiberMatrix:
    """Hard-truncated section of a hopping operator on ``x0 + {-M..M}^d``.

    ``band[j, i]`` holds the entry ``(i + j, i)`` (lower band storage).
    """

    x0: np.ndarray
    M: int
    dim: int
    band: np.ndarray
    boundary_rule: str = "hard"

    @property
    def size(self) -> int:
        return self.band.shape[1]

    @property
    def bandwidth(self) -> int:
        return self.band.shape[0] - 1

    def dense(self) -> np.ndarray:
        n = self.size
        H = np.zeros((n, n), dtype=self.band.dtype)
        for j in range(self.bandwidth + 1):
            idx = np.arange(n - j)
            H[idx + j, idx] = self.band[j, : n - j]
            if j:
                H[idx, idx + j] = np.conj(self.band[j, : n - j])
        return H

    def boundary_mask(self, margin: int) -> np.ndarray:
        """Sites at lattice distance < ``margin`` from the window boundary."""
        sites = window_sites(self.dim, self.M)
        dist = np.min(self.M - np.abs(sites), axis=0)
        return dist < margin


def fiber_matrix(A: HoppingOperator, x0, M: int, cap: int = DEFAULT_WINDOW_CAP) -> FiberMatrix:
    """Hermitian section of ``A`` on the fiber window, symmetrized entrywise."""
    if M < 1:
        raise ValueError("window half-width M must be >= 1")
    d = A.dim
    L = 2 * M + 1
    n = L**d
    if n > cap:
        raise WindowCapError(f"window of {n} sites exceeds cap {cap}")
    x0 = np.broadcast_to(np.asarray(x0, dtype=float), (d,)).copy()
    sites = window_sites(d, M)
    pos = sites + x0.reshape(-1, 1)
    strides = np.array([L ** (d - 1 - j) for j in range(d)])

    def offset(k):
        return int(np.dot(strides, k))

    hops = [k for k in A.hop_set if all(abs(c) <= 2 * M for c in k)]
    width = max((abs(offset(k)) for k in hops), default=0)
    upper = {}  # offset -> array of entries (i, i + offset) for i in 0..n-1
    diag = np.zeros(n, dtype=complex)
    for k in hops:
        o = offset(k)
        if o < 0:
            continue
        karr = np.asarray(k).reshape(-1, 1)
        target = sites + karr
        valid = np.all(np.abs(target) <= M, axis=0)
        mk = tuple(-c for c in k)
        # average the two equal-in-theory expressions for entry (n, n+k)
        forward = A.coefficient(k, pos[:, valid])
        backward = np.conj(A.coefficient(mk, pos[:, valid] + karr))
        vals = 0.5 * (forward + backward)
        if o == 0:
            diag[valid] += vals
        else:
            slot = upper.setdefault(o, np.zeros(n, dtype=complex))
            slot[np.flatnonzero(valid)] += vals
    band = np.zeros((width + 1, n), dtype=complex)
    band[0] = diag.real
    for o, entries in upper.items():
        # lower entry (i + o, i) = conj(upper entry (i, i + o))
        band[o, : n - o] = np.conj(entries[: n - o])
    if not np.any(band.imag):
        band = band.real.copy()
    return FiberMatrix(x0, M, d, band)


def fiber_offsets(dim: int, per_axis: int | tuple[int, ...]) -> list[np.ndarray]:
    """Uniform grid of fiber offsets over ``[0, 1)^d``."""
    counts = (per_axis,) * dim if isinstance(per_axis, int) else tuple(per_axis)
    if len(counts) != dim or any(c < 1 for c in counts):
        raise ValueError(f"bad fiber grid {per_axis!r} for dimension {dim}")
    axes = [np.arange(c) / c for c in counts]
    return [np.array(p) for p in itertools.product(*axes)]
