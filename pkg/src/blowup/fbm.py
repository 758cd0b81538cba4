"""Exact sampling of fractional Brownian motion pairs on a uniform grid.

Paths are generated from fractional Gaussian noise by circulant embedding
(Davies-Harte): the length-2m circulant extension of the fGn covariance is
diagonalized by FFT, complex Gaussians are shaped by the eigenvalue square
roots, and one more FFT yields increments with exactly the target
covariance.  When the minimal embedding has negative eigenvalues its size
doubles until it is nonnegative-definite (capped), after which a Cholesky
factorization of the full covariance is used instead.  Exactness matters
because the stopping times downstream are path-wise functionals.

Two independent components are drawn from one master seed through a
documented splitting rule: stream j of path i uses
``numpy.random.SeedSequence([master_seed, i, j])``, so ensembles are
reproducible under any parallel schedule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

EMBEDDING_CAP = 2 ** 24  # largest circulant size before the Cholesky fallback
_EIG_TOL = 1e-11  # relative clamp for roundoff-negative embedding eigenvalues


class CholeskyFailure(RuntimeError):
    """Raised when the dense fGn covariance is numerically indefinite."""


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid 0 = t_0 < ... < t_n = t_end with n = n_steps intervals."""

    t_end: float
    n_steps: int

    def __post_init__(self):
        if self.t_end <= 0.0:
            raise ValueError("t_end must be positive")
        if self.n_steps < 1:
            raise ValueError("n_steps must be at least 1")

    @property
    def dt(self) -> float:
        return self.t_end / self.n_steps

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.t_end, self.n_steps + 1)


@dataclass
class FbmPathPair:
    """Two independent fBm sample paths on a shared grid, b[0] = 0."""

    grid: TimeGrid
    hurst: float
    b1: np.ndarray
    b2: np.ndarray
    seed: tuple = ()

    def interp(self, t):
        """Piecewise-linear path values (b1(t), b2(t)) at arbitrary times."""
        nodes = self.grid.nodes
        t = np.asarray(t, dtype=float)
        return np.interp(t, nodes, self.b1), np.interp(t, nodes, self.b2)

    def to_csv(self, path) -> None:
        data = np.column_stack([self.grid.nodes, self.b1, self.b2])
        np.savetxt(path, data, delimiter=",", header="t,b1,b2", comments="")


def fbm_covariance(hurst: float, s, t):
    """Covariance 0.5 (s^{2H} + t^{2H} - |t - s|^{2H}) of fBm."""
    if not 0.0 < hurst < 1.0:
        raise ValueError("Hurst index must lie in (0, 1)")
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(s < 0.0) or np.any(t < 0.0):
        raise ValueError("times must be nonnegative")
    two_h = 2.0 * hurst
    return 0.5 * (s ** two_h + t ** two_h - np.abs(t - s) ** two_h)


def _fgn_autocov(hurst: float, lags: np.ndarray) -> np.ndarray:
    k = np.abs(lags).astype(float)
    two_h = 2.0 * hurst
    return 0.5 * ((k + 1.0) ** two_h - 2.0 * k ** two_h + np.abs(k - 1.0) ** two_h)


_eig_cache: dict[tuple[float, int], tuple[int, np.ndarray]] = {}


def _embedding_eigenvalues(hurst: float, n: int) -> tuple[int, np.ndarray] | None:
    """Eigenvalues of the smallest nonnegative-definite circulant embedding.

    Returns (m, eigs) with the circulant of size 2m, or None if no valid
    embedding exists below the size cap.
    """
    key = (hurst, n)
    if key in _eig_cache:
        return _eig_cache[key]
    m = 1
    while m < n:
        m *= 2
    while 2 * m <= EMBEDDING_CAP:
        c = _fgn_autocov(hurst, np.arange(m + 1))
        row = np.concatenate([c, c[-2:0:-1]])
        eigs = np.fft.fft(row).real
        if eigs.min() >= -_EIG_TOL * eigs.max():
            eigs = np.maximum(eigs, 0.0)
            _eig_cache[key] = (m, eigs)
            return m, eigs
        m *= 2
    return None


def _sample_unit_fgn(rng: np.random.Generator, hurst: float, n: int) -> np.ndarray:
    """One exact fGn sample of length n with unit time step."""
    emb = _embedding_eigenvalues(hurst, n)
    if emb is not None:
        m, eigs = emb
        z = rng.standard_normal(2 * m)
        w = np.empty(2 * m, dtype=complex)
        w[0] = math.sqrt(eigs[0] / (2 * m)) * z[0]
        w[m] = math.sqrt(eigs[m] / (2 * m)) * z[1]
        re = z[2 : m + 1]
        im = z[m + 1 : 2 * m]
        half = np.sqrt(eigs[1:m] / (4 * m))
        w[1:m] = half * (re + 1j * im)
        w[m + 1 :] = np.conj(w[1:m][::-1])
        return np.fft.fft(w).real[:n]
    # Cholesky fallback on the dense Toeplitz covariance
    cov = _fgn_autocov(hurst, np.arange(n)[None, :] - np.arange(n)[:, None])
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - defensive
        raise CholeskyFailure(
            f"fGn covariance indefinite at H={hurst}, n={n}: {exc}"
        ) from exc
    return chol @ rng.standard_normal(n)


def path_seed(master_seed: int, *indices: int) -> np.random.SeedSequence:
    """Splitting rule: append stream/path indices to the master seed state."""
    return np.random.SeedSequence([int(master_seed), *map(int, indices)])


def sample_fbm_pair(hurst: float, grid: TimeGrid, seed, path_index: int = 0) -> FbmPathPair:
    """Two independent exact fBm paths on the grid, deterministic in
    (hurst, grid, seed, path_index).

    ``seed`` may be an integer master seed (split per the documented rule)
    or a pair of ready SeedSequences.
    """
    if not 0.5 <= hurst < 1.0:
        raise ValueError("Hurst index must lie in [1/2, 1)")
    if isinstance(seed, (int, np.integer)):
        seqs = (path_seed(seed, path_index, 0), path_seed(seed, path_index, 1))
        record = (int(seed), path_index)
    else:
        seqs = tuple(seed)
        record = ("explicit",)
    scale = grid.dt ** hurst
    paths = []
    for seq in seqs:
        rng = np.random.Generator(np.random.PCG64(seq))
        fgn = _sample_unit_fgn(rng, hurst, grid.n_steps) * scale
        b = np.empty(grid.n_steps + 1)
        b[0] = 0.0
        np.cumsum(fgn, out=b[1:])
        paths.append(b)
    return FbmPathPair(grid=grid, hurst=hurst, b1=paths[0], b2=paths[1], seed=record)


def zero_path_pair(grid: TimeGrid, hurst: float = 0.75) -> FbmPathPair:
    """Degenerate pair with both components identically zero (test hook)."""
    z = np.zeros(grid.n_steps + 1)
    return FbmPathPair(grid=grid, hurst=hurst, b1=z, b2=z.copy(), seed=("zero",))
