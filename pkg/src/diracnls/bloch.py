"""Floquet-Bloch eigenvalue problems for ``H = -d^2/dx^2 + V(x)``.

A Bloch wave at quasimomentum ``k`` is stored by its plane-wave coefficients
``c_m``, ``Phi(x, k) = exp(ikx) sum_{m=-M..M} c_m exp(2 pi i m x)``, so the
pseudoperiodicity ``Phi(x + 1) = exp(ik) Phi(x)`` holds by construction and
``sum |c_m|^2`` is the ``L^2([0, 1])`` norm.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import PeriodicPotential
from .errors import DomainError, NumericalError, TruncationError

DEFAULT_M = 24


def mode_range(M: int) -> np.ndarray:
    return np.arange(-M, M + 1)


def _ro(a):
    a = np.array(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class HillMatrix:
    k: float
    M: int
    entries: np.ndarray

    @property
    def modes(self) -> np.ndarray:
        return mode_range(self.M)


@dataclass(frozen=True, eq=False)
class BlochWave:
    k: float
    fourier_coeffs: np.ndarray
    mu: float

    def __post_init__(self):
        c = np.array(self.fourier_coeffs, dtype=complex)
        if c.ndim != 1 or c.size % 2 == 0:
            raise ValueError("Bloch coefficients must be a vector over modes -M..M")
        object.__setattr__(self, "fourier_coeffs", _ro(c))

    @property
    def M(self) -> int:
        return (self.fourier_coeffs.size - 1) // 2

    @property
    def modes(self) -> np.ndarray:
        return mode_range(self.M)

    @property
    def wavenumbers(self) -> np.ndarray:
        """``k + 2 pi m`` for each stored mode."""
        return self.k + 2.0 * np.pi * self.modes

    def norm(self) -> float:
        return float(np.linalg.norm(self.fourier_coeffs))

    def __call__(self, x):
        return bloch_wave_eval(self, x)

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        phases = np.exp(1j * np.multiply.outer(x, self.wavenumbers))
        return phases @ (1j * self.wavenumbers * self.fourier_coeffs)


def assemble_hill_matrix(pot: PeriodicPotential, k: float, M: int = DEFAULT_M) -> HillMatrix:
    """Plane-wave Galerkin matrix of ``H(k)`` on modes ``-M..M``.

    Entry ``(m, m')`` is ``(k + 2 pi m)^2 delta + hat V(m - m')`` with the
    cosine convention ``hat V(+-p) = V_p / 2``.
    """
    if M < pot.max_mode:
        raise TruncationError(f"truncation M={M} is below the highest potential mode {pot.max_mode}")
    modes = mode_range(M)
    H = np.diag((k + 2.0 * np.pi * modes) ** 2).astype(complex)
    for p, v in pot.coefficients.items():
        off = np.full(2 * M + 1 - p, 0.5 * v)
        H += np.diag(off, p) + np.diag(off, -p)
    return HillMatrix(float(k), M, _ro(H))


def _eigh(H: np.ndarray, k: float):
    try:
        return np.linalg.eigh(H)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"Hermitian eigensolve failed at k={k!r}: {exc}", k=k) from exc


def hill_eigensystem(pot: PeriodicPotential, k: float, M: int = DEFAULT_M):
    """Ascending eigenvalues and orthonormal eigenvectors (columns) of ``H(k)``."""
    return _eigh(assemble_hill_matrix(pot, k, M).entries, k)


@dataclass(frozen=True, eq=False)
class BandStructure:
    """Sorted dispersion bands ``bands[i, n-1] = mu_n(k_grid[i])``.

    ``vectors`` (optional) holds the eigenvector columns per k, shape
    ``(nk, 2M+1, n_bands)``.  The potential and truncation are kept so that
    derived quantities (slopes, crossing checks) can re-solve at off-grid k.
    """

    k_grid: np.ndarray
    bands: np.ndarray
    potential: PeriodicPotential
    M: int
    vectors: Optional[np.ndarray] = None

    @property
    def n_bands(self) -> int:
        return self.bands.shape[1]

    def band(self, n: int) -> np.ndarray:
        return self.bands[:, n - 1]

    def wave(self, i: int, n: int) -> BlochWave:
        if self.vectors is None:
            raise ValueError("band structure was solved without storing Bloch waves")
        return BlochWave(float(self.k_grid[i]), self.vectors[i, :, n - 1], float(self.bands[i, n - 1]))


def solve_bands(
    pot: PeriodicPotential,
    k_grid: Sequence[float],
    n_bands: int,
    M: int = DEFAULT_M,
    keep_waves: bool = False,
) -> BandStructure:
    k_grid = np.asarray(k_grid, dtype=float)
    if k_grid.ndim != 1 or k_grid.size == 0:
        raise ValueError("k_grid must be a non-empty 1-D sequence")
    if np.any(np.diff(k_grid) <= 0):
        raise ValueError("k_grid must be strictly increasing")
    if not 1 <= n_bands <= 2 * M + 1:
        raise ValueError(f"n_bands must lie in [1, {2 * M + 1}] for M={M}")
    bands = np.empty((k_grid.size, n_bands))
    vecs = np.empty((k_grid.size, 2 * M + 1, n_bands), dtype=complex) if keep_waves else None
    for i, k in enumerate(k_grid):
        w, U = hill_eigensystem(pot, k, M)
        bands[i] = w[:n_bands]
        if keep_waves:
            vecs[i] = U[:, :n_bands]
    return BandStructure(_ro(k_grid), _ro(bands), pot, M, None if vecs is None else _ro(vecs))


def bloch_wave_eval(wave: BlochWave, x_samples) -> np.ndarray:
    x = np.asarray(x_samples, dtype=float)
    phases = np.exp(1j * np.multiply.outer(x, wave.wavenumbers))
    return phases @ wave.fourier_coeffs


def band_value(pot: PeriodicPotential, n: int, k: float, M: int = DEFAULT_M) -> float:
    w, _ = hill_eigensystem(pot, k, M)
    return float(w[n - 1])


def band_derivative(bs: BandStructure, n: int, k: float, h: Optional[float] = None) -> float:
    """Slope ``d mu_n / dk`` by Richardson-extrapolated centred differences.

    The default stencil half-width is half the k-grid spacing (capped at
    1e-2); the stencil may not reach ``k = pi``, where sorted bands have a
    kink.
    """
    if h is None:
        spacing = float(np.min(np.diff(bs.k_grid))) if bs.k_grid.size > 1 else 1e-2
        h = min(0.5 * spacing, 1e-2)
    if abs(k - np.pi) <= h:
        raise DomainError(f"band {n} is not smooth at k = pi; got k={k!r} with stencil half-width {h}")
    if not 1 <= n <= 2 * bs.M + 1:
        raise ValueError(f"band index {n} out of range")

    def central(step):
        return (band_value(bs.potential, n, k + step, bs.M) - band_value(bs.potential, n, k - step, bs.M)) / (2 * step)

    return (4.0 * central(0.5 * h) - central(h)) / 3.0
