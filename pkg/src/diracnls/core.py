"""Grids, periodic potentials, spectral fields and the scaled Sobolev norms.

Fourier convention: the continuum transform carries a ``1/sqrt(2 pi)``
prefactor, so on a torus of length ``L`` with ``N`` samples the continuum
coefficient at frequency ``xi_j = 2 pi j / L`` is ``dx / sqrt(2 pi) * FFT_j``
(up to a unimodular phase), and integrals over ``xi`` become sums weighted
by ``dxi = 2 pi / L``.  With this mapping the ``s = 0`` norm is exactly the
quadrature L2 norm of the samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import DegenerateInputError, GridError

__all__ = [
    "PeriodicPotential",
    "TorusGrid",
    "WaveField",
    "potential_eval",
    "hs_norm",
    "hs_eps_norm",
    "gn_ratio",
    "spectral_derivative",
    "fourier_resample",
    "check_sobolev_index",
]


@dataclass(frozen=True)
class PeriodicPotential:
    """Even 1-periodic potential ``V(x) = sum_m V_m cos(2 pi m x)``.

    Only even positive modes are admitted unless ``allow_odd`` is set; odd
    modes break the band folding at ``k = pi`` and exist here only so that
    gap-opening counterexamples can be built.
    """

    coefficients: Mapping[int, float] = field(default_factory=dict)
    allow_odd: bool = False

    def __post_init__(self):
        clean = {}
        for m, v in dict(self.coefficients).items():
            if int(m) != m or m <= 0:
                raise ValueError(f"potential modes must be positive integers, got {m!r}")
            m = int(m)
            if m % 2 and not self.allow_odd:
                raise ValueError(f"mode {m} is odd; pass allow_odd=True to build a non-folding potential")
            v = float(v)
            if not math.isfinite(v):
                raise ValueError(f"amplitude of mode {m} is not finite")
            if v != 0.0:
                clean[m] = v
        object.__setattr__(self, "coefficients", dict(sorted(clean.items())))

    @classmethod
    def parse(cls, text: str, allow_odd: bool = False) -> "PeriodicPotential":
        """Parse ``"2:5, 4:-1"`` (mode:amplitude pairs); empty/``none`` is V = 0."""
        text = text.strip()
        if text.lower() in ("", "none", "0", "zero"):
            return cls({}, allow_odd=allow_odd)
        coeffs = {}
        for item in text.split(","):
            m, _, v = item.partition(":")
            if not _:
                raise ValueError(f"bad potential term {item!r}; expected mode:amplitude")
            coeffs[int(m)] = coeffs.get(int(m), 0.0) + float(v)
        return cls(coeffs, allow_odd=allow_odd)

    def format(self) -> str:
        return ",".join(f"{m}:{v!r}" for m, v in self.coefficients.items()) or "none"

    @property
    def max_mode(self) -> int:
        return max(self.coefficients, default=0)

    @property
    def is_even_mode(self) -> bool:
        return all(m % 2 == 0 for m in self.coefficients)

    def fourier(self, p: int) -> float:
        """Exponential Fourier coefficient ``hat V(p)``: ``V_|p| / 2`` for ``p != 0``."""
        if p == 0:
            return 0.0
        return 0.5 * self.coefficients.get(abs(int(p)), 0.0)

    def __call__(self, x):
        return potential_eval(self, x)

    def __hash__(self):
        return hash((tuple(self.coefficients.items()), self.allow_odd))


def potential_eval(pot: PeriodicPotential, x):
    """Evaluate ``sum_m V_m cos(2 pi m x)``; scalar in, float out, array in, array out."""
    xa = np.asarray(x, dtype=float)
    out = np.zeros_like(xa)
    for m, v in pot.coefficients.items():
        # reduce the argument first so large x keeps full relative accuracy
        out += v * np.cos(2.0 * np.pi * np.mod(m * xa, 1.0))
    if out.ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class TorusGrid:
    """Uniform grid on the torus ``[-L/2, L/2)`` with ``N`` points."""

    length: int
    points: int

    def __post_init__(self):
        if int(self.length) != self.length or self.length <= 0:
            raise GridError(f"torus length must be a positive integer, got {self.length!r}")
        n = int(self.points)
        if n != self.points or n < 2 or n & (n - 1):
            raise GridError(f"number of points must be a power of two >= 2, got {self.points!r}")
        object.__setattr__(self, "length", int(self.length))
        object.__setattr__(self, "points", n)

    @property
    def dx(self) -> float:
        return self.length / self.points

    @property
    def origin(self) -> float:
        return -0.5 * self.length

    @property
    def x(self) -> np.ndarray:
        return self.origin + self.dx * np.arange(self.points)

    @property
    def xi(self) -> np.ndarray:
        """Angular frequencies ``2 pi j / L`` in FFT ordering."""
        return 2.0 * np.pi * np.fft.fftfreq(self.points, d=self.dx)

    @property
    def dxi(self) -> float:
        return 2.0 * np.pi / self.length

    @classmethod
    def resolving(cls, length: int, epsilon: float, per_cell: int = 32) -> "TorusGrid":
        """Smallest power-of-two grid with at least ``per_cell`` points per length ``epsilon``."""
        need = per_cell * length / epsilon
        return cls(length, 1 << max(1, math.ceil(math.log2(need - 1e-9))))


@dataclass(frozen=True, eq=False)
class WaveField:
    """Complex samples of a field on a torus grid, tagged with its scale ``epsilon``."""

    grid: TorusGrid
    values: np.ndarray
    epsilon: float = 1.0

    def __post_init__(self):
        vals = np.array(self.values, dtype=complex)
        if vals.shape != (self.grid.points,):
            raise GridError(f"expected {self.grid.points} samples, got shape {vals.shape}")
        if not 0.0 < self.epsilon <= 1.0:
            raise ValueError(f"epsilon must lie in (0, 1], got {self.epsilon}")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def with_values(self, values) -> "WaveField":
        return WaveField(self.grid, values, self.epsilon)

    def __sub__(self, other: "WaveField") -> "WaveField":
        if other.grid != self.grid:
            raise GridError("fields live on different grids")
        return self.with_values(self.values - other.values)

    def l2_norm(self) -> float:
        return math.sqrt(self.grid.dx * float(np.vdot(self.values, self.values).real))


def check_sobolev_index(s: float) -> float:
    s = float(s)
    if not s >= 0.0:
        raise ValueError(f"Sobolev index must be nonnegative, got {s}")
    return s


def hs_norm(values: np.ndarray, grid: TorusGrid, s: float = 1.0, epsilon: float = 1.0) -> float:
    """``H^s_eps`` norm of raw samples (``epsilon = 1`` gives the plain ``H^s`` norm)."""
    s = check_sobolev_index(s)
    spec = np.fft.fft(values)
    weight = (1.0 + (epsilon * grid.xi) ** 2) ** s
    # |hat f_j|^2 dxi  with  hat f_j = dx / sqrt(2 pi) FFT_j  ->  dx / N |FFT_j|^2
    total = float(np.sum(weight * (spec.real**2 + spec.imag**2))) * grid.dx / grid.points
    return math.sqrt(total)


def hs_eps_norm(f: WaveField, s: float = 1.0) -> float:
    """Scaled Sobolev norm ``(sum (1 + |eps xi|^2)^s |hat f|^2 dxi)^(1/2)`` of a field."""
    return hs_norm(f.values, f.grid, s, f.epsilon)


def gn_ratio(f: WaveField, s: float = 1.0) -> float:
    """Scaled Gagliardo-Nirenberg quotient ``||f||_inf * sqrt(eps) / ||f||_{H^s_eps}``."""
    if s <= 0.5:
        raise ValueError("the L-infinity embedding needs s > 1/2")
    norm = hs_eps_norm(f, s)
    if norm == 0.0:
        raise DegenerateInputError("zero field has no Gagliardo-Nirenberg ratio")
    return float(np.max(np.abs(f.values))) * math.sqrt(f.epsilon) / norm


def spectral_derivative(values: np.ndarray, grid: TorusGrid, order: int = 1) -> np.ndarray:
    return np.fft.ifft((1j * grid.xi) ** order * np.fft.fft(values))


def fourier_resample(values: np.ndarray, n_out: int) -> np.ndarray:
    """Trigonometric interpolation of periodic samples onto ``n_out`` points (same origin).

    The Nyquist mode of an even input grid is split symmetrically so that
    real input stays real.
    """
    values = np.asarray(values, dtype=complex)
    n_in = values.shape[-1]
    if n_out == n_in:
        return values.copy()
    spec = np.fft.fft(values, axis=-1)
    out = np.zeros(values.shape[:-1] + (n_out,), dtype=complex)
    h = min(n_in, n_out) // 2
    out[..., :h] = spec[..., :h]
    out[..., n_out - h + 1:] = spec[..., n_in - h + 1:]
    if n_out > n_in:
        out[..., h] = 0.5 * spec[..., h]
        out[..., n_out - h] = 0.5 * spec[..., h]
    else:
        out[..., h] = spec[..., h] + spec[..., n_in - h]
    return np.fft.ifft(out, axis=-1) * (n_out / n_in)
