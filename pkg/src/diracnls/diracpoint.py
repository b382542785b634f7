"""Dirac point at ``k = pi``: detection, symmetric Bloch pair and NLD coefficients.

Sign convention.  The pair is labelled so that ``Phi_-`` is the branch whose
band rises through the crossing (group velocity ``+c_sharp``), and

    c_sharp = -2i <d/dx Phi_-, Phi_-> = 2i <d/dx Phi_+, Phi_+> > 0 .

With this labelling the Fredholm conditions of the two-scale expansion
reproduce exactly ``i d_t alpha = -i c_sharp sigma_3 d_x alpha + kappa G alpha``
(``alpha_-`` is transported to the right).  The opposite overall sign in
front of the inner product would pair the same transport term with the
other Bloch wave; :func:`diracnls.multiscale.solvability_check` verifies
the chosen combination numerically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .bloch import DEFAULT_M, BandStructure, BlochWave, band_derivative, band_value, hill_eigensystem
from .core import PeriodicPotential
from .errors import GapOpenError, GaugeError, NumericalError, SymmetryError

K_STAR = math.pi
TOL_DEGENERACY = 1e-8
CROSSING_OFFSETS = (1e-2, 3e-3, 1e-3)


@dataclass(frozen=True, eq=False)
class DegeneratePair:
    mu_star: float
    n_star: int
    basis: np.ndarray  # (2M+1, 2) orthonormal columns
    gap: float


@dataclass(frozen=True, eq=False)
class CrossingReport:
    offsets: list
    r_minus: list
    r_plus: list
    slopes: list  # dicts with offset and the four one-sided band slopes
    notes: list = field(default_factory=list)

    def max_abs_residual(self) -> float:
        vals = [abs(v) for v in self.r_minus + self.r_plus]
        return max(vals) if vals else 0.0


@dataclass(frozen=True, eq=False)
class DiracPointData:
    potential: PeriodicPotential
    M: int
    mu_star: float
    n_star: int
    phi_minus: BlochWave
    phi_plus: BlochWave
    c_sharp: float
    beta1: float
    beta2: float
    gap: float
    slope_check: Optional[CrossingReport] = None
    k_star: float = K_STAR

    @property
    def pair(self):
        return self.phi_minus, self.phi_plus

    def to_record(self) -> dict:
        rec = {
            "mu_star": self.mu_star,
            "n_star": self.n_star,
            "c_sharp": self.c_sharp,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "gap": self.gap,
        }
        if self.slope_check is not None:
            sc = self.slope_check
            rec["slope_residuals"] = [
                {"dk": dk, "r_minus": rm, "r_plus": rp} for dk, rm, rp in zip(sc.offsets, sc.r_minus, sc.r_plus)
            ]
        return rec


# -- coefficient-space symmetries on pi-pseudoperiodic functions -------------


def parity_coeffs(c: np.ndarray) -> np.ndarray:
    """Coefficients of ``f(-x)``: mode ``m`` maps to ``-1-m`` (mode ``-M-1`` is truncated)."""
    out = np.zeros_like(c)
    out[:-1] = c[:-1][::-1]
    return out


def conjugation_coeffs(c: np.ndarray) -> np.ndarray:
    """Coefficients of ``conj(f(x))``."""
    return np.conj(parity_coeffs(c))


def inner(f: BlochWave, g: BlochWave) -> complex:
    """``<f, g>_{L^2([0,1])} = int f conj(g)``."""
    return complex(np.vdot(g.fourier_coeffs, f.fourier_coeffs))


def derivative_inner(f: BlochWave, g: BlochWave) -> complex:
    """``<d/dx f, g>_{L^2([0,1])}``."""
    return complex(np.vdot(g.fourier_coeffs, 1j * f.wavenumbers * f.fourier_coeffs))


def _product_coeffs(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Periodic coefficients of ``f conj(g)``, modes ``-2M..2M``."""
    return np.convolve(a, np.conj(b[::-1]))


def _mean(F: np.ndarray, G: np.ndarray) -> complex:
    """``int_0^1 F G`` for periodic coefficient vectors on modes ``-2M..2M``."""
    return complex(np.dot(F, G[::-1]))


# -- operations ---------------------------------------------------------------


def detect_dirac(
    pot: PeriodicPotential,
    M: int = DEFAULT_M,
    n_hint: Optional[int] = None,
    tol: float = TOL_DEGENERACY,
) -> DegeneratePair:
    """Locate the degenerate pair ``mu_n*(pi) = mu_n*+1(pi)``.

    Without a hint the lowest pair at the zone edge (bands 1 and 2) is
    examined; an open gap there is reported as :class:`GapOpenError`
    rather than searching upward, since high zone-edge gaps of any smooth
    potential shrink below the tolerance without being Dirac points.
    """
    w, U = hill_eigensystem(pot, K_STAR, M)
    n = 1 if n_hint is None else int(n_hint)
    if not 1 <= n < w.size:
        raise ValueError(f"band hint {n} out of range")
    gap = float(w[n] - w[n - 1])
    if gap > tol:
        raise GapOpenError(f"bands {n} and {n + 1} are split by {gap:.3e} at k = pi", gap=gap)
    if n - 2 >= 0 and w[n - 1] - w[n - 2] <= tol or n + 1 < w.size and w[n + 1] - w[n] <= tol:
        raise NumericalError("eigenvalue of multiplicity > 2 at k = pi; impossible for a 1-D Hill operator", k=K_STAR)
    basis = np.array(U[:, n - 1:n + 1])
    return DegeneratePair(float(0.5 * (w[n - 1] + w[n])), n, basis, gap)


def _real_phase(p: np.ndarray) -> np.ndarray:
    """Rephase ``p`` so that the function it represents is real valued."""
    lam = np.vdot(p, conjugation_coeffs(p)) / np.vdot(p, p)
    if abs(abs(lam) - 1.0) > 1e-8:
        raise SymmetryError("parity eigenvector is not mapped to itself by complex conjugation")
    return p * np.sqrt(lam / abs(lam))


def mean_wavenumber(c: np.ndarray, k: float = K_STAR) -> float:
    M = (c.size - 1) // 2
    return float(np.sum((k + 2.0 * np.pi * np.arange(-M, M + 1)) * np.abs(c) ** 2))


def gauge_fix_pair(basis: np.ndarray, M: int, mu_star: float = float("nan"), tol: float = 1e-8):
    """Symmetry-adapted pair ``(Phi_-, Phi_+)`` from any orthonormal eigenspace basis.

    Parity splits the eigenspace into real even/odd functions ``p_e``,
    ``p_o``; then ``Phi_-+ = (p_e +- i p_o) / sqrt(2)``.  The sign of ``p_e``
    is pinned by making its largest nonnegative-mode coefficient positive,
    and the sign of ``p_o`` by ``c_sharp > 0``.
    """
    B = np.asarray(basis, dtype=complex)
    if B.shape != (2 * M + 1, 2):
        raise ValueError(f"basis must have shape {(2 * M + 1, 2)}, got {B.shape}")
    PB = np.column_stack([parity_coeffs(B[:, 0]), parity_coeffs(B[:, 1])])
    Pm = B.conj().T @ PB
    if np.max(np.abs(PB - B @ Pm)) > tol or np.max(np.abs(Pm @ Pm - np.eye(2))) > tol:
        raise SymmetryError("eigenspace is not invariant under x -> -x; potential is not even")
    evals, evecs = np.linalg.eigh(0.5 * (Pm + Pm.conj().T))
    if not (abs(evals[0] + 1.0) < tol and abs(evals[1] - 1.0) < tol):
        raise SymmetryError(f"parity eigenvalues on the eigenspace are {evals}, expected -1 and +1")
    p_odd = _real_phase(B @ evecs[:, 0])
    p_even = _real_phase(B @ evecs[:, 1])
    lead = M + int(np.argmax(np.abs(p_even[M:])))
    if p_even[lead].real < 0:
        p_even = -p_even
    minus = (p_even + 1j * p_odd) / math.sqrt(2.0)
    if abs(mean_wavenumber(minus)) < 1e-12:
        raise GaugeError("vanishing c_sharp: the crossing is not linear")
    if mean_wavenumber(minus) < 0:
        minus = (p_even - 1j * p_odd) / math.sqrt(2.0)
    plus = parity_coeffs(minus)
    return BlochWave(K_STAR, minus, mu_star), BlochWave(K_STAR, plus, mu_star)


def compute_c_sharp(phi_minus: BlochWave, phi_plus: BlochWave) -> float:
    """``-2i <Phi_-', Phi_->``, checked against the mirror form ``2i <Phi_+', Phi_+>``.

    Exact in Fourier coefficients: ``2 sum (pi + 2 pi m) |c_m|^2``.  The value
    is signed; a negative result means the pair is labelled the other way.
    """
    direct = -2j * derivative_inner(phi_minus, phi_minus)
    mirror = 2j * derivative_inner(phi_plus, phi_plus)
    if abs(direct - mirror) > 1e-8 or abs(direct.imag) > 1e-8:
        raise GaugeError(f"c_sharp mirror identity violated: {direct} vs {mirror}")
    return float(direct.real)


def beta_forms(phi_minus: BlochWave, phi_plus: BlochWave) -> dict:
    """Both index orders of the quartic overlaps, as complex numbers."""
    a, b = phi_minus.fourier_coeffs, phi_plus.fourier_coeffs
    mm, pp = _product_coeffs(a, a), _product_coeffs(b, b)
    mp, pm = _product_coeffs(a, b), _product_coeffs(b, a)
    return {
        # int |Phi_+|^2 |Phi_-|^2  and  int conj(Phi_+)^2 Phi_-^2
        "beta1": _mean(pp, mm),
        "beta2": _mean(mp, mp),
        # int |Phi_-|^2 |Phi_+|^2  and  int conj(Phi_-)^2 Phi_+^2
        "beta1_alt": _mean(mm, pp),
        "beta2_alt": _mean(pm, pm),
    }


def compute_betas(phi_minus: BlochWave, phi_plus: BlochWave):
    """Quartic overlaps ``beta1 = int |Phi_+|^2 |Phi_-|^2`` and ``beta2 = int conj(Phi_+)^2 Phi_-^2``."""
    f = beta_forms(phi_minus, phi_plus)
    if abs(f["beta2"].imag) > 1e-8:
        raise GaugeError(f"beta2 has imaginary part {f['beta2'].imag:.3e}")
    if abs(f["beta1"] - f["beta1_alt"]) > 1e-8 or abs(f["beta2"] - f["beta2_alt"]) > 1e-8:
        raise GaugeError("the two index orders of beta1/beta2 disagree")
    return float(f["beta1"].real), float(f["beta2"].real)


def cubic_overlaps(phi_minus: BlochWave, phi_plus: BlochWave) -> dict:
    """The cubic overlaps that must vanish for the symmetric pair.

    Keys ``(j, jp, kind)``: ``kind = 1`` is ``int |Phi_j|^2 Phi_j conj(Phi_jp)``,
    ``kind = 2`` is ``int |Phi_j|^2 Phi_jp conj(Phi_j)``.
    """
    coeff = {"-": phi_minus.fourier_coeffs, "+": phi_plus.fourier_coeffs}
    out = {}
    for j, jp in (("-", "+"), ("+", "-")):
        dens = _product_coeffs(coeff[j], coeff[j])
        out[(j, jp, 1)] = _mean(dens, _product_coeffs(coeff[j], coeff[jp]))
        out[(j, jp, 2)] = _mean(dens, _product_coeffs(coeff[jp], coeff[j]))
    return out


def crossing_expansion_check(
    bs: BandStructure, dp: DiracPointData, offsets: Sequence[float] = CROSSING_OFFSETS
) -> CrossingReport:
    """Empirical ``eta_+-(dk) = (mu_+-(pi + dk) - mu_*) / (+-c_sharp dk) - 1``.

    ``mu_+`` is the branch leaving the crossing with slope ``+c_sharp``: the
    upper sorted band for ``dk > 0`` and the lower one for ``dk < 0``.
    """
    pot, M, n = bs.potential, bs.M, dp.n_star
    used, r_minus, r_plus, slopes, notes = [], [], [], [], []
    for dk in offsets:
        if dk == 0:
            notes.append("offset 0 skipped: the relative residual divides by dk")
            continue
        lower = band_value(pot, n, K_STAR + dk, M)
        upper = band_value(pot, n + 1, K_STAR + dk, M)
        mu_p, mu_m = (upper, lower) if dk > 0 else (lower, upper)
        used.append(float(dk))
        r_plus.append((mu_p - dp.mu_star) / (dp.c_sharp * dk) - 1.0)
        r_minus.append((mu_m - dp.mu_star) / (-dp.c_sharp * dk) - 1.0)
        h = 0.5 * abs(dk)
        slopes.append({
            "dk": abs(dk),
            "upper_right": band_derivative(bs, n + 1, K_STAR + abs(dk), h),
            "lower_right": band_derivative(bs, n, K_STAR + abs(dk), h),
            "upper_left": band_derivative(bs, n + 1, K_STAR - abs(dk), h),
            "lower_left": band_derivative(bs, n, K_STAR - abs(dk), h),
        })
    return CrossingReport(used, r_minus, r_plus, slopes, notes)


def dirac_point(
    pot: PeriodicPotential,
    M: int = DEFAULT_M,
    n_hint: Optional[int] = None,
    offsets: Optional[Sequence[float]] = CROSSING_OFFSETS,
) -> DiracPointData:
    """Full pipeline: detect, gauge fix, coefficients and (optionally) the crossing check."""
    pair = detect_dirac(pot, M, n_hint)
    phi_m, phi_p = gauge_fix_pair(pair.basis, M, pair.mu_star)
    c_sharp = compute_c_sharp(phi_m, phi_p)
    beta1, beta2 = compute_betas(phi_m, phi_p)
    dp = DiracPointData(pot, M, pair.mu_star, pair.n_star, phi_m, phi_p, c_sharp, beta1, beta2, pair.gap)
    if offsets:
        bs = BandStructure(np.array([K_STAR]), np.array([[pair.mu_star]]), pot, M)
        report = crossing_expansion_check(bs, dp, offsets)
        dp = DiracPointData(pot, M, pair.mu_star, pair.n_star, phi_m, phi_p, c_sharp, beta1, beta2, pair.gap, report)
    return dp
