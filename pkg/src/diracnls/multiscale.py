"""Two-scale approximation ``psi_a = exp(-i mu_* t / eps) (u0 + eps u1)`` and its residual.

Fast-slow fields are stored as a table ``A[x, m]``: at each envelope grid
point ``x`` the function of the fast variable is
``exp(i pi y) sum_m A[x, m] exp(2 pi i m y)``.  Placing ``y = x / eps`` on a
fine grid is then an exact spectral operation: the envelope spectrum of
column ``m`` is shifted by the wavenumber ``(pi + 2 pi m) / eps``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from .bloch import hill_eigensystem
from .core import TorusGrid, WaveField, hs_norm, potential_eval
from .diracpoint import DiracPointData
from .errors import GridError, NumericalError, SolvabilityError
from .nld import NLDParams, SpinorField, nld_rhs, nld_step
from .nls import inverse_epsilon

KERNEL_TOL = 1e-8
SOLVABILITY_TOL = 1e-6
FD_FACTOR = 1e-3


@dataclass(frozen=True, eq=False)
class FastSlowField:
    """``f(x, y)`` with ``x`` on an envelope grid and ``y`` expanded in the k = pi basis."""

    grid: TorusGrid
    coeffs: np.ndarray  # (N_env, 2M+1)

    @property
    def M(self) -> int:
        return (self.coeffs.shape[1] - 1) // 2

    def cell_mass(self) -> np.ndarray:
        """``int_0^1 |f(x, y)|^2 dy`` at each envelope point."""
        return np.sum(np.abs(self.coeffs) ** 2, axis=1)

    def evaluate(self, y) -> np.ndarray:
        """Samples ``f(x_j, y_k)``, shape ``(N_env, len(y))``."""
        y = np.atleast_1d(np.asarray(y, dtype=float))
        wn = math.pi + 2 * math.pi * np.arange(-self.M, self.M + 1)
        return self.coeffs @ np.exp(1j * np.multiply.outer(wn, y))

    def on_fine_grid(self, fine: TorusGrid, epsilon: float) -> np.ndarray:
        return embed_fast_slow(self.coeffs, self.grid, fine, epsilon)


@dataclass(frozen=True, eq=False)
class AnsatzBundle:
    dp: DiracPointData
    spinor: SpinorField
    u0: FastSlowField
    u1_coeffs: np.ndarray
    mu_star: float
    epsilon: Optional[float] = None
    kernel_residual: float = 0.0

    @property
    def u1(self) -> FastSlowField:
        return FastSlowField(self.u0.grid, self.u1_coeffs)


def _pair_coeffs(dp: DiracPointData, M: int):
    a, b = dp.phi_minus.fourier_coeffs, dp.phi_plus.fourier_coeffs
    if M < dp.M:
        raise ValueError(f"corrector truncation M={M} is below the Bloch truncation {dp.M}")
    pad = M - dp.M
    return np.pad(a, pad), np.pad(b, pad)


def check_commensurate(epsilon: float, fine: Optional[TorusGrid] = None, env: Optional[TorusGrid] = None):
    if epsilon != 1.0:
        inverse_epsilon(epsilon)
    if fine is not None and env is not None and fine.length != env.length:
        raise GridError(f"fine grid length {fine.length} differs from envelope length {env.length}")


def embed_fast_slow(coeffs: np.ndarray, env: TorusGrid, fine: TorusGrid, epsilon: float) -> np.ndarray:
    """Samples of ``sum_m A_m(x) exp(i (pi + 2 pi m) x / eps)`` on ``fine``.

    ``A_m`` is the trigonometric interpolant of the envelope column ``m``
    (Nyquist split evenly); components beyond the fine Nyquist are dropped.
    """
    check_commensurate(epsilon, fine, env)
    Ne, Nf, L = env.points, fine.points, env.length
    nm = coeffs.shape[1]
    M = (nm - 1) // 2
    E = np.fft.fft(coeffs, axis=0)
    j = np.fft.fftfreq(Ne, 1.0 / Ne).astype(np.int64)
    ny = Ne // 2
    E[ny] *= 0.5
    j = np.append(j, ny)  # fftfreq puts the Nyquist at -Ne/2; add its mirror
    E = np.vstack([E, E[ny:ny + 1]])
    half_cells = L * int(round(1.0 / epsilon)) // 2 if epsilon != 1.0 else None
    spec = np.zeros(Nf, dtype=complex)
    for col, m in enumerate(range(-M, M + 1)):
        if half_cells is None:
            s2 = (1 + 2 * m) * L
            if s2 % 2:
                raise GridError("eps = 1 needs an even torus length for pi-pseudoperiodic fields")
            shift = s2 // 2
        else:
            shift = (1 + 2 * m) * half_cells
        tgt = j + shift
        keep = np.abs(tgt) < Nf // 2
        if not np.any(keep):
            continue
        sign = -1.0 if shift % 2 else 1.0  # exp(i K x0) with x0 = -L/2
        np.add.at(spec, tgt[keep] % Nf, sign * (Nf / Ne) * E[keep, col])
    return np.fft.ifft(spec)


def build_u0(dp: DiracPointData, spinor: SpinorField, M: Optional[int] = None) -> FastSlowField:
    """``u0(x, y) = alpha_-(x) Phi_-(y) + alpha_+(x) Phi_+(y)``."""
    a, b = _pair_coeffs(dp, dp.M if M is None else M)
    return FastSlowField(spinor.grid, np.outer(spinor.minus, a) + np.outer(spinor.plus, b))


def nld_rhs_envelope(dp: DiracPointData, spinor: SpinorField, p: NLDParams) -> SpinorField:
    """``d_t alpha`` from the effective system, as a spinor on the envelope grid."""
    dm, dpl = nld_rhs(spinor, p)
    return SpinorField(spinor.grid, dm, dpl, spinor.t)


def _cubic(U: np.ndarray) -> np.ndarray:
    """Coefficients (modes -M..M) of ``|u|^2 u`` for each row of the table ``U``."""
    nm = U.shape[1]
    M = (nm - 1) // 2
    Q = 1 << math.ceil(math.log2(3 * nm))
    buf = np.zeros((U.shape[0], Q), dtype=complex)
    buf[:, :M + 1] = U[:, M:]
    buf[:, Q - M:] = U[:, :M]
    P = np.fft.ifft(buf, axis=1) * Q
    C = np.fft.fft((P.real**2 + P.imag**2) * P, axis=1) / Q
    return np.concatenate([C[:, Q - M:], C[:, :M + 1]], axis=1)


def forcing(dp: DiracPointData, spinor: SpinorField, p: NLDParams, M: Optional[int] = None,
            dalpha: Optional[SpinorField] = None) -> np.ndarray:
    """Table of ``F = (i d_t + 2 d_x d_y - kappa |u0|^2) u0``, truncated to modes ``-M..M``.

    ``dalpha`` overrides the time derivative (default: the effective system).
    """
    M = dp.M if M is None else M
    a, b = _pair_coeffs(dp, M)
    g = spinor.grid
    if dalpha is None:
        dalpha = nld_rhs_envelope(dp, spinor, p)
    dxm = np.fft.ifft(1j * g.xi * np.fft.fft(spinor.minus))
    dxp = np.fft.ifft(1j * g.xi * np.fft.fft(spinor.plus))
    iwn = 1j * (math.pi + 2 * math.pi * np.arange(-M, M + 1))
    F = np.outer(1j * dalpha.minus, a) + np.outer(1j * dalpha.plus, b)
    F += 2 * (np.outer(dxm, iwn * a) + np.outer(dxp, iwn * b))
    if p.kappa:
        U = np.outer(spinor.minus, a) + np.outer(spinor.plus, b)
        F -= p.kappa * _cubic(U)
    return F


@lru_cache(maxsize=16)
def _resolvent_data(pot, M: int, mu_star: float, n_star: int):
    w, U = hill_eigensystem(pot, math.pi, M)
    ker = [n_star - 1, n_star]
    others = np.setdiff1d(np.arange(w.size), ker)
    if np.any(np.abs(w[ker] - mu_star) > KERNEL_TOL):
        raise NumericalError("kernel eigenvalues moved off mu_* at this truncation", k=math.pi)
    if np.any(np.abs(w[others] - mu_star) < KERNEL_TOL):
        raise NumericalError("extra eigenvalue at mu_*: multiplicity above two", k=math.pi)
    Uo = U[:, others]
    return Uo, 1.0 / (w[others] - mu_star)


def kernel_projections(F: np.ndarray, a: np.ndarray, b: np.ndarray):
    """``<F(x, .), Phi_-+>`` per envelope point."""
    return F @ np.conj(a), F @ np.conj(b)


def build_u1(dp: DiracPointData, spinor: SpinorField, p: NLDParams, M: Optional[int] = None,
             epsilon: Optional[float] = None, strict: bool = True) -> AnsatzBundle:
    """Corrector ``u1 = (H(pi) - mu_*)^{-1} F`` on the orthogonal complement of the kernel."""
    M = dp.M if M is None else M
    if epsilon is not None:
        check_commensurate(epsilon)
    a, b = _pair_coeffs(dp, M)
    F = forcing(dp, spinor, p, M)
    pm, pp = kernel_projections(F, a, b)
    fnorm = float(np.max(np.linalg.norm(F, axis=1))) if F.size else 0.0
    resid = float(max(np.max(np.abs(pm), initial=0.0), np.max(np.abs(pp), initial=0.0)))
    if strict and resid > SOLVABILITY_TOL * max(fnorm, 1e-300) and resid > 1e-14:
        raise SolvabilityError(
            f"kernel projection {resid:.3e} exceeds {SOLVABILITY_TOL:g} x max|F| = {fnorm:.3e}; "
            "the envelope does not solve the effective system"
        )
    Fp = F - np.outer(pm, a) - np.outer(pp, b)
    Uo, inv = _resolvent_data(dp.potential, M, dp.mu_star, dp.n_star)
    u1 = ((Fp @ np.conj(Uo)) * inv) @ Uo.T
    # remove the round-off component along the kernel
    qm, qp = kernel_projections(u1, a, b)
    u1 = u1 - np.outer(qm, a) - np.outer(qp, b)
    u0 = FastSlowField(spinor.grid, np.outer(spinor.minus, a) + np.outer(spinor.plus, b))
    return AnsatzBundle(dp, spinor, u0, u1, dp.mu_star, epsilon, resid)


def apply_shifted_hill(dp: DiracPointData, coeffs: np.ndarray) -> np.ndarray:
    """Rows of ``(H(pi) - mu_*)`` applied to coefficient tables (for round-trip checks)."""
    from .bloch import assemble_hill_matrix

    M = (coeffs.shape[1] - 1) // 2
    H = assemble_hill_matrix(dp.potential, math.pi, M).entries
    return coeffs @ (H - dp.mu_star * np.eye(2 * M + 1)).T


def _envelope_table(bundle: AnsatzBundle, include_u1: bool, epsilon: float) -> np.ndarray:
    tab = bundle.u0.coeffs
    if include_u1:
        tab = tab + epsilon * bundle.u1_coeffs
    return tab


def _resolve_eps(bundle: AnsatzBundle, epsilon: Optional[float]) -> float:
    eps = bundle.epsilon if epsilon is None else epsilon
    if eps is None:
        raise GridError("no epsilon given for the fast variable")
    return eps


def assemble_ansatz(bundle: AnsatzBundle, fine_grid: TorusGrid, t: float,
                    include_u1: bool = True, epsilon: Optional[float] = None) -> WaveField:
    """``exp(-i mu_* t / eps) [u0 + eps u1](x, x / eps)`` with the bundle's envelope."""
    eps = _resolve_eps(bundle, epsilon)
    vals = embed_fast_slow(_envelope_table(bundle, include_u1, eps), bundle.u0.grid, fine_grid, eps)
    return WaveField(fine_grid, np.exp(-1j * bundle.mu_star * t / eps) * vals, eps)


def residual_rho(bundle: AnsatzBundle, p: NLDParams, fine_grid: TorusGrid, t: Optional[float] = None,
                 dt_fd: Optional[float] = None, s: float = 1.0, epsilon: Optional[float] = None):
    """Defect of the ansatz in the semiclassical NLS, and its ``H^s_eps`` norm.

    The fast phase is differentiated exactly; only the slow part
    ``w = u0 + eps u1`` is differenced, with the envelope moved by one
    forward and one backward step of the effective stepper.
    """
    eps = _resolve_eps(bundle, epsilon)
    t = bundle.spinor.t if t is None else float(t)
    h = FD_FACTOR * eps if dt_fd is None else float(dt_fd)
    dp, sp = bundle.dp, bundle.spinor
    M = bundle.u0.M

    def slow(spinor):
        b = build_u1(dp, spinor, p, M, eps)
        return embed_fast_slow(_envelope_table(b, True, eps), sp.grid, fine_grid, eps)

    w = embed_fast_slow(_envelope_table(bundle, True, eps), sp.grid, fine_grid, eps)
    dw = (slow(nld_step(sp, p, h)) - slow(nld_step(sp, p, -h))) / (2 * h)
    lap = np.fft.ifft(-(fine_grid.xi**2) * np.fft.fft(w))
    V = potential_eval(dp.potential, fine_grid.x / eps)
    r = bundle.mu_star * w + 1j * eps * dw + eps**2 * lap - V * w - eps * p.kappa * np.abs(w) ** 2 * w
    r = np.exp(-1j * bundle.mu_star * t / eps) * r
    field = WaveField(fine_grid, r, eps)
    norm = hs_norm(r, fine_grid, s, eps)
    return field, {"norm": norm, "s": s, "epsilon": eps, "t": t, "dt_fd": h}


def solvability_check(dp: DiracPointData, spinor: SpinorField, p: NLDParams,
                      dalpha: Optional[SpinorField] = None, M: Optional[int] = None) -> dict:
    """Largest kernel projection ``|<F(x, .), Phi_j>|`` over the envelope grid."""
    M = dp.M if M is None else M
    a, b = _pair_coeffs(dp, M)
    F = forcing(dp, spinor, p, M, dalpha)
    pm, pp = kernel_projections(F, a, b)
    rm = float(np.max(np.abs(pm), initial=0.0))
    rp = float(np.max(np.abs(pp), initial=0.0))
    return {"minus": rm, "plus": rp, "max": max(rm, rp),
            "proj_minus": pm, "proj_plus": pp}
