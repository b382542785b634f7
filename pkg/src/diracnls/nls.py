"""Semiclassical cubic NLS on an epsilon-resolving torus.

    i eps d_t psi = -eps^2 d_x^2 psi + V(x / eps) psi + eps kappa |psi|^2 psi

Two Strang schemes are provided:

``linear="split"``
    kinetic half step (Fourier multiplier), full local phase step with the
    potential and the nonlinearity, kinetic half step.
``linear="exact"``
    the whole linear operator ``H_eps / eps`` is exponentiated exactly and
    only the nonlinear phase is split off.  The fine-grid spectrum couples
    wavenumbers only through multiples of the potential frequency, so the
    discrete ``H_eps`` is block diagonal with small blocks which are
    diagonalised once.

The kinetic/potential split carries an ``O(dt^2 / eps^3)`` Bloch-phase error
over ``O(1)`` times; the exact-linear scheme removes it and is what the
convergence study uses.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import List, Optional, Sequence

import numpy as np

from .core import PeriodicPotential, TorusGrid, WaveField, hs_norm, potential_eval
from .errors import BlowUpError, GridError, StepSizeError

log = logging.getLogger(__name__)

DT_REF = 0.05
POINTS_PER_CELL = 32
BLOWUP_FACTOR = 1e6
GUARD_EVERY = 100


def inverse_epsilon(epsilon: float) -> int:
    """``1/eps`` as an integer, or :class:`GridError` if it is not an even integer."""
    r = 1.0 / epsilon
    n = int(round(r))
    if abs(r - n) > 1e-9 * r or n % 2:
        raise GridError(f"1/epsilon must be an even integer, got {r!r}")
    return n


@dataclass(frozen=True)
class NLSParams:
    epsilon: float
    kappa: float
    pot: PeriodicPotential
    dt: float
    grid: TorusGrid
    linear: str = "exact"

    def __post_init__(self):
        if not 0 < self.epsilon <= 1:
            raise ValueError(f"epsilon must lie in (0, 1], got {self.epsilon}")
        if self.epsilon < 1:
            inverse_epsilon(self.epsilon)
        if self.kappa not in (-1, 0, 1):
            raise ValueError(f"kappa must be -1, 0 or +1, got {self.kappa}")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.grid.points < POINTS_PER_CELL * self.grid.length / self.epsilon - 1e-9:
            raise GridError(
                f"{self.grid.points} points do not resolve eps={self.epsilon} on length {self.grid.length}; "
                f"need >= {POINTS_PER_CELL * self.grid.length / self.epsilon:g}"
            )
        if self.linear not in ("exact", "split"):
            raise ValueError(f"linear must be 'exact' or 'split', got {self.linear!r}")

    def with_dt(self, dt: float) -> "NLSParams":
        return NLSParams(self.epsilon, self.kappa, self.pot, dt, self.grid, self.linear)


class LinearPropagator:
    """Exact ``exp(-i tau H_eps / eps)`` for the grid-discretised linear operator.

    Potential mode ``m`` shifts the FFT index by ``m L / eps``; indices are
    grouped into orbits of the shift by ``q = gcd(modes) L / eps`` (cyclic
    modulo ``N``), and each orbit block is diagonalised.
    """

    def __init__(self, grid: TorusGrid, epsilon: float, pot: PeriodicPotential):
        N = grid.points
        kin = (epsilon * grid.xi) ** 2
        modes = list(pot.coefficients)
        self.grid = grid
        if not modes:
            self.idx = np.arange(N)[:, None]
            self.evals = kin[:, None]
            self.evecs = None
        else:
            cell = grid.length / epsilon
            if abs(cell - round(cell)) > 1e-9:
                raise GridError("potential period is incommensurate with the torus")
            g = 0
            for m in modes:
                g = math.gcd(g, m)
            q = g * int(round(cell))
            n_orb = N // math.gcd(N, q)
            n_cls = N // n_orb
            self.idx = (np.arange(n_cls)[:, None] + q * np.arange(n_orb)[None, :]) % N
            A = np.zeros((n_cls, n_orb, n_orb), dtype=complex)
            diag = np.arange(n_orb)
            A[:, diag, diag] = kin[self.idx]
            for m, v in pot.coefficients.items():
                s = m // g
                A[:, (diag + s) % n_orb, diag] += 0.5 * v
                A[:, (diag - s) % n_orb, diag] += 0.5 * v
            self.evals, self.evecs = np.linalg.eigh(A)
        self.epsilon = epsilon

    def operator(self, tau: float):
        """Block propagator matrices for time ``tau`` (or diagonal multipliers)."""
        phase = np.exp(-1j * tau * self.evals / self.epsilon)
        if self.evecs is None:
            mult = np.empty(self.grid.points, dtype=complex)
            mult[self.idx[:, 0]] = phase[:, 0]
            return mult
        return np.einsum("rab,rb,rcb->rac", self.evecs, phase, self.evecs.conj())

    def apply(self, op, spec: np.ndarray) -> np.ndarray:
        if op.ndim == 1:
            return op * spec
        out = np.empty_like(spec)
        out[self.idx] = np.matmul(op, spec[self.idx][..., None])[..., 0]
        return out


@lru_cache(maxsize=8)
def _linear_propagator(grid, epsilon, pot):
    return LinearPropagator(grid, epsilon, pot)


class NLSStepper:
    """Precomputed Strang stepper for fixed parameters and step size."""

    def __init__(self, p: NLSParams):
        if p.dt > DT_REF * p.epsilon:
            raise StepSizeError(f"dt={p.dt:g} exceeds {DT_REF} * epsilon; the fast phase is under-resolved")
        self.p = p
        g = p.grid
        self._vfast = potential_eval(p.pot, g.x / p.epsilon) / p.epsilon
        if p.linear == "split":
            self._half = np.exp(-0.5j * p.dt * p.epsilon * g.xi**2)
            self._full = self._half**2
            self.apply = lambda op, spec: op * spec
        else:
            lp = _linear_propagator(g, p.epsilon, p.pot)
            self._half = lp.operator(0.5 * p.dt)
            self._full = lp.operator(p.dt)
            self.apply = lp.apply

    def _local(self, v: np.ndarray) -> np.ndarray:
        p = self.p
        phase = p.kappa * (v.real**2 + v.imag**2)
        if p.linear == "split":
            phase = phase + self._vfast
        return v * np.exp(-1j * p.dt * phase)

    def advance(self, values: np.ndarray, steps: int, guard: Optional[float] = None, t0: float = 0.0):
        """Apply ``steps`` Strang steps, fusing adjacent linear half steps."""
        if steps <= 0:
            return np.array(values, dtype=complex)
        spec = self.apply(self._half, np.fft.fft(values))
        for i in range(steps):
            v = self._local(np.fft.ifft(spec))
            spec = np.fft.fft(v)
            last = i == steps - 1
            spec = self.apply(self._half if last else self._full, spec)
            if guard is not None and (i + 1) % GUARD_EVERY == 0:
                norm = self._spec_norm(spec)
                if not norm <= guard:
                    raise BlowUpError("NLS H^s_eps norm exceeded the blow-up guard", t=t0 + (i + 1) * self.p.dt)
        return np.fft.ifft(spec)

    def _spec_norm(self, spec, s=1.0):
        g, eps = self.p.grid, self.p.epsilon
        w = (1.0 + (eps * g.xi) ** 2) ** s
        return math.sqrt(float(np.sum(w * np.abs(spec) ** 2)) * g.dx / g.points)


@lru_cache(maxsize=16)
def stepper_for(p: NLSParams) -> NLSStepper:
    return NLSStepper(p)


def _check_field(psi: WaveField, p: NLSParams):
    if psi.grid != p.grid:
        raise GridError("field grid does not match the solver grid")
    if abs(psi.epsilon - p.epsilon) > 1e-15:
        raise GridError(f"field is tagged eps={psi.epsilon}, solver uses eps={p.epsilon}")


def nls_step(psi: WaveField, p: NLSParams) -> WaveField:
    _check_field(psi, p)
    return psi.with_values(stepper_for(p).advance(psi.values, 1))


def nls_mass(psi: WaveField) -> float:
    return float(psi.grid.dx * np.sum(np.abs(psi.values) ** 2))


def nls_energy(psi: WaveField, p: NLSParams) -> float:
    """``int |eps psi'|^2 + int V(x/eps) |psi|^2 + (eps kappa / 2) int |psi|^4``."""
    g, eps = psi.grid, p.epsilon
    spec = np.fft.fft(psi.values)
    kinetic = float(np.sum((eps * g.xi) ** 2 * np.abs(spec) ** 2)) * g.dx / g.points
    dens = np.abs(psi.values) ** 2
    potential = float(g.dx * np.sum(potential_eval(p.pot, g.x / eps) * dens))
    quartic = 0.5 * eps * p.kappa * float(g.dx * np.sum(dens**2))
    return kinetic + potential + quartic


@dataclass
class ConservationRecord:
    t: float
    mass: float
    energy: float


def nls_evolve(
    psi0: WaveField,
    p: NLSParams,
    T: float,
    sample_times: Sequence[float],
    log_records: Optional[List[ConservationRecord]] = None,
    s: float = 1.0,
) -> list:
    """Snapshots at ``sample_times`` (sorted, within ``[0, T]``); mass/energy appended to ``log_records``."""
    _check_field(psi0, p)
    times = sorted(float(t) for t in sample_times)
    if T < 0 or any(t < 0 or t > T + 1e-12 for t in times):
        raise ValueError("sample times must lie in [0, T]")
    stepper = stepper_for(p)
    guard = BLOWUP_FACTOR * hs_norm(psi0.values, p.grid, s, p.epsilon)
    values, t, out = np.array(psi0.values), 0.0, []
    for target in times:
        span = target - t
        steps = int(math.floor(span / p.dt + 1e-9))
        values = stepper.advance(values, steps, guard, t0=t)
        rest = span - steps * p.dt
        if rest > 1e-9 * p.dt:
            values = stepper_for(p.with_dt(rest)).advance(values, 1)
        t = target
        snap = psi0.with_values(values)
        if not hs_norm(values, p.grid, s, p.epsilon) <= guard:
            raise BlowUpError("NLS H^s_eps norm exceeded the blow-up guard", t=t)
        out.append(snap)
        if log_records is not None:
            rec = ConservationRecord(t, nls_mass(snap), nls_energy(snap, p))
            log_records.append(rec)
            log.debug("t=%.6g mass=%.15g energy=%.15g", rec.t, rec.mass, rec.energy)
    return out


def rescale_to_physical(psi_eps: WaveField) -> WaveField:
    """``psi(x) = sqrt(eps) psi_eps(eps x)`` on the dilated torus of length ``L / eps``.

    Samples are shared: physical node ``j`` sits at ``x_j / eps``.  Time is
    dilated the same way (``t_phys = t / eps``) and is not tracked here.
    """
    eps = psi_eps.epsilon
    length = psi_eps.grid.length / eps
    if abs(length - round(length)) > 1e-9 * length:
        raise GridError(f"L / eps = {length!r} is not an integer; no commensurate physical grid")
    grid = TorusGrid(int(round(length)), psi_eps.grid.points)
    return WaveField(grid, math.sqrt(eps) * psi_eps.values, 1.0)


def rescale_to_semiclassical(psi: WaveField, epsilon: float) -> WaveField:
    """Inverse of :func:`rescale_to_physical`."""
    length = psi.grid.length * epsilon
    if abs(length - round(length)) > 1e-9 * max(length, 1.0) or round(length) < 1:
        raise GridError(f"L * eps = {length!r} is not a positive integer")
    grid = TorusGrid(int(round(length)), psi.grid.points)
    return WaveField(grid, psi.values / math.sqrt(epsilon), epsilon)
