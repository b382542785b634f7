"""End-to-end convergence study of the NLS solution towards the Dirac-envelope ansatz."""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .config import StudyConfig
from .core import TorusGrid, WaveField, hs_eps_norm, hs_norm
from .diracpoint import DiracPointData, dirac_point
from .errors import BlowUpError, DiracNLSError
from .multiscale import assemble_ansatz, build_u1
from .nld import NLDParams, SpinorField, nld_evolve, nld_mass
from .nls import ConservationRecord, NLSParams, nls_evolve, rescale_to_physical

log = logging.getLogger(__name__)

RATE_TARGET = 0.9


@dataclass
class EpsilonRun:
    epsilon: float
    times: List[float]
    w: List[float]
    status: str = "ok"  # ok | blowup | error
    message: str = ""
    runtime: float = 0.0
    initial_offset: float = float("nan")  # ||psi0 - u0(0)||_{H^s_eps}
    mass_drift: float = float("nan")
    energy_drift: float = float("nan")

    @property
    def sup(self) -> float:
        return max(self.w) if self.w else float("nan")


@dataclass
class ErrorSeries:
    dirac: dict
    sample_times: List[float]
    runs: List[EpsilonRun]
    rate_p: Optional[float] = None
    constant_C: Optional[float] = None
    fit_residual: Optional[float] = None
    largest_eps_at_rate: Optional[float] = None
    nld_mass_drift: float = float("nan")
    notes: List[str] = field(default_factory=list)

    def sup_errors(self) -> List[Tuple[float, float]]:
        return [(r.epsilon, r.sup) for r in self.runs if r.status == "ok"]


def fit_rate(points: Sequence[Tuple[float, float]]):
    """Least squares ``log e = log C + p log eps``; returns ``(p, C, max |log residual|)``."""
    pts = [(float(e), float(v)) for e, v in points]
    if len(pts) < 2:
        raise ValueError("need at least two points to fit a rate")
    if any(not (e > 0 and v > 0) for e, v in pts):
        raise ValueError("epsilon and error values must be positive for a log-log fit")
    x = np.log([e for e, _ in pts])
    y = np.log([v for _, v in pts])
    A = np.column_stack([x, np.ones_like(x)])
    (p, logC), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = float(np.max(np.abs(A @ np.array([p, logC]) - y)))
    return float(p), float(math.exp(logC)), resid


def initial_spinor(cfg: StudyConfig, grid: TorusGrid) -> SpinorField:
    a = cfg.alpha0
    am, ap = a.amp_minus, a.amp_plus
    if cfg.perturbation > 0:
        rng = np.random.default_rng(cfg.seed)
        z = rng.standard_normal(4)
        am = am * (1 + cfg.perturbation * complex(z[0], z[1]))
        ap = ap * (1 + cfg.perturbation * complex(z[2], z[3]))
    x = grid.x
    return SpinorField(
        grid,
        am * np.exp(-((x - a.center_minus) ** 2) / (2 * a.width_minus**2)),
        ap * np.exp(-((x - a.center_plus) ** 2) / (2 * a.width_plus**2)),
    )


def envelope_grid(cfg: StudyConfig) -> TorusGrid:
    return TorusGrid(cfg.length, cfg.env_points)


def fine_grid(cfg: StudyConfig, epsilon: float) -> TorusGrid:
    return TorusGrid.resolving(cfg.length, epsilon, cfg.per_cell)


def nld_params(cfg: StudyConfig, dp: DiracPointData) -> NLDParams:
    return NLDParams.from_dirac(dp, cfg.kappa, cfg.nld_dt, cfg.S_env)


def nls_params(cfg: StudyConfig, epsilon: float) -> NLSParams:
    return NLSParams(epsilon, cfg.kappa, cfg.potential, cfg.nls_dt_factor * epsilon,
                     fine_grid(cfg, epsilon), cfg.linear)


def run_epsilon(cfg: StudyConfig, dp: DiracPointData, snapshots: Sequence[SpinorField], epsilon: float) -> EpsilonRun:
    """One NLS run against precomputed envelope snapshots at ``cfg.sample_times``."""
    times = [float(s.t) for s in snapshots]
    run = EpsilonRun(epsilon, times, [])
    t0 = time.perf_counter()
    try:
        p = nld_params(cfg, dp)
        q = nls_params(cfg, epsilon)
        b0 = build_u1(dp, snapshots[0], p, epsilon=epsilon)
        psi0 = assemble_ansatz(b0, q.grid, 0.0)
        run.initial_offset = hs_eps_norm(psi0 - assemble_ansatz(b0, q.grid, 0.0, include_u1=False), cfg.s)
        records: List[ConservationRecord] = []
        out = nls_evolve(psi0, q, cfg.T_star, times, records, s=cfg.s)
        for snap, psi in zip(snapshots, out):
            ref = assemble_ansatz(build_u1(dp, snap, p, epsilon=epsilon), q.grid, snap.t, include_u1=False)
            run.w.append(hs_eps_norm(psi - ref, cfg.s))
        m = np.array([r.mass for r in records])
        e = np.array([r.energy for r in records])
        run.mass_drift = float(np.max(np.abs(m - m[0])) / m[0])
        run.energy_drift = float(np.max(np.abs(e - e[0])) / max(abs(e[0]), 1e-300))
    except BlowUpError as exc:
        run.status, run.message = "blowup", f"{exc} (t={exc.t})"
    except DiracNLSError as exc:
        run.status, run.message = "error", f"{type(exc).__name__}: {exc}"
    run.runtime = time.perf_counter() - t0
    log.info("eps=%g status=%s sup=%.6g (%.1fs)", epsilon, run.status, run.sup, run.runtime)
    return run


def _tail_rates(points):
    """Largest epsilon from which every tail fit reaches the target rate."""
    best = None
    for i in range(len(points) - 1):
        p, _, _ = fit_rate(points[i:])
        if p >= RATE_TARGET:
            best = points[i][0]
            break
    return best


def run_convergence_study(cfg: StudyConfig, dp: Optional[DiracPointData] = None) -> ErrorSeries:
    """Sweep ``cfg.epsilon_list``; failures per epsilon are recorded and the sweep goes on.

    ``GapOpenError`` from the Dirac point detection propagates.
    """
    if dp is None:
        dp = dirac_point(cfg.potential, cfg.M)
    times = [float(t) for t in cfg.sample_times]
    series = ErrorSeries(dp.to_record(), times, [])
    sp0 = initial_spinor(cfg, envelope_grid(cfg))
    try:
        snaps = nld_evolve(sp0, nld_params(cfg, dp), cfg.T_star, times)
    except BlowUpError as exc:
        msg = f"effective system blew up at t={exc.t}"
        series.runs = [EpsilonRun(e, times, [], "blowup", msg) for e in cfg.epsilon_list]
        series.notes.append(msg)
        return series
    m0 = nld_mass(snaps[0])
    series.nld_mass_drift = float(max(abs(nld_mass(s) - m0) for s in snaps) / m0)
    if cfg.workers > 1 and len(cfg.epsilon_list) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            futs = [pool.submit(run_epsilon, cfg, dp, snaps, e) for e in cfg.epsilon_list]
            series.runs = [f.result() for f in futs]
    else:
        series.runs = [run_epsilon(cfg, dp, snaps, e) for e in cfg.epsilon_list]
    for r in series.runs:
        if r.status != "ok":
            series.notes.append(f"eps={r.epsilon:g}: {r.status}: {r.message}")
    pts = series.sup_errors()
    if len(pts) >= 2 and all(v > 0 for _, v in pts):
        series.rate_p, series.constant_C, series.fit_residual = fit_rate(pts)
        series.largest_eps_at_rate = _tail_rates(pts)
    else:
        series.notes.append("rate fit skipped: fewer than two successful epsilon values")
    return series


def frame_errors(psi: WaveField, ref: WaveField, s: float = 1.0) -> Tuple[float, float]:
    """``(physical-frame H^s error, semiclassical-frame H^s_eps error)`` of ``psi - ref``."""
    diff = psi - ref
    phys = rescale_to_physical(diff)
    return hs_norm(phys.values, phys.grid, s, 1.0), hs_eps_norm(diff, s)
