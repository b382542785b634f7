"""CSV/JSON emission for studies, band tables and solver snapshots."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .bloch import BandStructure, solve_bands

SIG = 15


def fmt(v: float) -> str:
    """15 significant digits (``repr``-stable for identical inputs)."""
    return f"{float(v):.{SIG}g}"


def _json_safe(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, np.generic):
        return _json_safe(obj.item())
    return obj


def _open(path: Path):
    path.parent.mkdir(parents=True, exist_ok=True)
    return path.open("w", newline="", encoding="utf-8")


def write_rows(path, header: Sequence[str], rows: Iterable[Sequence[float]]) -> Path:
    path = Path(path)
    with _open(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def write_bands(path, bs: BandStructure) -> Path:
    header = ["k"] + [f"mu_{n}" for n in range(1, bs.n_bands + 1)]
    return write_rows(path, header, ([k, *mus] for k, mus in zip(bs.k_grid, bs.bands)))


def write_json(path, record: dict) -> Path:
    path = Path(path)
    with _open(path) as fh:
        json.dump(_json_safe(record), fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")
    return path


def summary_record(series, cfg=None) -> dict:
    rec = {
        "mu_star": series.dirac.get("mu_star"),
        "c_sharp": series.dirac.get("c_sharp"),
        "beta1": series.dirac.get("beta1"),
        "beta2": series.dirac.get("beta2"),
        "gap": series.dirac.get("gap"),
        "rate_p": series.rate_p,
        "constant_C": series.constant_C,
        "fit_residual": series.fit_residual,
        "largest_epsilon_at_rate": series.largest_eps_at_rate,
        "nld_mass_drift": series.nld_mass_drift,
        "runs": [
            {
                "epsilon": r.epsilon,
                "sup_error": r.sup if r.w else None,
                "status": r.status,
                "message": r.message,
                "runtime_s": r.runtime,
                "initial_offset": r.initial_offset,
                "mass_drift": r.mass_drift,
                "energy_drift": r.energy_drift,
            }
            for r in series.runs
        ],
        "notes": list(series.notes),
    }
    if not any(r.w for r in series.runs):
        rec["warning"] = "no error samples were produced"
    if cfg is not None:
        rec["config"] = cfg.to_record()
    return rec


def emit_report(series, cfg, out_dir: Optional[str] = None) -> dict:
    """Write ``errors.csv``, ``summary.json`` and (if requested) ``bands.csv``; returns the paths."""
    out = Path(out_dir if out_dir is not None else cfg.out_dir)
    rows = ((r.epsilon, t, w) for r in series.runs for t, w in zip(r.times, r.w))
    paths = {"errors": write_rows(out / "errors.csv", ["epsilon", "t", "w"], rows)}
    paths["summary"] = write_json(out / "summary.json", summary_record(series, cfg))
    if cfg.bands:
        k = np.linspace(0.0, 2 * np.pi, cfg.band_points)
        paths["bands"] = write_bands(out / "bands.csv", solve_bands(cfg.potential, k, cfg.band_count, cfg.M))
    return paths


def read_errors(path):
    """Rows of ``errors.csv`` as ``(epsilon, t, w)`` floats."""
    with Path(path).open(encoding="utf-8") as fh:
        r = csv.reader(fh)
        next(r)
        return [tuple(float(v) for v in row) for row in r]
