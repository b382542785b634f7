"""Study configuration: a flat ``key = value`` text format.

Lines are ``key = value``; ``#`` starts a comment; lists are comma
separated; epsilon entries may be fractions (``1/16``).  Unknown keys are
rejected so typos fail loudly.  Keys mirror the :class:`StudyConfig` fields.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional, Tuple

import numpy as np

from .core import PeriodicPotential
from .nls import inverse_epsilon


@dataclass(frozen=True)
class Alpha0:
    """Gaussian initial envelope per component."""

    amp_minus: float = 1.0
    amp_plus: float = 0.5
    width_minus: float = 1.0
    width_plus: float = 1.0
    center_minus: float = 0.0
    center_plus: float = 0.0


@dataclass(frozen=True)
class StudyConfig:
    potential: PeriodicPotential = field(default_factory=lambda: PeriodicPotential({2: 5.0}))
    M: int = 24
    s: float = 1.0
    S_env: float = 1.0
    epsilon_list: Tuple[float, ...] = (1 / 8, 1 / 16, 1 / 32, 1 / 64)
    T_star: float = 0.5
    n_samples: int = 11
    nls_dt_factor: float = 1.0 / 200  # NLS dt = factor * epsilon
    nld_dt: float = 1.0 / 400
    length: int = 32
    env_points: int = 256
    per_cell: int = 32
    kappa: float = 1.0
    alpha0: Alpha0 = field(default_factory=Alpha0)
    perturbation: float = 0.0
    seed: int = 0
    linear: str = "exact"
    out_dir: str = "out"
    bands: bool = False
    band_count: int = 6
    band_points: int = 129
    workers: int = 1

    def __post_init__(self):
        if not self.s > 0.5:
            raise ValueError(f"s must exceed 1/2, got {self.s}")
        eps = tuple(float(e) for e in self.epsilon_list)
        if not eps:
            raise ValueError("epsilon_list is empty")
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise ValueError("epsilon_list must be strictly decreasing")
        for e in eps:
            if not 0 < e <= 1:
                raise ValueError(f"epsilon {e} outside (0, 1]")
            if e < 1:
                inverse_epsilon(e)
        object.__setattr__(self, "epsilon_list", eps)
        if not self.T_star > 0:
            raise ValueError("T_star must be positive")
        if self.n_samples < 1:
            raise ValueError("n_samples must be at least 1")
        if self.kappa not in (-1, 0, 1):
            raise ValueError("kappa must be -1, 0 or 1")
        if self.perturbation < 0:
            raise ValueError("perturbation must be nonnegative")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    @property
    def sample_times(self) -> np.ndarray:
        return np.linspace(0.0, self.T_star, self.n_samples)

    def replace(self, **kw) -> "StudyConfig":
        return dataclasses.replace(self, **kw)

    def to_record(self) -> dict:
        rec = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if isinstance(v, PeriodicPotential):
                v = v.format()
            elif isinstance(v, Alpha0):
                v = dataclasses.asdict(v)
            elif isinstance(v, tuple):
                v = list(v)
            rec[f.name] = v
        return rec


_ALPHA_KEYS = {f"alpha0.{f.name}": f.name for f in dataclasses.fields(Alpha0)}


def _parse_bool(v: str) -> bool:
    low = v.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def _parse_eps(v: str) -> Tuple[float, ...]:
    return tuple(float(Fraction(item.strip())) for item in v.split(",") if item.strip())


def parse_config(text: str, base: Optional[StudyConfig] = None) -> StudyConfig:
    cfg = base or StudyConfig()
    types = {f.name: f.type for f in dataclasses.fields(StudyConfig)}
    updates, alpha = {}, {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        try:
            if key in _ALPHA_KEYS:
                alpha[_ALPHA_KEYS[key]] = float(value)
            elif key == "potential":
                updates[key] = PeriodicPotential.parse(value)
            elif key == "epsilon_list":
                updates[key] = _parse_eps(value)
            elif key in ("bands",):
                updates[key] = _parse_bool(value)
            elif key in ("out_dir", "linear"):
                updates[key] = value
            elif key in types:
                kind = types[key]
                updates[key] = int(value) if kind in ("int", int) else float(value)
            else:
                raise KeyError(key)
        except KeyError:
            raise ValueError(f"line {lineno}: unknown key {key!r}") from None
        except ValueError as exc:
            raise ValueError(f"line {lineno}: bad value for {key!r}: {exc}") from None
    if alpha:
        updates["alpha0"] = dataclasses.replace(cfg.alpha0, **alpha)
    return cfg.replace(**updates)


def load_config(path, base: Optional[StudyConfig] = None) -> StudyConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"), base)


def format_config(cfg: StudyConfig) -> str:
    """Inverse of :func:`parse_config` (round-trips every field)."""
    lines = []
    for f in dataclasses.fields(cfg):
        v = getattr(cfg, f.name)
        if isinstance(v, PeriodicPotential):
            lines.append(f"potential = {v.format()}")
        elif isinstance(v, Alpha0):
            for k, name in _ALPHA_KEYS.items():
                lines.append(f"{k} = {getattr(v, name)!r}")
        elif isinstance(v, tuple):
            lines.append(f"{f.name} = " + ", ".join(repr(x) for x in v))
        else:
            lines.append(f"{f.name} = {v!r}" if not isinstance(v, str) else f"{f.name} = {v}")
    return "\n".join(lines) + "\n"
