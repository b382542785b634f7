"""Command line entry point: ``diracnls {bands,dirac,nld,nls,converge}``.

Exit codes: 0 success, 1 usage or input error, 2 no Dirac point (gap open),
3 solver blow-up.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .bloch import solve_bands
from .config import StudyConfig, load_config
from .core import PeriodicPotential, TorusGrid
from .diracpoint import dirac_point
from .errors import BlowUpError, DiracNLSError, GapOpenError
from .multiscale import assemble_ansatz, build_u1
from .nld import NLDParams, SpinorField, nld_evolve
from .nls import NLSParams, nls_evolve
from .report import emit_report, fmt, summary_record, write_bands, write_json, write_rows
from .study import envelope_grid, initial_spinor, run_convergence_study

EXIT_OK, EXIT_USAGE, EXIT_GAP, EXIT_BLOWUP = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="key = value study configuration file")
    p.add_argument("--out", help="output directory (default: stdout for tables)")
    p.add_argument("--seed", type=int, help="seed for the optional envelope perturbation")
    p.add_argument("--potential", help="cosine modes as 'm:V_m,...', e.g. '2:5'")
    p.add_argument("--allow-odd", action="store_true", help="admit odd modes (gap-opening potentials)")
    p.add_argument("-M", type=int, help="plane-wave truncation")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    ap = _Parser(prog="diracnls", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    b = sub.add_parser("bands", parents=[common], help="dispersion bands over [0, 2 pi]")
    b.add_argument("--n-bands", type=int, default=6)
    b.add_argument("--k-points", type=int, default=129)

    d = sub.add_parser("dirac", parents=[common], help="Dirac point data as JSON")
    d.add_argument("--n-hint", type=int)

    n = sub.add_parser("nld", parents=[common], help="evolve the effective Dirac system")
    n.add_argument("--c-sharp", type=float)
    n.add_argument("--beta1", type=float)
    n.add_argument("--beta2", type=float)
    n.add_argument("--kappa", type=float)
    n.add_argument("--T", type=float)
    n.add_argument("--dt", type=float)
    n.add_argument("--length", type=int)
    n.add_argument("--points", type=int)
    n.add_argument("--samples", type=int)

    s = sub.add_parser("nls", parents=[common], help="evolve the semiclassical NLS from well-prepared data")
    s.add_argument("--epsilon", type=float, default=None)
    s.add_argument("--kappa", type=float)
    s.add_argument("--T", type=float)
    s.add_argument("--dt", type=float)
    s.add_argument("--length", type=int)
    s.add_argument("--points", type=int)
    s.add_argument("--samples", type=int)
    s.add_argument("--linear", choices=["exact", "split"])

    sub.add_parser("converge", parents=[common], help="run the epsilon convergence study")
    return ap


def _config(args) -> StudyConfig:
    cfg = load_config(args.config) if args.config else StudyConfig()
    up = {}
    if args.potential is not None:
        up["potential"] = PeriodicPotential.parse(args.potential, allow_odd=args.allow_odd)
    if args.M is not None:
        up["M"] = args.M
    if args.seed is not None:
        up["seed"] = args.seed
    if args.out is not None:
        up["out_dir"] = args.out
    for key in ("kappa", "length", "linear"):
        if getattr(args, key, None) is not None:
            up[key] = getattr(args, key)
    if getattr(args, "T", None) is not None:
        up["T_star"] = args.T
    if getattr(args, "samples", None) is not None:
        up["n_samples"] = args.samples
    return cfg.replace(**up) if up else cfg


def _emit_table(args, name, header, rows):
    if args.out:
        path = write_rows(Path(args.out) / name, header, rows)
        print(path)
    else:
        print(",".join(header))
        for row in rows:
            print(",".join(fmt(v) for v in row))


def cmd_bands(args, cfg):
    k = np.linspace(0.0, 2 * np.pi, args.k_points)
    bs = solve_bands(cfg.potential, k, args.n_bands, cfg.M)
    if args.out:
        print(write_bands(Path(args.out) / "bands.csv", bs))
    else:
        _emit_table(args, "bands.csv", ["k"] + [f"mu_{i}" for i in range(1, bs.n_bands + 1)],
                    [[kk, *mu] for kk, mu in zip(bs.k_grid, bs.bands)])
    return EXIT_OK


def cmd_dirac(args, cfg):
    dp = dirac_point(cfg.potential, cfg.M, args.n_hint)
    rec = dp.to_record()
    if args.out:
        print(write_json(Path(args.out) / "dirac.json", rec))
    else:
        print(json.dumps(rec, indent=2, sort_keys=True))
    return EXIT_OK


def _spinor_rows(snaps):
    for s in snaps:
        for x, am, ap in zip(s.grid.x, s.minus, s.plus):
            yield (s.t, x, am.real, am.imag, ap.real, ap.imag)


def cmd_nld(args, cfg):
    given = (args.c_sharp, args.beta1, args.beta2)
    if None in given:
        dp = dirac_point(cfg.potential, cfg.M, offsets=None)
        c, b1, b2 = (dp.c_sharp, dp.beta1, dp.beta2)
        c, b1, b2 = [g if g is not None else d for g, d in zip(given, (c, b1, b2))]
    else:
        c, b1, b2 = given
    p = NLDParams(c, b1, b2, cfg.kappa, args.dt or cfg.nld_dt, cfg.S_env)
    grid = TorusGrid(cfg.length, args.points or cfg.env_points)
    snaps = nld_evolve(initial_spinor(cfg, grid), p, cfg.T_star, cfg.sample_times)
    _emit_table(args, "nld.csv", ["t", "x", "re_minus", "im_minus", "re_plus", "im_plus"], _spinor_rows(snaps))
    return EXIT_OK


def cmd_nls(args, cfg):
    eps = args.epsilon if args.epsilon is not None else cfg.epsilon_list[0]
    dp = dirac_point(cfg.potential, cfg.M, offsets=None)
    grid = TorusGrid(cfg.length, args.points) if args.points else TorusGrid.resolving(cfg.length, eps, cfg.per_cell)
    q = NLSParams(eps, cfg.kappa, cfg.potential, args.dt or cfg.nls_dt_factor * eps, grid, cfg.linear)
    p = NLDParams.from_dirac(dp, cfg.kappa, cfg.nld_dt, cfg.S_env)
    psi0 = assemble_ansatz(build_u1(dp, initial_spinor(cfg, envelope_grid(cfg)), p, epsilon=eps), grid, 0.0)
    log_rows = []
    snaps = nls_evolve(psi0, q, cfg.T_star, cfg.sample_times, log_rows, s=cfg.s)
    cons = [(r.t, r.mass, r.energy) for r in log_rows]
    if args.out:
        rows = ((t, x, v.real, v.imag) for t, s in zip(cfg.sample_times, snaps) for x, v in zip(grid.x, s.values))
        print(write_rows(Path(args.out) / "nls.csv", ["t", "x", "re", "im"], rows))
        print(write_rows(Path(args.out) / "conservation.csv", ["t", "mass", "energy"], cons))
    else:
        _emit_table(args, "conservation.csv", ["t", "mass", "energy"], cons)
    return EXIT_OK


def cmd_converge(args, cfg):
    series = run_convergence_study(cfg)
    paths = emit_report(series, cfg)
    rec = summary_record(series)
    for r in rec["runs"]:
        print(f"eps={r['epsilon']:<10.6g} {r['status']:<7} sup_w={r['sup_error']}")
    print(f"rate p={series.rate_p}  C={series.constant_C}")
    for v in paths.values():
        print(v)
    if any(r.status == "blowup" for r in series.runs):
        return EXIT_BLOWUP
    return EXIT_OK


COMMANDS = {"bands": cmd_bands, "dirac": cmd_dirac, "nld": cmd_nld, "nls": cmd_nls, "converge": cmd_converge}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config(args)
        return COMMANDS[args.command](args, cfg)
    except GapOpenError as exc:
        print(f"no Dirac point: {exc}", file=sys.stderr)
        return EXIT_GAP
    except BlowUpError as exc:
        print(f"blow-up: {exc} (t={exc.t})", file=sys.stderr)
        return EXIT_BLOWUP
    except (DiracNLSError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
