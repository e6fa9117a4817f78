"""Command-line entry point: ``nlps <command> [flags]``.

Exit codes: 0 ok, 1 configuration/usage error, 2 numerical blow-up,
3 I/O or file-format error, 4 Picard non-convergence.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import io_runtime as io
from .dynamics import simulate
from .errors import BlowUpError, ConfigError
from .studies import ORACLE_MAX_N, oracle_check, picard_study, refine_study
from .wv_solver import DEFAULT_MAX_ITERS

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_BLOWUP = 2
EXIT_IO = 3
EXIT_PICARD = 4

ORACLE_TOL = 1e-10

log = logging.getLogger("nlps")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _fmt(x) -> str:
    return "" if x is None else io.format_double(x)


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for r in rows:
            fh.write(",".join(_fmt(v) for v in r) + "\n")


# ---------------------------------------------------------------- commands


def cmd_run(args) -> int:
    cfg = io.load_config(args.config)
    out = Path(args.out or cfg.output_dir or "out")
    res = simulate(cfg, out_dir=out)
    s0 = cfg.initial_state()
    io.render_ppm(s0.m, io.Palette.SPIN, out / "m_start.ppm")
    io.render_ppm(s0.phi, io.Palette.CONCENTRATION, out / "phi_start.ppm")
    io.render_ppm(res.final.m, io.Palette.SPIN, out / "m_end.ppm")
    io.render_ppm(res.final.phi, io.Palette.CONCENTRATION, out / "phi_end.ppm")
    for w in res.warnings:
        print(f"warning: {w}", file=sys.stderr)
    sm = res.summary
    print(
        f"t={sm['final_time']:.6g} steps={sm['steps']} dt={sm['dt']:.6g} "
        f"solvent_ratio={sm['final_solvent_ratio']:.6f} "
        f"max_viol=(|m|-phi)+:{sm['max_viol_m_phi']:.3g},"
        f"(phi-1)+:{sm['max_viol_phi_hi']:.3g},(-phi)+:{sm['max_viol_phi_lo']:.3g}"
    )
    return EXIT_OK


def cmd_oracle_check(args) -> int:
    if args.n > ORACLE_MAX_N:
        raise UsageError(f"oracle-check: n={args.n} exceeds the O(n^4) cost guard ({ORACLE_MAX_N})")
    if args.n < 4:
        raise ConfigError(f"grid.n must satisfy n >= 4, got {args.n}")
    if not 0 < args.radius < 0.5:
        raise ConfigError("kernel radius must lie in (0, L/2) with L = 1")
    errs = oracle_check(args.n, args.radius, args.seed, zero=args.zero)
    for k, v in errs.items():
        print(f"{k}: max |fft - direct| = {v:.3e}")
    worst = max(errs.values())
    ok = worst <= ORACLE_TOL
    print(f"max discrepancy {worst:.3e} ({'PASS' if ok else 'FAIL'} at {ORACLE_TOL:g})")
    return EXIT_OK if ok else EXIT_CONFIG


def cmd_refine_study(args) -> int:
    if args.levels < 2:
        raise UsageError("refine-study: --levels must be >= 2")
    cfg = io.load_config(args.config)
    levels = refine_study(cfg, args.levels)
    print("n,dt,steps,diff_l2,diff_max,order_l2,order_max")
    rows = []
    for lv in levels:
        row = (lv.n, lv.dt, lv.steps, lv.diff_l2, lv.diff_max, lv.order_l2, lv.order_max)
        rows.append(row)
        print(",".join(_fmt(v) for v in row))
    out = Path(args.out or cfg.output_dir or ".")
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(
        out / "refine_study.csv",
        ("n", "dt", "steps", "diff_l2", "diff_max", "order_l2", "order_max"),
        rows,
    )
    return EXIT_OK


def cmd_picard_study(args) -> int:
    if args.steps < 1:
        raise UsageError("picard-study: --steps must be >= 1")
    if args.max_iters < 1:
        raise UsageError("picard-study: --max-iters must be >= 1")
    if args.tol is not None and not args.tol > 0:
        raise UsageError("picard-study: --tol must be > 0")
    cfg = io.load_config(args.config)
    recs = picard_study(cfg, args.steps, tol=args.tol, max_iters=args.max_iters)
    print("step,time,iterates,converged,contraction,crosscheck")
    rows = []
    for r in recs:
        row = (r.step, r.time, r.iterates, int(r.converged), r.contraction, r.crosscheck)
        rows.append(row)
        print(",".join(_fmt(v) for v in row))
    ratios = [r.contraction for r in recs if r.contraction is not None]
    gm = math.exp(float(np.mean(np.log(ratios)))) if ratios else None
    print(f"geometric-mean contraction ratio: {'n/a' if gm is None else f'{gm:.6g}'}")
    print(f"max crosscheck discrepancy: {max(r.crosscheck for r in recs):.6g}")
    out = Path(args.out or cfg.output_dir or ".")
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(
        out / "picard_study.csv",
        ("step", "time", "iterates", "converged", "contraction", "crosscheck"),
        rows,
    )
    failed = [r.step for r in recs if not r.converged]
    if failed:
        print(f"Picard iteration did not converge at steps {failed}", file=sys.stderr)
        return EXIT_PICARD
    return EXIT_OK


def cmd_render(args) -> int:
    s = io.read_snapshot(args.snapshot)
    if args.field == "m":
        io.render_ppm(s.m, io.Palette.SPIN, args.out)
    else:
        io.render_ppm(s.phi, io.Palette.CONCENTRATION, args.out)
    return EXIT_OK


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="nlps", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="run a simulation from a JSON config")
    r.add_argument("--config", required=True)
    r.add_argument("--out")
    r.set_defaults(func=cmd_run)

    o = sub.add_parser("oracle-check", help="FFT vs direct convolution")
    o.add_argument("--n", type=int, default=16)
    o.add_argument("--radius", type=float, default=0.25)
    o.add_argument("--seed", type=int, default=0)
    o.add_argument("--zero", action="store_true", help="use the zero field")
    o.set_defaults(func=cmd_oracle_check)

    f = sub.add_parser("refine-study", help="self-convergence under dx, dt ~ dx^2 refinement")
    f.add_argument("--config", required=True)
    f.add_argument("--levels", type=int, default=3)
    f.add_argument("--out")
    f.set_defaults(func=cmd_refine_study)

    c = sub.add_parser("picard-study", help="Picard contraction and explicit crosscheck")
    c.add_argument("--config", required=True)
    c.add_argument("--steps", type=int, default=10)
    c.add_argument("--tol", type=float, help="residual tolerance (default 1e-12 * n)")
    c.add_argument("--max-iters", type=int, default=DEFAULT_MAX_ITERS)
    c.add_argument("--out")
    c.set_defaults(func=cmd_picard_study)

    d = sub.add_parser("render", help="render a snapshot field as PPM")
    d.add_argument("--snapshot", required=True)
    d.add_argument("--field", choices=("m", "phi"), required=True)
    d.add_argument("--out", required=True)
    d.set_defaults(func=cmd_render)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BlowUpError as exc:
        print(f"blow-up: {exc}", file=sys.stderr)
        return EXIT_BLOWUP
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
