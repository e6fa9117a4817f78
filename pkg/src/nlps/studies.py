"""Refinement, Picard-contraction and FFT-oracle studies behind the CLI."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import TimeParams, auto_dt, simulate
from .grid import Field, make_grid
from .kernel import make_bump_kernel, sample_kernel_grids
from .spectral import Which, convolve, convolve_direct, plan_convolution
from .wv_solver import (
    DEFAULT_MAX_ITERS,
    crosscheck_against_explicit,
    default_tol,
    from_wv,
    picard_time_step,
    to_wv,
)

ORACLE_MAX_N = 64


def restrict(a: np.ndarray) -> np.ndarray:
    """Average 2x2 blocks of fine cells onto the coarse grid."""
    return 0.25 * (a[0::2, 0::2] + a[1::2, 0::2] + a[0::2, 1::2] + a[1::2, 1::2])


# ------------------------------------------------------------------- oracle


def oracle_check(n: int, radius: float, seed: int, zero: bool = False) -> dict:
    """Compare FFT and direct convolution on a random field for J, dJ/dx, dJ/dy."""
    if n > ORACLE_MAX_N:
        raise ValueError(f"oracle check is O(n^4); refusing n={n} > {ORACLE_MAX_N}")
    spec = make_grid(n, 1.0)
    kg = sample_kernel_grids(make_bump_kernel(radius), spec)
    plan = plan_convolution(kg)
    rng = np.random.Generator(np.random.PCG64(seed))
    data = np.zeros(spec.shape) if zero else rng.uniform(-1.0, 1.0, spec.shape)
    f = Field(spec, data)
    out = {}
    for which, kern in ((Which.J, kg.j_grid), (Which.DJX, kg.djx_grid), (Which.DJY, kg.djy_grid)):
        a = convolve(plan, f, which).data
        b = convolve_direct(f, kern).data
        out[which.value] = float(np.abs(a - b).max())
    return out


# ------------------------------------------------------------ refine study


@dataclass
class RefineLevel:
    n: int
    dt: float
    steps: int
    diff_l2: float | None = None  # |u_l - R u_{l+1}| on the coarse grid of level l
    diff_max: float | None = None
    order_l2: float | None = None
    order_max: float | None = None


def refine_study(config, levels: int) -> list[RefineLevel]:
    """Self-convergence of the explicit scheme under joint refinement.

    Runs the configured problem at ``n, 2n, ..., 2^(K-1) n`` with
    ``dt`` shrinking by 4 per level (so ``dt ~ dx^2``) to the same final
    time. Finer solutions are restricted by 2x2 averaging until they sit on
    the grid of the coarser level; differences of successive levels are
    reported with observed orders ``log2(d_l / d_{l+1})``.
    """
    if levels < 2:
        raise ValueError("refine-study needs at least 2 levels")
    base = config.grid
    kg0 = config.kernel_grids()
    dt0 = config.time.dt if config.time.dt is not None else auto_dt(base, config.physics, kg0)
    t_end = config.time.t_end
    steps0 = max(1, int(math.ceil(t_end / dt0 - 1e-9)))
    dt0 = t_end / steps0 if t_end > 0 else dt0

    finals = []
    out = []
    for lvl in range(levels):
        n = base.n * 2**lvl
        dt = dt0 / 4**lvl
        steps = steps0 * 4**lvl if t_end > 0 else 0
        cfg = config.replace(
            grid=make_grid(n, base.length),
            time=TimeParams(t_end=steps * dt, dt=dt, diagnostics_every=max(1, steps)),
            output_dir=None,
        )
        res = simulate(cfg)
        finals.append((res.final.m.data, res.final.phi.data))
        out.append(RefineLevel(n=n, dt=dt, steps=steps))

    for lvl in range(levels - 1):
        coarse_m, coarse_p = finals[lvl]
        fine_m, fine_p = finals[lvl + 1]
        fine_m, fine_p = restrict(fine_m), restrict(fine_p)
        cell_area = (base.length / out[lvl].n) ** 2
        d = np.concatenate([(coarse_m - fine_m).ravel(), (coarse_p - fine_p).ravel()])
        out[lvl].diff_l2 = float(np.sqrt(cell_area * (d * d).sum()))
        out[lvl].diff_max = float(np.abs(d).max())
    for lvl in range(levels - 2):
        a, b = out[lvl], out[lvl + 1]
        if a.diff_l2 > 0 and b.diff_l2 > 0:
            a.order_l2 = math.log2(a.diff_l2 / b.diff_l2)
        if a.diff_max > 0 and b.diff_max > 0:
            a.order_max = math.log2(a.diff_max / b.diff_max)
    return out


# ------------------------------------------------------------ picard study


@dataclass
class PicardStepRecord:
    step: int
    time: float
    iterates: int
    converged: bool
    contraction: float | None  # geometric mean of r_{k+1}/r_k, None if undefined
    crosscheck: float
    residuals: list = field(default_factory=list)


def picard_study(config, steps: int, tol=None, max_iters=DEFAULT_MAX_ITERS) -> list[PicardStepRecord]:
    """Advance ``steps`` Picard time steps, recording contraction and crosscheck."""
    spec = config.grid
    kg = config.kernel_grids()
    plan = plan_convolution(kg)
    params = config.physics
    dt = config.time.dt if config.time.dt is not None else auto_dt(spec, params, kg)
    if tol is None:
        tol = default_tol(spec.n)
    s = config.initial_state()
    records = []
    for _ in range(steps):
        cross = crosscheck_against_explicit(s, dt, params, plan, tol, max_iters)
        wv, rep = picard_time_step(to_wv(s), dt, params, plan, tol, max_iters)
        ratios = [r for r in rep.ratios() if r > 0]
        contraction = float(np.exp(np.mean(np.log(ratios)))) if ratios else None
        s = from_wv(wv)
        records.append(
            PicardStepRecord(
                step=s.step,
                time=s.time,
                iterates=rep.iterates_used,
                converged=rep.converged,
                contraction=contraction,
                crosscheck=cross,
                residuals=list(rep.residuals),
            )
        )
    return records


def crosscheck_slope(s, dt: float, params, plan, levels: int = 4, tol=None):
    """Log-log slope of the explicit/Picard gap against dt over ``levels`` halvings."""
    dts = [dt / 2**k for k in range(levels)]
    gaps = [crosscheck_against_explicit(s, h, params, plan, tol) for h in dts]
    slope = float(np.polyfit(np.log(dts), np.log(gaps), 1)[0])
    return dts, gaps, slope
