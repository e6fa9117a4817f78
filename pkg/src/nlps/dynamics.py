"""Fully explicit finite-volume stepping for the (m, phi) system.

One step of size ``dt`` on the periodic grid reads, cell by cell,

    m'   = m   + dt * [ (D2_i m + D2_j m) / dx^2
                        - (beta/dx) (D1_i[(phi - m^2) Jx] + D1_j[(phi - m^2) Jy]) ]
    phi' = phi + dt * [ (D2_i phi + D2_j phi) / dx^2
                        - (beta/dx) (D1_i[m (1 - phi) Jx] + D1_j[m (1 - phi) Jy])
                        + F(phi) ]

with ``D2 f = f[+1] - 2 f + f[-1]``, ``D1 f = f[+1] - f[-1]`` and
``(Jx, Jy) = grad J * m`` from the FFT plan.
"""

from __future__ import annotations

import logging
import math
import time as _time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional

import numpy as np

from . import _kernels
from .errors import BlowUpError, ConfigError
from .grid import Field, GridSpec, State
from .kernel import KernelGrids
from .spectral import ConvolutionPlan, plan_convolution

log = logging.getLogger(__name__)

__all__ = [
    "EvapKind",
    "EvaporationModel",
    "PhysicsParams",
    "TimeParams",
    "evaporation_rate",
    "evaporation_field",
    "auto_dt",
    "drift_bound",
    "step_explicit",
    "resolve_dt",
    "simulate",
    "RunResult",
]


class EvapKind(str, Enum):
    NONE = "none"
    LINEAR = "linear"


@dataclass(frozen=True)
class EvaporationModel:
    kind: EvapKind = EvapKind.NONE
    alpha: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", EvapKind(self.kind))
        if not np.isfinite(self.alpha) or self.alpha < 0:
            raise ConfigError(f"evaporation.alpha must be >= 0, got {self.alpha}")

    @property
    def effective_alpha(self) -> float:
        return self.alpha if self.kind is EvapKind.LINEAR else 0.0


@dataclass(frozen=True)
class PhysicsParams:
    beta: float
    evap: EvaporationModel = field(default_factory=EvaporationModel)

    def __post_init__(self):
        # beta = 0 is admitted for the pure-diffusion limit used in tests
        if not np.isfinite(self.beta) or self.beta < 0:
            raise ConfigError(f"physics.beta must be > 0, got {self.beta}")


@dataclass(frozen=True)
class TimeParams:
    t_end: float
    dt: Optional[float] = None  # None means "auto"
    snapshot_every: int = 0
    diagnostics_every: int = 100

    def __post_init__(self):
        if self.dt is not None and not (np.isfinite(self.dt) and self.dt > 0):
            raise ConfigError(f"time.dt must be > 0 or 'auto', got {self.dt}")
        if not np.isfinite(self.t_end) or self.t_end < 0:
            raise ConfigError(f"time.t_end must be >= 0, got {self.t_end}")
        if self.snapshot_every < 0:
            raise ConfigError("time.snapshot_every must be >= 0")
        if self.diagnostics_every < 1:
            raise ConfigError("time.diagnostics_every must be >= 1")


def evaporation_rate(model: EvaporationModel, r: float) -> float:
    """F(r) = alpha (1 - r) on [0, 1], zero elsewhere; zero for NONE."""
    if model.kind is EvapKind.NONE:
        return 0.0
    if 0.0 <= r <= 1.0:
        return model.alpha * (1.0 - r)
    return 0.0


def evaporation_field(model: EvaporationModel, phi: np.ndarray) -> np.ndarray:
    return _kernels._evap_numpy(phi, model.effective_alpha)


def drift_bound(kg: KernelGrids) -> float:
    """``cell_area * sum |dJ/dx|``, a bound on ``sup |dJ/dx * m|`` for ``|m| <= 1``."""
    return kg.spec.cell_area * float(np.abs(kg.djx_grid.data).sum())


def auto_dt(spec: GridSpec, params: PhysicsParams, kg: KernelGrids) -> float:
    # diffusion + advection CFL heuristic with safety factor 0.5
    dx = spec.dx
    g = drift_bound(kg)
    return 0.5 * dx * dx / (4.0 + 2.0 * params.beta * g * dx)


def _first_bad_cell(a: np.ndarray) -> tuple[int, int]:
    j, i = np.argwhere(~np.isfinite(a))[0]
    return int(i), int(j)


def step_explicit(s: State, params: PhysicsParams, dt: float, plan: ConvolutionPlan) -> State:
    spec = s.spec
    jx, jy = plan.gradient(s.m)
    dx = spec.dx
    m_new, phi_new = _kernels.explicit_update(
        s.m.data,
        s.phi.data,
        jx,
        jy,
        float(dt),
        1.0 / (dx * dx),
        params.beta / dx,
        params.evap.effective_alpha,
    )
    for name, arr in (("m", m_new), ("phi", phi_new)):
        if not np.isfinite(arr).all():
            raise BlowUpError(s.step + 1, _first_bad_cell(arr), dt, name)
    return State(Field(spec, m_new), Field(spec, phi_new), s.time + dt, s.step + 1)


def resolve_dt(time: TimeParams, spec: GridSpec, params: PhysicsParams, kg: KernelGrids):
    """Return ``(dt, n_steps, warnings)`` for a run."""
    ref = auto_dt(spec, params, kg)
    warnings = []
    if time.dt is None:
        dt = ref
    else:
        dt = float(time.dt)
        if dt > ref:
            msg = f"dt={dt:.6g} exceeds the stability heuristic auto_dt={ref:.6g}"
            log.warning(msg)
            warnings.append(msg)
    n_steps = 0 if time.t_end <= 0 else int(math.ceil(time.t_end / dt - 1e-9))
    return dt, n_steps, warnings


@dataclass
class RunResult:
    final: State
    dt: float
    n_steps: int
    rows: list
    summary: dict
    warnings: list
    states: list  # in-memory snapshots when requested
    out_dir: Optional[Path] = None


def simulate(config, out_dir=None, keep_states: bool = False, progress: bool = False) -> RunResult:
    """Run a configured simulation.

    Parameters
    ----------
    config : RunConfig
        Parsed configuration (see :func:`nlps.io_runtime.parse_config`).
    out_dir : path-like, optional
        Overrides ``config.output_dir``. When both are None nothing is written.
    keep_states : bool
        Keep every snapshot state in memory on the result.

    Returns
    -------
    RunResult
        Final state, diagnostics rows and a summary with the maximum
        per-step mass residuals and bound violations seen during the run.
    """
    from . import diagnostics as dg
    from . import io_runtime as io

    spec = config.grid
    kg = config.kernel_grids()
    plan = plan_convolution(kg)
    params = config.physics
    state0 = config.initial_state()
    dt, n_steps, warnings = resolve_dt(config.time, spec, params, kg)

    out = out_dir if out_dir is not None else config.output_dir
    out = Path(out) if out is not None else None
    csv_path = None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        csv_path = out / "diagnostics.csv"
        if csv_path.exists():
            csv_path.unlink()

    snap_every = config.time.snapshot_every
    diag_every = config.time.diagnostics_every
    rows = []
    states = []

    def record(s: State):
        row = dg.diagnostics_row(s, state0, plan, params.beta)
        rows.append(row)
        if csv_path is not None:
            io.append_diagnostics_row(row, csv_path)

    def snapshot(s: State):
        if keep_states:
            states.append(s)
        if out is not None:
            io.write_snapshot(s, out / io.snapshot_name(s.step))

    max_res_m = 0.0
    max_res_phi = 0.0
    viol = np.array(dg.bound_violations(state0))

    s = state0
    record(s)
    snapshot(s)
    t0 = _time.perf_counter()
    for k in range(1, n_steps + 1):
        nxt = step_explicit(s, params, dt, plan)
        rm, rp = dg.mass_balance_residual(s, nxt, dt, params.evap)
        max_res_m = max(max_res_m, rm)
        max_res_phi = max(max_res_phi, rp)
        viol = np.maximum(viol, dg.bound_violations(nxt))
        s = nxt
        last = k == n_steps
        if k % diag_every == 0 or last:
            record(s)
        if (snap_every and k % snap_every == 0) or last:
            snapshot(s)
        if progress and k % max(1, n_steps // 20) == 0:
            log.info("step %d/%d t=%.5g", k, n_steps, s.time)
    elapsed = _time.perf_counter() - t0

    summary = {
        "final_time": s.time,
        "steps": s.step,
        "dt": dt,
        "final_solvent_ratio": rows[-1].solvent_ratio,
        "max_mass_residual_m": max_res_m,
        "max_mass_residual_phi": max_res_phi,
        "max_viol_m_phi": float(viol[0]),
        "max_viol_phi_hi": float(viol[1]),
        "max_viol_phi_lo": float(viol[2]),
        "elapsed_s": elapsed,
    }
    return RunResult(s, dt, n_steps, rows, summary, warnings, states, out)
