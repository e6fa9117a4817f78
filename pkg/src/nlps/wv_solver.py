"""Sum/difference variables and the frozen-drift Picard iteration.

With ``w = phi + m`` and ``v = phi - m`` the system becomes two
drift-diffusion equations

    w_t = lap w + div[B1 w grad J * (w - v)] + F((w + v) / 2),   B1 = beta (m - 1)
    v_t = lap v + div[B2 v grad J * (w - v)] + F((w + v) / 2),   B2 = beta (m + 1)

A time step freezes ``m_bar`` (hence B1, B2) at the incoming state and
iterates

    u_{n+1} = u^0 + dt * R(u_n)

where ``R`` is the right-hand side discretized with the same stencils as the
explicit scheme. The first iterate reproduces the explicit step; the fixed
point is the backward-Euler step of the frozen-coefficient problem.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .dynamics import PhysicsParams, evaporation_field, step_explicit
from .errors import BlowUpError
from .grid import Field, State
from .spectral import ConvolutionPlan

__all__ = [
    "WVState",
    "PicardReport",
    "to_wv",
    "from_wv",
    "picard_time_step",
    "crosscheck_against_explicit",
    "default_tol",
    "DEFAULT_MAX_ITERS",
]

DEFAULT_MAX_ITERS = 50


def default_tol(n: int) -> float:
    return 1e-12 * n


@dataclass(frozen=True, eq=False)
class WVState:
    w: Field
    v: Field
    time: float = 0.0
    step: int = 0


@dataclass
class PicardReport:
    iterates_used: int = 0
    residuals: list = field(default_factory=list)
    converged: bool = False

    def ratios(self) -> list:
        r = self.residuals
        return [r[k + 1] / r[k] for k in range(len(r) - 1) if r[k] > 0.0]


def to_wv(s: State) -> WVState:
    spec = s.spec
    m, phi = s.m.data, s.phi.data
    return WVState(Field(spec, phi + m), Field(spec, phi - m), s.time, s.step)


def from_wv(wv: WVState) -> State:
    spec = wv.w.spec
    w, v = wv.w.data, wv.v.data
    return State(Field(spec, 0.5 * (w - v)), Field(spec, 0.5 * (w + v)), wv.time, wv.step)


def _l2(a: np.ndarray, cell_area: float) -> float:
    return float(np.sqrt(cell_area * float((a * a).sum())))


def picard_time_step(
    wv: WVState,
    dt: float,
    params: PhysicsParams,
    plan: ConvolutionPlan,
    tol: float | None = None,
    max_iters: int = DEFAULT_MAX_ITERS,
):
    """Advance ``(w, v)`` by ``dt`` with the frozen-drift fixed-point iteration.

    Returns the last iterate and a :class:`PicardReport`. Non-convergence is
    reported through ``report.converged``, not raised.
    """
    spec = wv.w.spec
    if tol is None:
        tol = default_tol(spec.n)
    if not (dt > 0 and tol > 0 and max_iters >= 1):
        raise ValueError("need dt > 0, tol > 0 and max_iters >= 1")
    dx = spec.dx
    ca = spec.cell_area
    inv_dx2 = 1.0 / (dx * dx)
    beta_over_dx = params.beta / dx

    w0, v0 = wv.w.data, wv.v.data
    m_bar = 0.5 * (w0 - v0)
    # frozen coefficients: B1 = beta (m_bar - 1), B2 = beta (m_bar + 1); beta is
    # carried by beta_over_dx, and the sign folds the "+div" into the "-D1" form
    c_w = 1.0 - m_bar
    c_v = -(1.0 + m_bar)

    report = PicardReport()
    w_n, v_n = w0, v0
    for it in range(1, max_iters + 1):
        # grad J * (w - v) = 2 grad J * m_n; the factor 2 cancels the 1/(2 dx)
        jx, jy = plan.gradient(Field(spec, 0.5 * (w_n - v_n)))
        src = evaporation_field(params.evap, 0.5 * (w_n + v_n))
        w_next = _kernels.fd_update(
            w0, w_n, c_w * w_n * jx, c_w * w_n * jy, src, float(dt), inv_dx2, beta_over_dx
        )
        v_next = _kernels.fd_update(
            v0, v_n, c_v * v_n * jx, c_v * v_n * jy, src, float(dt), inv_dx2, beta_over_dx
        )
        for name, arr in (("w", w_next), ("v", v_next)):
            if not np.isfinite(arr).all():
                j, i = np.argwhere(~np.isfinite(arr))[0]
                raise BlowUpError(wv.step + 1, (int(i), int(j)), dt, name)
        gap = _l2(w_next - w_n, ca) + _l2(v_next - v_n, ca)
        report.residuals.append(gap)
        report.iterates_used = it
        w_n, v_n = w_next, v_next
        if gap < tol:
            report.converged = True
            break

    out = WVState(Field(spec, w_n), Field(spec, v_n), wv.time + dt, wv.step + 1)
    return out, report


def crosscheck_against_explicit(
    s: State,
    dt: float,
    params: PhysicsParams,
    plan: ConvolutionPlan,
    tol: float | None = None,
    max_iters: int = DEFAULT_MAX_ITERS,
) -> float:
    """Max-norm gap between the explicit step and the Picard step from ``s``."""
    a = step_explicit(s, params, dt, plan)
    wv, _ = picard_time_step(to_wv(s), dt, params, plan, tol, max_iters)
    b = from_wv(wv)
    return float(
        max(np.abs(a.m.data - b.m.data).max(), np.abs(a.phi.data - b.phi.data).max())
    )
