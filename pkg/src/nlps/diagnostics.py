"""Scalar monitors recorded along a run."""

from __future__ import annotations

import math
from dataclasses import astuple, dataclass, fields

import numpy as np

from .dynamics import EvaporationModel, evaporation_field
from .grid import State
from .spectral import ConvolutionPlan, Which

__all__ = [
    "DiagnosticsRow",
    "CSV_COLUMNS",
    "solvent_ratio",
    "scaled_l1",
    "spin_balance",
    "free_energy",
    "free_energy_density",
    "interaction_energy_direct",
    "bound_violations",
    "mass_balance_residual",
    "diagnostics_row",
    "SENTINEL",
]

# Marker for ratios that are undefined (zero denominator). Serialized as an
# empty CSV field.
SENTINEL = None

EPS_LOG = 1e-12


@dataclass(frozen=True)
class DiagnosticsRow:
    step: int
    time: float
    solvent_ratio: float
    l1_m_scaled: float | None
    l1_phi_scaled: float | None
    spin_balance: float | None
    free_energy: float
    mass_m: float
    mass_phi: float
    viol_m_phi: float
    viol_phi_hi: float
    viol_phi_lo: float

    def values(self) -> tuple:
        return astuple(self)


CSV_COLUMNS = tuple(f.name for f in fields(DiagnosticsRow))


def _l1(a: np.ndarray, cell_area: float) -> float:
    return cell_area * float(np.abs(a).sum())


def solvent_ratio(s: State) -> float:
    spec = s.spec
    return _l1(1.0 - s.phi.data, spec.cell_area) / (spec.length * spec.length)


def scaled_l1(s: State, s0: State):
    """``(|m|_1 / |m0|_1, |phi|_1 / |phi0|_1)``; SENTINEL where the initial norm is zero."""
    ca = s.spec.cell_area
    out = []
    for a, a0 in ((s.m.data, s0.m.data), (s.phi.data, s0.phi.data)):
        den = _l1(a0, ca)
        out.append(_l1(a, ca) / den if den > 0.0 else SENTINEL)
    return tuple(out)


def spin_balance(s: State):
    ca = s.spec.cell_area
    m = s.m.data
    pos = ca * float(np.maximum(m, 0.0).sum())
    neg = ca * float(np.maximum(-m, 0.0).sum())
    if neg == 0.0:
        return SENTINEL
    return pos / neg


def _xlogx(x: np.ndarray, eps: float) -> np.ndarray:
    return x * np.log(np.maximum(x, eps))


def free_energy_density(m: np.ndarray, phi: np.ndarray, beta: float, eps_log: float = EPS_LOG):
    """Local part f(m, phi) of the free energy, log arguments clamped at ``eps_log``."""
    ent = (
        0.5 * _xlogx(phi + m, eps_log)
        + 0.5 * _xlogx(phi - m, eps_log)
        + _xlogx(1.0 - phi, eps_log)
        - phi * math.log(2.0)
    )
    return phi - m * m + ent / beta


def free_energy(s: State, plan: ConvolutionPlan, beta: float, eps_log: float = EPS_LOG) -> float:
    """Bulk plus nonlocal interaction energy.

    The interaction ``1/2 int int J(x - x') (m(x) - m(x'))^2`` is expanded to
    ``int m^2 - int m (J * m)``, which is exact for the discrete sums because
    the sampled J is symmetric and sums to one.
    """
    ca = s.spec.cell_area
    m = s.m.data
    bulk = ca * float(free_energy_density(m, s.phi.data, beta, eps_log).sum())
    f_hat = plan.transform(s.m)
    jm = plan.apply(f_hat, Which.J, float(np.abs(m).max()))
    inter = ca * float((m * m).sum()) - ca * float((m * jm).sum())
    return bulk + inter


def interaction_energy_direct(m: np.ndarray, j_grid: np.ndarray, cell_area: float) -> float:
    """O(n^4) double sum of the interaction term; small grids only."""
    n = m.shape[0]
    total = 0.0
    for q in range(n):
        for p in range(n):
            shifted = np.roll(j_grid, (q, p), axis=(0, 1))  # J[x - x'] with x' = (q, p)
            total += float((shifted * (m - m[q, p]) ** 2).sum())
    return 0.5 * cell_area * cell_area * total


def bound_violations(s: State) -> tuple[float, float, float]:
    m = s.m.data
    phi = s.phi.data
    return (
        float(max(0.0, (np.abs(m) - phi).max())),
        float(max(0.0, (phi - 1.0).max())),
        float(max(0.0, (-phi).max())),
    )


def mass_balance_residual(prev: State, nxt: State, dt: float, model: EvaporationModel):
    ca = prev.spec.cell_area
    dm = ca * abs(float(nxt.m.data.sum()) - float(prev.m.data.sum()))
    src = float(evaporation_field(model, prev.phi.data).sum())
    dphi = ca * abs(float(nxt.phi.data.sum()) - float(prev.phi.data.sum()) - dt * src)
    return dm, dphi


def diagnostics_row(s: State, s0: State, plan: ConvolutionPlan, beta: float) -> DiagnosticsRow:
    ca = s.spec.cell_area
    l1m, l1p = scaled_l1(s, s0)
    vm, vhi, vlo = bound_violations(s)
    return DiagnosticsRow(
        step=s.step,
        time=s.time,
        solvent_ratio=solvent_ratio(s),
        l1_m_scaled=l1m,
        l1_phi_scaled=l1p,
        spin_balance=spin_balance(s),
        free_energy=free_energy(s, plan, beta) if beta > 0 else float("nan"),
        mass_m=ca * float(s.m.data.sum()),
        mass_phi=ca * float(s.phi.data.sum()),
        viol_m_phi=vm,
        viol_phi_hi=vhi,
        viol_phi_lo=vlo,
    )
