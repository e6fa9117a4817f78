"""Hot loops: the periodic five-point update and the direct convolution.

Every kernel has a numba implementation and a pure-numpy twin that performs
the same floating-point operations in the same order, so the two backends
agree bitwise. The backend is picked once at import time:

    NLPS_BACKEND=numpy   force the numpy path
    NLPS_BACKEND=numba   require numba (ImportError if missing)

Unset means numba when importable, numpy otherwise.
"""

from __future__ import annotations

import os

import numpy as np

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False


def _select_backend() -> str:
    want = os.environ.get("NLPS_BACKEND", "").strip().lower()
    if want in ("", "auto"):
        return "numba" if HAVE_NUMBA else "numpy"
    if want == "numpy":
        return "numpy"
    if want == "numba":
        if not HAVE_NUMBA:
            raise ImportError("NLPS_BACKEND=numba but numba is not installed")
        return "numba"
    raise ValueError(f"NLPS_BACKEND must be 'numba' or 'numpy', got {want!r}")


BACKEND = _select_backend()


# ---------------------------------------------------------------- numpy path


def _east(u):
    return np.roll(u, -1, axis=1)


def _west(u):
    return np.roll(u, 1, axis=1)


def _north(u):
    return np.roll(u, -1, axis=0)


def _south(u):
    return np.roll(u, 1, axis=0)


def _evap_numpy(phi, alpha):
    inside = (phi >= 0.0) & (phi <= 1.0)
    return np.where(inside, alpha * (1.0 - phi), 0.0)


def explicit_update_numpy(m, phi, jx, jy, dt, inv_dx2, beta_over_dx, alpha):
    qmx = (phi - m * m) * jx
    qmy = (phi - m * m) * jy
    qpx = m * (1.0 - phi) * jx
    qpy = m * (1.0 - phi) * jy

    lap_m = (_east(m) - 2.0 * m + _west(m)) + (_north(m) - 2.0 * m + _south(m))
    div_m = (_east(qmx) - _west(qmx)) + (_north(qmy) - _south(qmy))
    lap_p = (_east(phi) - 2.0 * phi + _west(phi)) + (_north(phi) - 2.0 * phi + _south(phi))
    div_p = (_east(qpx) - _west(qpx)) + (_north(qpy) - _south(qpy))

    m_new = m + dt * (lap_m * inv_dx2 - div_m * beta_over_dx)
    phi_new = phi + dt * (lap_p * inv_dx2 - div_p * beta_over_dx + _evap_numpy(phi, alpha))
    return m_new, phi_new


def fd_update_numpy(base, u, qx, qy, src, dt, inv_dx2, beta_over_dx):
    lap = (_east(u) - 2.0 * u + _west(u)) + (_north(u) - 2.0 * u + _south(u))
    div = (_east(qx) - _west(qx)) + (_north(qy) - _south(qy))
    return base + dt * (lap * inv_dx2 - div * beta_over_dx + src)


def direct_convolve_numpy(f, k, cell_area):
    n = f.shape[0]
    out = np.zeros((n, n))
    for q in range(n):
        for p in range(n):
            out += np.roll(k, (q, p), axis=(0, 1)) * f[q, p]
    return out * cell_area


# ---------------------------------------------------------------- numba path

if HAVE_NUMBA:

    @numba.njit(cache=True)
    def _evap_scalar(r, alpha):
        if r >= 0.0 and r <= 1.0:
            return alpha * (1.0 - r)
        return 0.0

    @numba.njit(cache=True)
    def explicit_update_numba(m, phi, jx, jy, dt, inv_dx2, beta_over_dx, alpha):
        n = m.shape[0]
        qmx = np.empty_like(m)
        qmy = np.empty_like(m)
        qpx = np.empty_like(m)
        qpy = np.empty_like(m)
        for j in range(n):
            for i in range(n):
                a = phi[j, i] - m[j, i] * m[j, i]
                b = m[j, i] * (1.0 - phi[j, i])
                qmx[j, i] = a * jx[j, i]
                qmy[j, i] = a * jy[j, i]
                qpx[j, i] = b * jx[j, i]
                qpy[j, i] = b * jy[j, i]

        m_new = np.empty_like(m)
        phi_new = np.empty_like(m)
        for j in range(n):
            jn = j + 1 if j + 1 < n else 0
            js = j - 1 if j > 0 else n - 1
            for i in range(n):
                ie = i + 1 if i + 1 < n else 0
                iw = i - 1 if i > 0 else n - 1
                mc = m[j, i]
                pc = phi[j, i]
                lap_m = (m[j, ie] - 2.0 * mc + m[j, iw]) + (m[jn, i] - 2.0 * mc + m[js, i])
                div_m = (qmx[j, ie] - qmx[j, iw]) + (qmy[jn, i] - qmy[js, i])
                lap_p = (phi[j, ie] - 2.0 * pc + phi[j, iw]) + (phi[jn, i] - 2.0 * pc + phi[js, i])
                div_p = (qpx[j, ie] - qpx[j, iw]) + (qpy[jn, i] - qpy[js, i])
                m_new[j, i] = mc + dt * (lap_m * inv_dx2 - div_m * beta_over_dx)
                phi_new[j, i] = pc + dt * (
                    lap_p * inv_dx2 - div_p * beta_over_dx + _evap_scalar(pc, alpha)
                )
        return m_new, phi_new

    @numba.njit(cache=True)
    def fd_update_numba(base, u, qx, qy, src, dt, inv_dx2, beta_over_dx):
        n = u.shape[0]
        out = np.empty_like(u)
        for j in range(n):
            jn = j + 1 if j + 1 < n else 0
            js = j - 1 if j > 0 else n - 1
            for i in range(n):
                ie = i + 1 if i + 1 < n else 0
                iw = i - 1 if i > 0 else n - 1
                uc = u[j, i]
                lap = (u[j, ie] - 2.0 * uc + u[j, iw]) + (u[jn, i] - 2.0 * uc + u[js, i])
                div = (qx[j, ie] - qx[j, iw]) + (qy[jn, i] - qy[js, i])
                out[j, i] = base[j, i] + dt * (lap * inv_dx2 - div * beta_over_dx + src[j, i])
        return out

    @numba.njit(cache=True)
    def direct_convolve_numba(f, k, cell_area):
        n = f.shape[0]
        out = np.zeros((n, n))
        for q in range(n):
            for p in range(n):
                fv = f[q, p]
                for j in range(n):
                    kj = (j - q) % n
                    for i in range(n):
                        out[j, i] += k[kj, (i - p) % n] * fv
        for j in range(n):
            for i in range(n):
                out[j, i] = out[j, i] * cell_area
        return out


if BACKEND == "numba":
    explicit_update = explicit_update_numba
    fd_update = fd_update_numba
    direct_convolve = direct_convolve_numba
else:
    explicit_update = explicit_update_numpy
    fd_update = fd_update_numpy
    direct_convolve = direct_convolve_numpy
