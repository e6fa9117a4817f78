"""Periodic convolution with the kernel grids.

The integral convolution ``(K * f)(x) = int K(x - y) f(y) dy`` on the torus is
approximated by the Riemann sum ``cell_area * sum_y K[x - y] f[y]``, evaluated
with a 2D FFT (:func:`convolve`) or by brute force (:func:`convolve_direct`).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import _kernels
from .errors import KernelSymmetryError, SpecMismatchError
from .grid import Field, GridSpec
from .kernel import KernelGrids

__all__ = ["Which", "ConvolutionPlan", "plan_convolution", "convolve", "convolve_direct"]

IMAG_TOL = 1e-10


class Which(str, Enum):
    J = "J"
    DJX = "DJX"
    DJY = "DJY"


@dataclass(frozen=True, eq=False)
class ConvolutionPlan:
    spec: GridSpec
    spectra: dict
    kernels: KernelGrids
    scale: float
    l1: dict

    def spectrum(self, which: Which) -> np.ndarray:
        return self.spectra[Which(which)]

    def _check(self, f: Field):
        if f.spec != self.spec:
            raise SpecMismatchError(
                f"plan is for n={self.spec.n}, L={self.spec.length}; "
                f"field has n={f.spec.n}, L={f.spec.length}"
            )

    def transform(self, f: Field) -> np.ndarray:
        self._check(f)
        return np.fft.fft2(f.data)

    def apply(self, f_hat: np.ndarray, which: Which, ref_scale: float) -> np.ndarray:
        """Inverse-transform ``f_hat * spectrum`` and return the scaled real part."""
        z = np.fft.ifft2(f_hat * self.spectrum(which))
        imag = np.abs(z.imag).max()
        # max|f| * l1(kernel) bounds the unscaled output, so the check stays
        # meaningful when the output itself vanishes (e.g. grad J * const)
        bound = IMAG_TOL * max(ref_scale * self.l1[Which(which)], np.abs(z.real).max())
        if imag > bound:
            raise KernelSymmetryError(
                f"imaginary residue {imag:.3e} exceeds {bound:.3e} for {Which(which).value}"
            )
        return self.scale * z.real

    def gradient(self, f: Field) -> tuple[np.ndarray, np.ndarray]:
        """``(dJ/dx * f, dJ/dy * f)`` with a single forward transform."""
        f_hat = self.transform(f)
        ref = np.abs(f.data).max()
        return self.apply(f_hat, Which.DJX, ref), self.apply(f_hat, Which.DJY, ref)


def plan_convolution(kg: KernelGrids) -> ConvolutionPlan:
    spectra = {
        Which.J: np.fft.fft2(kg.j_grid.data),
        Which.DJX: np.fft.fft2(kg.djx_grid.data),
        Which.DJY: np.fft.fft2(kg.djy_grid.data),
    }
    for s in spectra.values():
        s.setflags(write=False)
    l1 = {
        Which.J: float(np.abs(kg.j_grid.data).sum()),
        Which.DJX: float(np.abs(kg.djx_grid.data).sum()),
        Which.DJY: float(np.abs(kg.djy_grid.data).sum()),
    }
    return ConvolutionPlan(kg.spec, spectra, kg, kg.spec.cell_area, l1)


def convolve(plan: ConvolutionPlan, f: Field, which: Which | str) -> Field:
    f_hat = plan.transform(f)
    return Field(plan.spec, plan.apply(f_hat, Which(which), np.abs(f.data).max()))


def convolve_direct(f: Field, kernel: Field) -> Field:
    """Brute-force O(n^4) circular convolution, the oracle for :func:`convolve`."""
    if f.spec != kernel.spec:
        raise SpecMismatchError("field and kernel are defined on different grids")
    out = _kernels.direct_convolve(f.data, kernel.data, f.spec.cell_area)
    return Field(f.spec, out)
