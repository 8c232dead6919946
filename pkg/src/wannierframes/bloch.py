"""Discrete Bloch transform on a finite periodic supercell.

Cells are labelled by the quotient group Z_{M_1} x ... x Z_{M_n}; the dual
grid carries the momenta k = sum_i (m_i / M_i) b_i with the same index set.
The forward transform is

    F(k) = sum_gamma f(gamma) e^{-i k . gamma},

and the inverse carries the uniform weight 1 / (M_1 ... M_n):

    f(gamma) = sum_k weight * F(k) e^{+i k . gamma}.

Because (b_i, a_j) = 2 pi delta_ij, the pairing k . gamma reduces to
2 pi sum_i m_i gamma_i / M_i and the pair is exactly a multidimensional DFT.
The default evaluation contracts explicit phase matrices axis by axis; the
optional "fft" method must agree with it to 1e-12 and exists only as the
fast path.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from .errors import SizeMismatch
from .models import Lattice


@dataclasses.dataclass(frozen=True, eq=False)
class KGrid:
    """Uniform momentum grid dual to a finite supercell.

    Invariant by construction: the grid is closed under negation modulo the
    dual lattice (-m mod M is again a grid index).
    """

    lattice: Lattice
    sizes: tuple[int, ...]

    def __post_init__(self):
        sizes = tuple(int(m) for m in self.sizes)
        object.__setattr__(self, "sizes", sizes)
        if len(sizes) != self.lattice.dim:
            raise SizeMismatch(
                f"grid has {len(sizes)} axes but the lattice dimension is "
                f"{self.lattice.dim}"
            )
        if any(m < 1 for m in sizes):
            raise SizeMismatch(f"grid sizes must be positive, got {sizes}")

    @property
    def dim(self) -> int:
        return len(self.sizes)

    @property
    def npoints(self) -> int:
        return math.prod(self.sizes)

    @property
    def weight(self) -> float:
        """Quadrature weight of one grid point in the inverse transform."""
        return 1.0 / self.npoints

    def reduced(self) -> np.ndarray:
        """Fractional coordinates m_i / M_i, shape sizes + (n,)."""
        axes = [np.arange(m) / m for m in self.sizes]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack(mesh, axis=-1)

    def points(self) -> np.ndarray:
        """Cartesian momenta, shape sizes + (n,)."""
        return self.reduced() @ self.lattice.dual_basis


@dataclasses.dataclass(eq=False)
class CellField:
    """A fiber-valued function on the supercell: values shape sizes + (N,)."""

    sizes: tuple[int, ...]
    values: np.ndarray

    def __post_init__(self):
        self.sizes = tuple(int(m) for m in self.sizes)
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape[: len(self.sizes)] != self.sizes:
            raise SizeMismatch(
                f"values shape {self.values.shape} does not start with sizes {self.sizes}"
            )

    @property
    def fiber_dim(self) -> int:
        return self.values.shape[-1]

    def norm_sq(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2))


@dataclasses.dataclass(eq=False)
class KField:
    """A fiber-valued function on the momentum grid: values shape sizes + (N,)."""

    grid: KGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape[: self.grid.dim] != self.grid.sizes:
            raise SizeMismatch(
                f"values shape {self.values.shape} does not start with grid sizes "
                f"{self.grid.sizes}"
            )

    @property
    def fiber_dim(self) -> int:
        return self.values.shape[-1]

    def norm_sq(self) -> float:
        """Weighted squared norm sum_k weight * |F(k)|^2."""
        return float(self.grid.weight * np.sum(np.abs(self.values) ** 2))


def _dft_axes(values: np.ndarray, sizes: tuple[int, ...], sign: int, method: str) -> np.ndarray:
    """Apply the phase sum e^{sign * 2 pi i m gamma / M} over each cell axis.

    sign = -1 is the forward transform, sign = +1 the inverse (which also
    divides by each M).  Trailing axes (fiber components, section indices)
    are carried along untouched.
    """
    if method == "fft":
        axes = tuple(range(len(sizes)))
        if sign < 0:
            return np.fft.fftn(values, axes=axes)
        return np.fft.ifftn(values, axes=axes)
    if method != "direct":
        raise ValueError(f"unknown transform method '{method}'")
    out = np.asarray(values, dtype=complex)
    for axis, m in enumerate(sizes):
        idx = np.arange(m)
        phase = np.exp(sign * 2.0j * np.pi * np.outer(idx, idx) / m)
        if sign > 0:
            phase = phase / m
        out = np.moveaxis(np.tensordot(phase, out, axes=([1], [axis])), 0, axis)
    return out


def forward_transform(field: CellField, grid: KGrid, method: str = "direct") -> KField:
    """Transform a cell field to its momentum representation on ``grid``."""
    if field.sizes != grid.sizes:
        raise SizeMismatch(
            f"cell field sizes {field.sizes} do not match grid sizes {grid.sizes}"
        )
    return KField(grid=grid, values=_dft_axes(field.values, grid.sizes, -1, method))


def inverse_transform(field: KField, method: str = "direct") -> CellField:
    """Transform a momentum field back to the supercell."""
    return CellField(
        sizes=field.grid.sizes,
        values=_dft_axes(field.values, field.grid.sizes, +1, method),
    )


def random_cell_field(sizes: tuple[int, ...], fiber_dim: int, rng: np.random.Generator) -> CellField:
    """Complex Gaussian field, the standard test vector for norm identities."""
    shape = tuple(sizes) + (fiber_dim,)
    values = rng.standard_normal(shape) + 1.0j * rng.standard_normal(shape)
    return CellField(sizes=tuple(sizes), values=values)
