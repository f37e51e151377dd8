"""Field algebra on a uniform periodic box.

Scalar and vector fields carry a dual physical/spectral representation under
a unitary FFT convention (``norm="ortho"``), so the discrete Parseval
identity holds with a single cell-volume factor.  Differential operators act
mode-wise in spectral space.  Quadratic products are formed in physical space
with 2/3-rule dealiasing applied both to the inputs and to the product, which
keeps the advective pairing ((u.grad)v, v) skew-symmetric to rounding for
divergence-free u.

All field objects are immutable; every operation returns a new field.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

PHYSICAL = "physical"
SPECTRAL = "spectral"

#: flag attached by :func:`stokes_apply` when the input is not divergence-free
DIVERGENCE_FLAG = "input_divergence_above_tolerance"

_STOKES_DIV_TOL = 1e-8


class GridMismatchError(ValueError):
    """An operation mixed fields that live on different grids."""


def _same_grid(*fields):
    grid = fields[0].grid
    for other in fields[1:]:
        if other.grid != grid:
            raise GridMismatchError(
                f"fields live on different grids: {grid} vs {other.grid}"
            )
    return grid


@dataclass(frozen=True)
class Grid:
    """Uniform n^dim sampling of the periodic box [0, L)^dim.

    n must be a power of two (>= 8) so transforms stay fast and cell volumes
    are exact binary fractions of the box volume.
    """

    dim: int
    n: int
    length: float = 2.0 * math.pi

    def __post_init__(self) -> None:
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim}")
        if self.n < 8 or (self.n & (self.n - 1)) != 0:
            raise ValueError(f"n must be a power of two >= 8, got {self.n}")
        if not (math.isfinite(self.length) and self.length > 0.0):
            raise ValueError(f"length must be positive and finite, got {self.length}")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dim

    @property
    def dx(self) -> float:
        return self.length / self.n

    @property
    def cell_volume(self) -> float:
        return self.dx**self.dim

    @property
    def volume(self) -> float:
        return self.length**self.dim

    @property
    def origin(self) -> tuple[int, ...]:
        return (0,) * self.dim

    @cached_property
    def mode_index(self) -> tuple[np.ndarray, ...]:
        """Integer Fourier mode indices along each axis, broadcast to full shape."""
        idx = np.fft.fftfreq(self.n, d=1.0 / self.n)
        axes = np.meshgrid(*([idx] * self.dim), indexing="ij")
        for a in axes:
            a.setflags(write=False)
        return tuple(axes)

    @cached_property
    def wavevectors(self) -> tuple[np.ndarray, ...]:
        scale = 2.0 * math.pi / self.length
        ks = tuple(scale * m for m in self.mode_index)
        for k in ks:
            k.setflags(write=False)
        return ks

    @cached_property
    def k_squared(self) -> np.ndarray:
        ksq = sum(k * k for k in self.wavevectors)
        ksq.setflags(write=False)
        return ksq

    @cached_property
    def inv_k_squared(self) -> np.ndarray:
        """1/|k|^2 with the zero mode mapped to 0 (Leray / Poisson use)."""
        ksq = self.k_squared.copy()
        ksq[self.origin] = 1.0
        inv = 1.0 / ksq
        inv[self.origin] = 0.0
        inv.setflags(write=False)
        return inv

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """2/3-rule mask: keep modes with |index_j| <= n/3 on every axis."""
        cutoff = self.n / 3.0
        mask = np.ones(self.shape, dtype=bool)
        for m in self.mode_index:
            mask &= np.abs(m) <= cutoff
        mask.setflags(write=False)
        return mask

    def coordinates(self) -> tuple[np.ndarray, ...]:
        """Node coordinates x_i = i * dx along each axis, broadcast to full shape."""
        x = np.arange(self.n) * self.dx
        return tuple(np.meshgrid(*([x] * self.dim), indexing="ij"))


@dataclass(frozen=True, eq=False)
class ScalarField:
    """A scalar field: physical samples or spectral coefficients on a grid.

    ``zero_mean`` promises an exactly vanishing zero-frequency coefficient.
    Spectral construction validates the promise; physical-space data is
    normalized on the next transform.
    """

    grid: Grid
    data: np.ndarray
    rep: str = PHYSICAL
    zero_mean: bool = False

    def __post_init__(self) -> None:
        if self.rep not in (PHYSICAL, SPECTRAL):
            raise ValueError(f"unknown representation tag {self.rep!r}")
        dtype = np.float64 if self.rep == PHYSICAL else np.complex128
        data = np.asarray(self.data, dtype=dtype)
        if data.shape != self.grid.shape:
            raise ValueError(
                f"data shape {data.shape} does not match grid shape {self.grid.shape}"
            )
        if self.zero_mean and self.rep == SPECTRAL and data[self.grid.origin] != 0:
            raise ValueError("zero_mean spectral field has a nonzero origin coefficient")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    def to_spectral(self) -> "ScalarField":
        if self.rep == SPECTRAL:
            return self
        fh = np.fft.fftn(self.data, norm="ortho")
        if self.zero_mean:
            fh[self.grid.origin] = 0.0
        return ScalarField(self.grid, fh, SPECTRAL, self.zero_mean)

    def to_physical(self) -> "ScalarField":
        if self.rep == PHYSICAL:
            return self
        f = np.fft.ifftn(self.data, norm="ortho").real
        return ScalarField(self.grid, f, PHYSICAL, self.zero_mean)

    def with_zero_mean(self) -> "ScalarField":
        """Project out the mean and set the zero-mean flag."""
        fh = self.to_spectral().data.copy()
        fh[self.grid.origin] = 0.0
        out = ScalarField(self.grid, fh, SPECTRAL, True)
        return out.to_physical() if self.rep == PHYSICAL else out

    def mean(self) -> float:
        if self.rep == PHYSICAL:
            return float(self.data.mean())
        return float(self.data[self.grid.origin].real) / self.grid.n ** (self.grid.dim / 2)

    def _binary(self, other: "ScalarField", op) -> "ScalarField":
        _same_grid(self, other)
        if other.rep != self.rep:
            other = other.to_spectral() if self.rep == SPECTRAL else other.to_physical()
        return ScalarField(
            self.grid, op(self.data, other.data), self.rep, self.zero_mean and other.zero_mean
        )

    def __add__(self, other: "ScalarField") -> "ScalarField":
        return self._binary(other, np.add)

    def __sub__(self, other: "ScalarField") -> "ScalarField":
        return self._binary(other, np.subtract)

    def __mul__(self, factor: float) -> "ScalarField":
        return ScalarField(self.grid, self.data * factor, self.rep, self.zero_mean)

    __rmul__ = __mul__

    def __neg__(self) -> "ScalarField":
        return self * -1.0


@dataclass(frozen=True, eq=False)
class VectorField:
    """dim scalar components sharing one grid and one representation."""

    components: tuple[ScalarField, ...]
    flags: frozenset = frozenset()

    def __post_init__(self) -> None:
        comps = tuple(self.components)
        grid = _same_grid(*comps)
        if len(comps) != grid.dim:
            raise ValueError(f"expected {grid.dim} components, got {len(comps)}")
        if len({c.rep for c in comps}) != 1:
            raise ValueError("vector components must share a representation")
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "flags", frozenset(self.flags))

    @classmethod
    def from_arrays(cls, grid, arrays, rep=PHYSICAL, zero_mean=False) -> "VectorField":
        return cls(tuple(ScalarField(grid, a, rep, zero_mean) for a in arrays))

    @property
    def grid(self) -> Grid:
        return self.components[0].grid

    @property
    def dim(self) -> int:
        return self.grid.dim

    @property
    def rep(self) -> str:
        return self.components[0].rep

    @property
    def zero_mean(self) -> bool:
        return all(c.zero_mean for c in self.components)

    def to_spectral(self) -> "VectorField":
        return VectorField(tuple(c.to_spectral() for c in self.components), self.flags)

    def to_physical(self) -> "VectorField":
        return VectorField(tuple(c.to_physical() for c in self.components), self.flags)

    def with_zero_mean(self) -> "VectorField":
        return VectorField(tuple(c.with_zero_mean() for c in self.components), self.flags)

    def with_flags(self, *extra: str) -> "VectorField":
        return VectorField(self.components, self.flags | set(extra))

    def magnitude(self) -> np.ndarray:
        """Pointwise Euclidean magnitude in physical space."""
        phys = self.to_physical()
        return np.sqrt(sum(c.data**2 for c in phys.components))

    def __add__(self, other: "VectorField") -> "VectorField":
        return VectorField(tuple(a + b for a, b in zip(self.components, other.components)))

    def __sub__(self, other: "VectorField") -> "VectorField":
        return VectorField(tuple(a - b for a, b in zip(self.components, other.components)))

    def __mul__(self, factor: float) -> "VectorField":
        return VectorField(tuple(c * factor for c in self.components), self.flags)

    __rmul__ = __mul__

    def __neg__(self) -> "VectorField":
        return self * -1.0


Field = ScalarField | VectorField


def to_spectral(f: Field) -> Field:
    return f.to_spectral()


def to_physical(f: Field) -> Field:
    return f.to_physical()


def _spec(f: ScalarField) -> np.ndarray:
    return f.to_spectral().data


def gradient(f: ScalarField) -> VectorField:
    """Spectral gradient: component j is ifft(i k_j fhat)."""
    fh = _spec(f)
    grid = f.grid
    comps = tuple(
        ScalarField(grid, 1j * k * fh, SPECTRAL, True) for k in grid.wavevectors
    )
    return VectorField(comps)


def divergence(v: VectorField) -> ScalarField:
    grid = v.grid
    out = sum(1j * k * _spec(c) for k, c in zip(grid.wavevectors, v.components))
    return ScalarField(grid, out, SPECTRAL, True)


def laplacian(f: ScalarField) -> ScalarField:
    grid = f.grid
    return ScalarField(grid, -grid.k_squared * _spec(f), SPECTRAL, True)


def laplacian_vector(v: VectorField) -> VectorField:
    return VectorField(tuple(laplacian(c) for c in v.components), v.flags)


def dealias(f: Field) -> Field:
    """Zero every mode outside the 2/3 band."""
    if isinstance(f, VectorField):
        return VectorField(tuple(dealias(c) for c in f.components), f.flags)
    grid = f.grid
    return ScalarField(grid, grid.dealias_mask * _spec(f), SPECTRAL, f.zero_mean)


def leray_project(v: VectorField) -> VectorField:
    """Per-mode projection onto divergence-free fields: vhat -> (I - k k^T/|k|^2) vhat.

    The zero mode is left untouched (the projector is the identity there).
    """
    grid = v.grid
    vh = [_spec(c) for c in v.components]
    k_dot_v = sum(k * h for k, h in zip(grid.wavevectors, vh))
    coeff = k_dot_v * grid.inv_k_squared
    comps = tuple(
        ScalarField(grid, h - k * coeff, SPECTRAL, c.zero_mean)
        for h, k, c in zip(vh, grid.wavevectors, v.components)
    )
    return VectorField(comps)


def stokes_apply(u: VectorField) -> VectorField:
    """-P(laplacian u); equals -laplacian u for divergence-free input.

    When the input divergence exceeds 1e-8 relative to the gradient norm the
    result carries :data:`DIVERGENCE_FLAG` in its ``flags``.
    """
    grid = u.grid
    div_norm = l2_norm(divergence(u))
    scale = grad_l2(u)
    out = leray_project(
        VectorField(
            tuple(
                ScalarField(grid, grid.k_squared * _spec(c), SPECTRAL, c.zero_mean)
                for c in u.components
            )
        )
    )
    if div_norm > _STOKES_DIV_TOL * max(scale, 1e-300):
        out = out.with_flags(DIVERGENCE_FLAG)
    return out


def _dealiased_physical(v: VectorField) -> list[np.ndarray]:
    grid = v.grid
    mask = grid.dealias_mask
    return [np.fft.ifftn(mask * _spec(c), norm="ortho").real for c in v.components]


def _advect(u_phys: list[np.ndarray], f: ScalarField) -> np.ndarray:
    """(u.grad)f with dealiased inputs and band-truncated product (spectral)."""
    grid = f.grid
    mask = grid.dealias_mask
    fh = mask * _spec(f)
    out = np.zeros(grid.shape)
    for uj, kj in zip(u_phys, grid.wavevectors):
        out += uj * np.fft.ifftn(1j * kj * fh, norm="ortho").real
    return mask * np.fft.fftn(out, norm="ortho")


def convective_scalar(u: VectorField, f: ScalarField) -> ScalarField:
    """(u.grad)f, formed in physical space after 2/3-rule dealiasing."""
    grid = _same_grid(u, f)
    return ScalarField(grid, _advect(_dealiased_physical(u), f), SPECTRAL)


def convective_vector(u: VectorField, v: VectorField) -> VectorField:
    """(u.grad)v componentwise, formed in physical space after dealiasing."""
    grid = _same_grid(u, v)
    u_phys = _dealiased_physical(u)
    comps = tuple(
        ScalarField(grid, _advect(u_phys, c), SPECTRAL) for c in v.components
    )
    return VectorField(comps)


def inner_product(a: Field, b: Field) -> float:
    """Cell-volume-weighted L2 inner product; Parseval-consistent in either rep."""
    if isinstance(a, VectorField) != isinstance(b, VectorField):
        raise TypeError("cannot pair a scalar field with a vector field")
    if isinstance(a, VectorField):
        _same_grid(a, b)
        return sum(inner_product(x, y) for x, y in zip(a.components, b.components))
    grid = _same_grid(a, b)
    if a.rep != b.rep:
        a, b = a.to_spectral(), b.to_spectral()
    if a.rep == PHYSICAL:
        return float(grid.cell_volume * np.sum(a.data * b.data))
    return float(grid.cell_volume * np.sum(a.data * np.conj(b.data)).real)


def l2_norm(a: Field) -> float:
    if isinstance(a, VectorField):
        return math.sqrt(sum(l2_norm(c) ** 2 for c in a.components))
    total = np.sum(np.abs(a.data) ** 2) if a.rep == SPECTRAL else np.sum(a.data**2)
    return math.sqrt(a.grid.cell_volume * float(total))


def grad_l2(a: Field) -> float:
    """L2 norm of the gradient, evaluated as a spectral sum."""
    if isinstance(a, VectorField):
        return math.sqrt(sum(grad_l2(c) ** 2 for c in a.components))
    grid = a.grid
    total = float(np.sum(grid.k_squared * np.abs(_spec(a)) ** 2))
    return math.sqrt(grid.cell_volume * total)


def stokes_l2(u: VectorField) -> float:
    """L2 norm of -P(laplacian u)."""
    return l2_norm(stokes_apply(u))
