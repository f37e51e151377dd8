"""Deterministic synthesis of initial data, forcing shapes and test fields.

Random fields are band-limited (inside the 2/3 dealias band), zero-mean and
built from per-index child generators, so a family of ``count`` members is a
prefix of any longer family with the same seed.
"""

from __future__ import annotations

import math

import numpy as np

from .fields import (
    Grid,
    PHYSICAL,
    ScalarField,
    SPECTRAL,
    VectorField,
    leray_project,
)


def rng_stream(seed: int, index: int) -> np.random.Generator:
    """Child generator for member ``index`` of a seeded family."""
    return np.random.default_rng([int(seed), int(index)])


def random_scalar(
    grid: Grid, rng: np.random.Generator, decay: float = 3.0, amplitude: float = 1.0
) -> ScalarField:
    """Zero-mean random field with spectrum ~ (1 + |k|^2)^(-decay/2), sup-normalized."""
    white = rng.standard_normal(grid.shape)
    fh = np.fft.fftn(white, norm="ortho")
    mode_sq = sum(m * m for m in grid.mode_index)
    fh *= (1.0 + mode_sq) ** (-decay / 2.0)
    fh *= grid.dealias_mask
    fh[grid.origin] = 0.0
    f = np.fft.ifftn(fh, norm="ortho").real
    peak = float(np.max(np.abs(f)))
    if peak > 0:
        f = f * (amplitude / peak)
    return ScalarField(grid, f, PHYSICAL, zero_mean=True)


def random_vector(
    grid: Grid, rng: np.random.Generator, decay: float = 3.0, amplitude: float = 1.0
) -> VectorField:
    return VectorField(
        tuple(random_scalar(grid, rng, decay, amplitude) for _ in range(grid.dim))
    )


def random_div_free(
    grid: Grid, rng: np.random.Generator, decay: float = 3.0, amplitude: float = 1.0
) -> VectorField:
    """Leray projection of a random vector field, sup-normalized."""
    u = leray_project(random_vector(grid, rng, decay).to_spectral())
    peak = float(np.max(u.magnitude()))
    if peak > 0:
        u = u * (amplitude / peak)
    return u


def single_mode_scalar(
    grid: Grid, mode: tuple[int, ...], amplitude: float = 1.0, phase: float = 0.0
) -> ScalarField:
    """amplitude * sin(k.x + phase) for the integer mode vector."""
    if len(mode) != grid.dim:
        raise ValueError(f"mode must have {grid.dim} entries, got {len(mode)}")
    coords = grid.coordinates()
    arg = sum(
        (2.0 * math.pi / grid.length) * m * x for m, x in zip(mode, coords)
    )
    f = amplitude * np.sin(arg + phase)
    return ScalarField(grid, f, PHYSICAL, zero_mean=any(mode))


def _perpendicular(mode: tuple[int, ...]) -> np.ndarray:
    k = np.asarray(mode, dtype=np.float64)
    if np.all(k == 0):
        raise ValueError("mode must be nonzero")
    if k.size == 2:
        e = np.array([-k[1], k[0]])
    else:
        axis = np.zeros(3)
        axis[int(np.argmin(np.abs(k)))] = 1.0
        e = np.cross(k, axis)
    return e / np.linalg.norm(e)


def single_mode_div_free(
    grid: Grid, mode: tuple[int, ...], amplitude: float = 1.0, phase: float = 0.0
) -> VectorField:
    """Divergence-free single Fourier mode: e * sin(k.x), with e orthogonal to k."""
    e = _perpendicular(mode)
    base = single_mode_scalar(grid, mode, 1.0, phase)
    return VectorField(tuple(base * float(amplitude * ei) for ei in e))


def taylor_green(grid: Grid, amplitude: float = 1.0) -> VectorField:
    """Classical Taylor-Green vortex (2-D pair or 3-D stack), exactly solenoidal."""
    c = 2.0 * math.pi / grid.length
    coords = grid.coordinates()
    if grid.dim == 2:
        x, y = coords
        comps = (
            amplitude * np.sin(c * x) * np.cos(c * y),
            -amplitude * np.cos(c * x) * np.sin(c * y),
        )
    else:
        x, y, z = coords
        comps = (
            amplitude * np.sin(c * x) * np.cos(c * y) * np.cos(c * z),
            -amplitude * np.cos(c * x) * np.sin(c * y) * np.cos(c * z),
            np.zeros(grid.shape),
        )
    return VectorField.from_arrays(grid, comps, PHYSICAL, zero_mean=True)


def radial_power(grid: Grid, p: float, offset_cells: float = 0.5) -> ScalarField:
    """|x - x0|^(-dim/p) with the pole shifted off the lattice by ``offset_cells``.

    This is the canonical member of weak-L^p that escapes L^p: its weak norm
    stays bounded under refinement while the strong norm diverges.
    """
    if not p >= 1.0:
        raise ValueError(f"p must satisfy p >= 1, got {p}")
    coords = grid.coordinates()
    center = grid.length / 2.0 + offset_cells * grid.dx
    r_sq = np.zeros(grid.shape)
    for x in coords:
        d = np.abs(x - center)
        d = np.minimum(d, grid.length - d)  # periodic distance
        r_sq += d * d
    f = np.sqrt(r_sq) ** (-grid.dim / p)
    return ScalarField(grid, f, PHYSICAL)


_SEED_MODES_2D = ((1, 0), (0, 1), (1, 1), (2, 1))
_SEED_MODES_3D = ((1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 1, 0))


def calibration_family(
    grid: Grid, count: int, seed: int
) -> list[tuple[VectorField, ScalarField]]:
    """Family of (divergence-free velocity, zero-mean scalar) pairs.

    The first members are pure single modes; the rest draw random spectra
    with cycling decay rates.  Member i depends only on (seed, i), so longer
    families with the same seed extend shorter ones.
    """
    if count < 1:
        raise ValueError("count must be positive")
    modes = _SEED_MODES_2D if grid.dim == 2 else _SEED_MODES_3D
    family = []
    for i in range(count):
        if i < len(modes):
            u = single_mode_div_free(grid, modes[i])
            th = single_mode_scalar(grid, modes[(i + 1) % len(modes)])
        else:
            rng = rng_stream(seed, i)
            decay = 2.0 + (i % 3)
            u = random_div_free(grid, rng, decay=decay)
            th = random_scalar(grid, rng, decay=decay)
        family.append((u, th))
    return family
