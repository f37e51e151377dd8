"""Time integration of the coupled velocity/temperature/concentration system.

The update is first-order IMEX: diffusion is integrated exactly per Fourier
mode through the factor exp(-nu |k|^2 dt), while advection, buoyancy and
forcing enter explicitly.  The velocity is Leray-projected after every
update and the zero modes of all three fields are pinned to zero (the
periodic proxy for wall-bounded data; this restores a Poincare inequality).

Blow-up is data, not an error: :func:`run` reports a termination reason
(``completed``, ``cfl_floor`` or ``nonfinite_field``) plus the last finite
gradient norms instead of crashing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .fields import (
    Grid,
    SPECTRAL,
    ScalarField,
    VectorField,
    _dealiased_physical,
    _advect,
    _same_grid,
    _spec,
    grad_l2,
    l2_norm,
    leray_project,
)
from .norms import WeightedSamples, lp_norm

CFL_COEFF_DEFAULT = 0.4
VELOCITY_FLOOR = 1e-12

REASON_COMPLETED = "completed"
REASON_CFL_FLOOR = "cfl_floor"
REASON_NONFINITE = "nonfinite_field"


class CFLViolationError(ValueError):
    """Requested time step exceeds the advective CFL limit."""


class BlowUpError(RuntimeError):
    """A field stopped being finite; carries the time and gradient norm."""

    def __init__(self, t: float, grad_u: float):
        super().__init__(f"nonfinite field at t={t} (|grad u| = {grad_u})")
        self.t = t
        self.grad_u = grad_u


@dataclass(frozen=True)
class PhysicsParams:
    """Viscosity, diffusivities, buoyancy coupling and gravity."""

    mu: float
    kappa1: float
    kappa2: float
    alpha: float = 0.0
    gravity: object = None  # constant vector (sequence) or VectorField

    def __post_init__(self) -> None:
        for name in ("mu", "kappa1", "kappa2"):
            value = getattr(self, name)
            if not value > 0:
                raise ValueError(f"{name} must be positive, got {value}")


def gravity_components(params: PhysicsParams, grid: Grid) -> Optional[list[np.ndarray]]:
    """Physical-space gravity components, or None when gravity is absent."""
    g = params.gravity
    if g is None:
        return None
    if isinstance(g, VectorField):
        if g.grid != grid:
            raise ValueError("gravity field lives on a different grid")
        return [c.data for c in g.to_physical().components]
    vec = np.asarray(g, dtype=np.float64)
    if vec.shape != (grid.dim,):
        raise ValueError(f"gravity vector must have {grid.dim} entries, got {vec.shape}")
    return [np.full(grid.shape, float(gi)) for gi in vec]


def gravity_l3_norm(params: PhysicsParams, grid: Grid) -> float:
    """L^3 spatial norm of |g| (time-independent gravity)."""
    comps = gravity_components(params, grid)
    if comps is None:
        return 0.0
    mag = np.sqrt(sum(c**2 for c in comps)).ravel()
    samples = WeightedSamples(mag, np.full(mag.size, grid.cell_volume))
    return lp_norm(samples, 3.0)


@dataclass(frozen=True, eq=False)
class SimState:
    """One snapshot (u, theta, phi, t) of the coupled system."""

    u: VectorField
    theta: ScalarField
    phi: ScalarField
    t: float = 0.0

    def __post_init__(self) -> None:
        _same_grid(self.u, self.theta, self.phi)

    @property
    def grid(self) -> Grid:
        return self.u.grid

    @classmethod
    def make(
        cls, u: VectorField, theta: ScalarField, phi: ScalarField, t: float = 0.0
    ) -> "SimState":
        """Canonicalize initial data: project u and pin all means to zero."""
        u = leray_project(u.with_zero_mean())
        return cls(u, theta.with_zero_mean(), phi.with_zero_mean(), t)

    @classmethod
    def zero(cls, grid: Grid, t: float = 0.0) -> "SimState":
        zero_scalar = ScalarField(
            grid, np.zeros(grid.shape, dtype=np.complex128), SPECTRAL, True
        )
        u = VectorField(tuple(zero_scalar for _ in range(grid.dim)))
        return cls(u, zero_scalar, zero_scalar, t)

    def is_finite(self) -> bool:
        arrays = [c.data for c in self.u.components] + [self.theta.data, self.phi.data]
        return all(np.all(np.isfinite(a)) for a in arrays)


@dataclass(frozen=True)
class Forcing:
    """Time-dependent sources: velocity (f), heat (ell) and solute (h)."""

    velocity: Optional[Callable[[float], VectorField]] = None
    heat: Optional[Callable[[float], ScalarField]] = None
    solute: Optional[Callable[[float], ScalarField]] = None

    @classmethod
    def none(cls) -> "Forcing":
        return cls()


@dataclass(frozen=True)
class SolverOptions:
    cfl: float = CFL_COEFF_DEFAULT
    max_dt: float = 1e-2
    min_dt: float = 1e-10
    sample_every: int = 10
    advection: bool = True


@dataclass(eq=False)
class RunResult:
    state: SimState
    steps: int
    reason: str
    last_finite: dict = field(default_factory=dict)


def cfl_dt(state: SimState, cfl_coeff: float = CFL_COEFF_DEFAULT) -> float:
    """Advective CFL limit: coeff * dx / max(|u|_max, floor)."""
    umax = float(np.max(state.u.magnitude(), initial=0.0))
    return cfl_coeff * state.grid.dx / max(umax, VELOCITY_FLOOR)


def _require_finite(state: SimState) -> None:
    if not state.is_finite():
        raise BlowUpError(state.t, grad_l2(state.u))


def _explicit_spectral(
    state: SimState, params: PhysicsParams, forcing: Forcing, advection: bool
) -> tuple[list[np.ndarray], np.ndarray, np.ndarray]:
    """Projected non-diffusive right-hand sides in spectral space."""
    grid = state.grid
    shape = grid.shape

    du = [np.zeros(shape, dtype=np.complex128) for _ in range(grid.dim)]
    dth = np.zeros(shape, dtype=np.complex128)
    dph = np.zeros(shape, dtype=np.complex128)

    if advection:
        u_phys = _dealiased_physical(state.u)
        for i, comp in enumerate(state.u.components):
            du[i] -= _advect(u_phys, comp)
        dth -= _advect(u_phys, state.theta)
        dph -= _advect(u_phys, state.phi)

    g_comps = gravity_components(params, grid)
    if params.alpha != 0.0 and g_comps is not None:
        buoy = state.theta.to_physical().data + state.phi.to_physical().data
        for i, g in enumerate(g_comps):
            du[i] += params.alpha * np.fft.fftn(buoy * g, norm="ortho")

    if forcing.velocity is not None:
        f = forcing.velocity(state.t)
        _same_grid(state.u, f)
        for i, comp in enumerate(f.components):
            du[i] += _spec(comp)
    if forcing.heat is not None:
        dth += _spec(forcing.heat(state.t))
    if forcing.solute is not None:
        dph += _spec(forcing.solute(state.t))

    # Leray projection of the combined velocity source.
    k_dot = sum(k * h for k, h in zip(grid.wavevectors, du))
    coeff = k_dot * grid.inv_k_squared
    du = [h - k * coeff for h, k in zip(du, grid.wavevectors)]
    return du, dth, dph


def rhs(
    state: SimState, params: PhysicsParams, forcing: Forcing, *, advection: bool = True
) -> tuple[VectorField, ScalarField, ScalarField]:
    """Full instantaneous right-hand side (explicit terms plus diffusion)."""
    _require_finite(state)
    grid = state.grid
    du, dth, dph = _explicit_spectral(state, params, forcing, advection)
    ksq = grid.k_squared
    du = [
        h - params.mu * ksq * _spec(c) for h, c in zip(du, state.u.components)
    ]
    dth = dth - params.kappa1 * ksq * _spec(state.theta)
    dph = dph - params.kappa2 * ksq * _spec(state.phi)
    du_field = VectorField(
        tuple(ScalarField(grid, h, SPECTRAL) for h in du)
    )
    return (
        du_field,
        ScalarField(grid, dth, SPECTRAL),
        ScalarField(grid, dph, SPECTRAL),
    )


def step(
    state: SimState,
    params: PhysicsParams,
    forcing: Forcing,
    dt: float,
    *,
    advection: bool = True,
    cfl_coeff: float = CFL_COEFF_DEFAULT,
) -> SimState:
    """One IMEX Euler step: exact diffusion factor, explicit everything else."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    limit = cfl_dt(state, cfl_coeff)
    if dt > limit * (1.0 + 1e-9):
        raise CFLViolationError(f"dt = {dt} exceeds the CFL limit {limit}")
    _require_finite(state)

    grid = state.grid
    ksq = grid.k_squared
    du, dth, dph = _explicit_spectral(state, params, forcing, advection)

    decay_u = np.exp(-params.mu * ksq * dt)
    new_u = [
        decay_u * (_spec(c) + dt * h) for c, h in zip(state.u.components, du)
    ]
    new_th = np.exp(-params.kappa1 * ksq * dt) * (_spec(state.theta) + dt * dth)
    new_ph = np.exp(-params.kappa2 * ksq * dt) * (_spec(state.phi) + dt * dph)

    # Projection after the update, then the zero-mean pin of the periodic proxy.
    k_dot = sum(k * h for k, h in zip(grid.wavevectors, new_u))
    coeff = k_dot * grid.inv_k_squared
    new_u = [h - k * coeff for h, k in zip(new_u, grid.wavevectors)]
    origin = grid.origin
    for h in new_u:
        h[origin] = 0.0
    new_th[origin] = 0.0
    new_ph[origin] = 0.0

    t_new = state.t + dt
    next_state = SimState(
        VectorField(tuple(ScalarField(grid, h, SPECTRAL, True) for h in new_u)),
        ScalarField(grid, new_th, SPECTRAL, True),
        ScalarField(grid, new_ph, SPECTRAL, True),
        t_new,
    )
    if not next_state.is_finite():
        raise BlowUpError(t_new, grad_l2(state.u))
    return next_state


def _norm_record(state: SimState) -> dict:
    return {
        "t": state.t,
        "grad_u": grad_l2(state.u),
        "grad_theta": grad_l2(state.theta),
        "grad_phi": grad_l2(state.phi),
    }


class TrajectoryRecorder:
    """Observer that stores every sampled state (fields are immutable)."""

    def __init__(self) -> None:
        self.states: list[SimState] = []

    def __call__(self, state: SimState) -> None:
        self.states.append(state)


def run(
    initial: SimState,
    params: PhysicsParams,
    forcing: Forcing,
    T: float,
    observer: Optional[Callable[[SimState], None]] = None,
    options: Optional[SolverOptions] = None,
) -> RunResult:
    """Step from ``initial`` until t >= T or a blow-up diagnostic fires.

    The observer is invoked on the initial state, every ``sample_every``
    steps, and on the final (last finite) state.
    """
    options = options or SolverOptions()
    if T < 0:
        raise ValueError(f"T must be nonnegative, got {T}")

    def emit(s: SimState) -> None:
        if observer is not None:
            observer(s)

    state = initial
    emit(state)
    last_emitted = 0
    steps = 0
    last_finite = _norm_record(state)
    horizon = initial.t + T
    eps = 1e-12 * max(1.0, abs(horizon))
    reason = REASON_COMPLETED

    while state.t < horizon - eps:
        dt = min(options.max_dt, cfl_dt(state, options.cfl), horizon - state.t)
        if dt < options.min_dt:
            reason = REASON_CFL_FLOOR
            break
        try:
            state = step(
                state,
                params,
                forcing,
                dt,
                advection=options.advection,
                cfl_coeff=options.cfl,
            )
        except BlowUpError:
            reason = REASON_NONFINITE
            break
        steps += 1
        last_finite = _norm_record(state)
        if steps % options.sample_every == 0 and state.t < horizon - eps:
            emit(state)
            last_emitted = steps

    if last_emitted != steps:
        emit(state)
    return RunResult(state=state, steps=steps, reason=reason, last_finite=last_finite)


def div_free_residual(state: SimState) -> float:
    """|div u| / |grad u| with a floor guard; the post-step invariant metric."""
    from .fields import divergence

    denom = grad_l2(state.u)
    if denom == 0.0:
        return 0.0
    return l2_norm(divergence(state.u)) / denom
