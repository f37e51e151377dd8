"""Regularity monitoring along simulated trajectories.

Ties together three layers:

* exponent-pair validation for the space/time integrability curve
  3/r + 2/s = 1 with r in (3, inf], s in [2, inf);
* constants calibrated empirically (max observed left/right ratio over a
  field family times a safety factor) for the convective bound, the
  H1 -> L6 embedding, the weak-norm interpolation bound and the scalar
  advective estimate -- none of these constants is effective analytically,
  so calibration is what makes every downstream inequality checkable;
* trackers that evaluate, per sampled time, both criterion verdicts, the
  exponential growth envelopes for |grad u|^2, |grad theta|^2 and
  |grad phi|^2, the differential-inequality residuals, and the
  bounded-by-construction auxiliary envelope psi used by the weak-in-time
  criterion.

Everything a tracker reports carries the numeric margin it was decided on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Optional, Sequence

import numpy as np

from .dynamics import Forcing, PhysicsParams, SimState, gravity_l3_norm
from .fields import (
    VectorField,
    convective_scalar,
    convective_vector,
    grad_l2,
    inner_product,
    l2_norm,
    laplacian,
    stokes_l2,
)
from .norms import (
    TimeSeries,
    WeightedSamples,
    bochner_strong,
    bochner_weak_time,
    interpolation_check,
    lp_norm,
    weak_lp_norm,
)

PAIR_TOL = 1e-12

STATUS_SATISFIED = "satisfied"
STATUS_VIOLATED = "violated"
STATUS_NA = "not-applicable"

#: deterministic grid-search order for the auxiliary-envelope admissibility scan
EPS_GRID = (0.5, 0.25, 0.1, 0.05, 0.01)
DELTA_GRID = (0.05, 0.1, 0.2, 0.3)


class PairValidationError(ValueError):
    """Exponent pair off the admissible curve; the message names the constraint."""


class TrajectoryError(ValueError):
    """Trajectory unusable for the requested analysis."""


class DegenerateFamilyError(ValueError):
    """Calibration family produced no usable ratios."""


@dataclass(frozen=True)
class ProdiSerrinPair:
    """Validated exponent pair: r in (3, inf], s in [2, inf), 3/r + 2/s = 1."""

    r: float
    s: float

    def __post_init__(self) -> None:
        r, s = float(self.r), float(self.s)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "s", s)
        if not r > 3.0:
            raise PairValidationError(f"r must lie in (3, inf], got r = {r}")
        if math.isinf(s) or not s >= 2.0:
            raise PairValidationError(f"s must lie in [2, inf), got s = {s}")
        if abs(self.inv_r * 3.0 + 2.0 / s - 1.0) > PAIR_TOL:
            raise PairValidationError(
                f"3/r + 2/s must equal 1, got {self.inv_r * 3.0 + 2.0 / s}"
            )

    @property
    def inv_r(self) -> float:
        return 0.0 if math.isinf(self.r) else 1.0 / self.r


def validate_pair(r: float, s: float) -> ProdiSerrinPair:
    return ProdiSerrinPair(float(r), float(s))


def pair_from_s(s: float) -> ProdiSerrinPair:
    """Complete the pair from the time exponent: r = 3s/(s-2), r = inf at s = 2."""
    s = float(s)
    if s == 2.0:
        return ProdiSerrinPair(math.inf, 2.0)
    if s < 2.0:
        raise PairValidationError(f"s must lie in [2, inf), got s = {s}")
    return ProdiSerrinPair(3.0 * s / (s - 2.0), s)


def _trajectory_times(trajectory: Sequence[SimState]) -> np.ndarray:
    if len(trajectory) < 2:
        raise TrajectoryError(
            f"trajectory must contain at least 2 snapshots, got {len(trajectory)}"
        )
    times = np.array([state.t for state in trajectory], dtype=np.float64)
    if not np.all(np.diff(times) > 0):
        raise TrajectoryError("snapshot times must be strictly increasing")
    return times


def velocity_weak_series(trajectory: Sequence[SimState], r: float) -> TimeSeries:
    """Per-sample weak-L^r norm of the velocity magnitude."""
    times = _trajectory_times(trajectory)
    values = [
        weak_lp_norm(WeightedSamples.from_vector(state.u), r) for state in trajectory
    ]
    return TimeSeries.from_times(times, values)


def k_series(trajectory: Sequence[SimState], pair: ProdiSerrinPair) -> TimeSeries:
    """Per-sample (weak-L^r norm of u)^s, the growth-rate weight of the envelopes."""
    base = velocity_weak_series(trajectory, pair.r)
    return TimeSeries(base.times, base.values**pair.s, base.weights)


@dataclass(frozen=True, eq=False)
class Verdict:
    status: str
    value: float
    threshold: Optional[float]
    margin: float
    note: str = ""
    extras: dict = dc_field(default_factory=dict)

    @property
    def satisfied(self) -> bool:
        return self.status == STATUS_SATISFIED


def theorem1_criterion(
    trajectory: Sequence[SimState], pair: ProdiSerrinPair
) -> Verdict:
    """Strong-in-time criterion: finiteness of the L^s(weak-L^r) norm.

    Discrete trajectories always produce a finite value, so the verdict is
    informational; the substantive check is envelope containment.
    """
    series = velocity_weak_series(trajectory, pair.r)
    value = bochner_strong(series, pair.s)
    status = STATUS_SATISFIED if math.isfinite(value) else STATUS_VIOLATED
    return Verdict(
        status=status,
        value=value,
        threshold=None,
        margin=value,
        note=(
            "space-time norm is finite on any discrete trajectory; the"
            " substantive regularity evidence is envelope containment"
        ),
    )


# --- calibrated constants ---------------------------------------------------


@dataclass(frozen=True)
class CalibrationProvenance:
    method: str = "empirical-max"
    seed: Optional[int] = None
    family_size: Optional[int] = None
    safety: Optional[float] = None
    grid: Optional[tuple] = None

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "seed": self.seed,
            "family_size": self.family_size,
            "safety": self.safety,
            "grid": list(self.grid) if self.grid is not None else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CalibrationProvenance":
        grid = d.get("grid")
        return cls(
            method=d.get("method", "user"),
            seed=d.get("seed"),
            family_size=d.get("family_size"),
            safety=d.get("safety"),
            grid=tuple(grid) if grid is not None else None,
        )


@dataclass(frozen=True)
class CalibratedConstants:
    """Empirical constants closing the monitored inequalities for one pair.

    convective       : |(u.grad)u| <= c * |u|_{r,w} |grad u|^(2/s) |Au|^((s-2)/s)
    embedding        : |v|_{L6} <= c |grad v| for zero-mean scalars
    interpolation    : |u|_{r_eps,w}^{s_eps} <= c(eps) |u|_{r,w}^{s(1-eps)} |grad u|^{4 eps}
    scalar_advection : |((u.grad)v, lap v)| <= c |grad u| |grad v|^(1/2) |lap v|^(3/2)
    """

    pair: ProdiSerrinPair
    convective: float
    embedding: float
    interpolation: tuple[tuple[float, float], ...]
    scalar_advection: float
    provenance: CalibrationProvenance = CalibrationProvenance()

    def __post_init__(self) -> None:
        for name in ("convective", "embedding", "scalar_advection"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} constant must be positive")
        interp = tuple(sorted((float(e), float(c)) for e, c in self.interpolation))
        for eps, c in interp:
            if not (0.0 < eps < 1.0 and c > 0):
                raise ValueError(f"bad interpolation entry (eps={eps}, c={c})")
        object.__setattr__(self, "interpolation", interp)

    def interpolation_for(self, eps: float) -> float:
        for e, c in self.interpolation:
            if abs(e - eps) <= 1e-12:
                return c
        raise KeyError(f"no interpolation constant calibrated for eps = {eps}")

    @property
    def eps_values(self) -> tuple[float, ...]:
        return tuple(e for e, _ in self.interpolation)

    def to_dict(self) -> dict:
        return {
            "pair": pair_to_dict(self.pair),
            "convective": self.convective,
            "embedding": self.embedding,
            "interpolation": [[e, c] for e, c in self.interpolation],
            "scalar_advection": self.scalar_advection,
            "provenance": self.provenance.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CalibratedConstants":
        return cls(
            pair=pair_from_dict(d["pair"]),
            convective=d["convective"],
            embedding=d["embedding"],
            interpolation=tuple((e, c) for e, c in d["interpolation"]),
            scalar_advection=d["scalar_advection"],
            provenance=CalibrationProvenance.from_dict(d.get("provenance", {})),
        )


def pair_to_dict(pair: ProdiSerrinPair) -> dict:
    return {"r": "inf" if math.isinf(pair.r) else pair.r, "s": pair.s}


def pair_from_dict(d: dict) -> ProdiSerrinPair:
    r = d["r"]
    return validate_pair(math.inf if r == "inf" else float(r), float(d["s"]))


def convective_ratio(u: VectorField, pair: ProdiSerrinPair) -> Optional[float]:
    """Observed LHS/RHS of the convective bound; None when degenerate."""
    weak = weak_lp_norm(WeightedSamples.from_vector(u), pair.r)
    grad = grad_l2(u)
    stokes = stokes_l2(u)
    denom = weak * grad ** (2.0 / pair.s) * stokes ** ((pair.s - 2.0) / pair.s)
    if denom <= 0 or not math.isfinite(denom):
        return None
    return l2_norm(convective_vector(u, u)) / denom


def embedding_ratio(v) -> Optional[float]:
    grad = grad_l2(v)
    if grad <= 0:
        return None
    return lp_norm(WeightedSamples.from_scalar(v), 6.0) / grad


def interpolation_ratio(
    u: VectorField, pair: ProdiSerrinPair, eps: float
) -> Optional[float]:
    samples = WeightedSamples.from_vector(u)
    weak_r = weak_lp_norm(samples, pair.r)
    grad = grad_l2(u)
    bound = interpolation_check(weak_r, grad, pair.r, pair.s, eps)
    if bound.rhs <= 0 or not math.isfinite(bound.rhs):
        return None
    lhs = weak_lp_norm(samples, bound.r_eps) ** bound.s_eps
    return lhs / bound.rhs


def scalar_advection_ratio(u: VectorField, v) -> Optional[float]:
    grad_u = grad_l2(u)
    grad_v = grad_l2(v)
    lap = laplacian(v)
    lap_norm = l2_norm(lap)
    denom = grad_u * grad_v**0.5 * lap_norm**1.5
    if denom <= 0 or not math.isfinite(denom):
        return None
    return abs(inner_product(convective_scalar(u, v), lap)) / denom


def calibrate(
    family: Sequence[tuple[VectorField, object]],
    pair: ProdiSerrinPair,
    eps_values: Sequence[float] = (0.1,),
    safety: float = 1.5,
    provenance: Optional[CalibrationProvenance] = None,
) -> CalibratedConstants:
    """Empirical constants: max observed LHS/RHS over the family times ``safety``."""
    if len(family) == 0:
        raise DegenerateFamilyError("calibration family is empty")
    conv, embed, adv = [], [], []
    interp: dict[float, list[float]] = {float(e): [] for e in eps_values}
    for u, th in family:
        ratio = convective_ratio(u, pair)
        if ratio is not None:
            conv.append(ratio)
        for v in (th, *u.components):
            ratio = embedding_ratio(v)
            if ratio is not None:
                embed.append(ratio)
        ratio = scalar_advection_ratio(u, th)
        if ratio is not None:
            adv.append(ratio)
        for eps in interp:
            ratio = interpolation_ratio(u, pair, eps)
            if ratio is not None:
                interp[eps].append(ratio)
    if not conv or not embed or not adv or any(not v for v in interp.values()):
        raise DegenerateFamilyError(
            "calibration family is degenerate (no usable ratios); "
            "supply nonzero velocity/scalar pairs"
        )
    if provenance is None:
        provenance = CalibrationProvenance(family_size=len(family), safety=safety)
    return CalibratedConstants(
        pair=pair,
        convective=safety * max(conv),
        embedding=safety * max(embed),
        interpolation=tuple((e, safety * max(v)) for e, v in interp.items()),
        scalar_advection=safety * max(adv),
        provenance=provenance,
    )


# --- derived constants and criterion thresholds ------------------------------


def enstrophy_growth_constant(convective: float, s: float) -> float:
    """Growth-rate constant of the enstrophy inequality: 2 (c^s/s) (6(s-1)/s)^(s-1)."""
    return 2.0 * (convective**s / s) * (6.0 * (s - 1.0) / s) ** (s - 1.0)


def gamma_constant(
    pair: ProdiSerrinPair, constants: CalibratedConstants, eps: float
) -> float:
    """Smallness constant (2 c_interp(eps) c_growth)^(-1/s)."""
    c1 = enstrophy_growth_constant(constants.convective, pair.s)
    c2e = constants.interpolation_for(eps)
    if not (c1 > 0 and c2e > 0):
        raise ValueError("constants must be positive")
    return (2.0 * c2e * c1) ** (-1.0 / pair.s)


def gamma_threshold(
    pair: ProdiSerrinPair, constants: CalibratedConstants, eps: float, mu: float
) -> float:
    """Weak-in-time comparison value: gamma * mu^((s-1)/s)."""
    if not mu > 0:
        raise ValueError(f"mu must be positive, got {mu}")
    return gamma_constant(pair, constants, eps) * mu ** ((pair.s - 1.0) / pair.s)


def theorem2_criterion(
    trajectory: Sequence[SimState],
    pair: ProdiSerrinPair,
    constants: CalibratedConstants,
    eps: float,
    mu: float,
) -> Verdict:
    """Weak-in-time smallness criterion with the explicit threshold.

    Also reports the weak-L^1 time norm of k = (weak norm)^s against its own
    smallness bound 1/(2 c3 mu^(1-s)).
    """
    series = velocity_weak_series(trajectory, pair.r)
    value = bochner_weak_time(series, pair.s)
    threshold = gamma_threshold(pair, constants, eps, mu)
    ks = TimeSeries(series.times, series.values**pair.s, series.weights)
    k1_weak = weak_lp_norm(ks.as_samples(), 1.0)
    c3 = constants.interpolation_for(eps) * enstrophy_growth_constant(
        constants.convective, pair.s
    )
    k1_bound = 1.0 / (2.0 * c3 * mu ** (1.0 - pair.s))
    status = STATUS_SATISFIED if value <= threshold else STATUS_VIOLATED
    return Verdict(
        status=status,
        value=value,
        threshold=threshold,
        margin=threshold - value,
        note="weak-in-time norm of the spatial weak norms vs the calibrated threshold",
        extras={
            "eps": eps,
            "gamma": gamma_constant(pair, constants, eps),
            "k1_weak_norm": k1_weak,
            "k1_smallness_bound": k1_bound,
            "k1_condition_met": bool(k1_weak < k1_bound),
        },
    )


# --- data norms and envelopes -------------------------------------------------


@dataclass(frozen=True)
class DataNorms:
    """Squared source/scalar budgets over the sampled window [t0, tN]."""

    grad_theta_sq: float
    grad_phi_sq: float
    f_sq: float
    ell_sq: float
    h_sq: float

    def to_dict(self) -> dict:
        return {
            "grad_theta_sq": self.grad_theta_sq,
            "grad_phi_sq": self.grad_phi_sq,
            "f_sq": self.f_sq,
            "ell_sq": self.ell_sq,
            "h_sq": self.h_sq,
        }


def data_norms(trajectory: Sequence[SimState], forcing: Forcing) -> DataNorms:
    times = _trajectory_times(trajectory)

    def _integral(values) -> float:
        return TimeSeries.from_times(times, values).integral()

    f_sq = [
        l2_norm(forcing.velocity(s.t)) ** 2 if forcing.velocity else 0.0
        for s in trajectory
    ]
    ell_sq = [
        l2_norm(forcing.heat(s.t)) ** 2 if forcing.heat else 0.0 for s in trajectory
    ]
    h_sq = [
        l2_norm(forcing.solute(s.t)) ** 2 if forcing.solute else 0.0
        for s in trajectory
    ]
    return DataNorms(
        grad_theta_sq=_integral([grad_l2(s.theta) ** 2 for s in trajectory]),
        grad_phi_sq=_integral([grad_l2(s.phi) ** 2 for s in trajectory]),
        f_sq=_integral(f_sq),
        ell_sq=_integral(ell_sq),
        h_sq=_integral(h_sq),
    )


@dataclass(eq=False)
class EnvelopeSeries:
    """Observed quantity vs its exponential bound, with per-sample containment."""

    label: str
    times: np.ndarray
    observed: np.ndarray
    envelope: np.ndarray
    meta: dict = dc_field(default_factory=dict)

    @property
    def contained(self) -> np.ndarray:
        return self.observed <= self.envelope * (1.0 + 1e-12)

    @property
    def all_contained(self) -> bool:
        return bool(np.all(self.contained))

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "times": self.times.tolist(),
            "observed": self.observed.tolist(),
            "envelope": self.envelope.tolist(),
            "contained": [bool(c) for c in self.contained],
            "all_contained": self.all_contained,
            "meta": dict(self.meta),
        }


def buoyancy_coefficients(
    params: PhysicsParams, grid, embedding: float
) -> dict[str, float]:
    """Both readings of the buoyancy coefficient in the enstrophy inequality.

    ``printed`` treats the embedding constant and the gravity L3 norm
    linearly; ``derived`` squares them (the reading that actually follows
    from Cauchy-Schwarz + the embedding, hence the one the envelopes use).
    """
    g3 = gravity_l3_norm(params, grid)
    base = (6.0 / params.mu) * params.alpha**2
    return {
        "printed": 2.0 * embedding * base * g3,
        "derived": 4.0 * embedding**2 * base * g3**2,
        "gravity_l3": g3,
    }


def _enstrophy_intercept(
    e0: float,
    constants: CalibratedConstants,
    params: PhysicsParams,
    grid,
    norms: DataNorms,
) -> tuple[float, dict]:
    """Gronwall intercept: initial enstrophy + scalar budgets + forcing budget.

    The forcing coefficient is reported under both printed (mu/3) and
    derived (6/mu) readings; the intercept itself uses the larger to stay on
    the containment-true side.
    """
    buoy = buoyancy_coefficients(params, grid, constants.embedding)
    scalar_term = buoy["derived"] * (norms.grad_theta_sq + norms.grad_phi_sq)
    f_printed = (params.mu / 3.0) * norms.f_sq
    f_derived = (6.0 / params.mu) * norms.f_sq
    meta = {
        "initial": e0,
        "buoyancy_printed": buoy["printed"],
        "buoyancy_derived": buoy["derived"],
        "gravity_l3": buoy["gravity_l3"],
        "scalar_term": scalar_term,
        "forcing_term_printed": f_printed,
        "forcing_term_derived": f_derived,
        "intercept_printed": e0 + buoy["printed"] * (norms.grad_theta_sq + norms.grad_phi_sq) + f_printed,
    }
    return e0 + scalar_term + max(f_printed, f_derived), meta


def gronwall_envelope_u(
    trajectory: Sequence[SimState],
    pair: ProdiSerrinPair,
    constants: Optional[CalibratedConstants],
    params: PhysicsParams,
    norms: DataNorms,
) -> EnvelopeSeries:
    """Exponential envelope M exp(c_growth mu^(1-s) int_0^t k) over |grad u|^2."""
    times = _trajectory_times(trajectory)
    observed = np.array([grad_l2(s.u) ** 2 for s in trajectory])
    if constants is None:
        return EnvelopeSeries(
            "grad_u_sq", times, observed, np.full_like(observed, np.nan),
            meta={"uncalibrated": True},
        )
    ks = k_series(trajectory, pair)
    c1 = enstrophy_growth_constant(constants.convective, pair.s)
    intercept, meta = _enstrophy_intercept(
        float(observed[0]), constants, params, trajectory[0].grid, norms
    )
    exponent = c1 * params.mu ** (1.0 - pair.s) * ks.cumulative()
    envelope = intercept * np.exp(exponent)
    meta.update({"growth_constant": c1, "intercept": intercept})
    return EnvelopeSeries("grad_u_sq", times, observed, envelope, meta)


def scalar_envelopes(
    trajectory: Sequence[SimState],
    params: PhysicsParams,
    constants: Optional[CalibratedConstants],
    norms: DataNorms,
) -> tuple[EnvelopeSeries, EnvelopeSeries]:
    """Exponential envelopes N exp(C t) for |grad theta|^2 and |grad phi|^2.

    The growth rate comes from the calibrated scalar-advection constant via
    Young splitting against the dissipation, with the velocity factor frozen
    at its trajectory supremum.
    """
    times = _trajectory_times(trajectory)
    obs_th = np.array([grad_l2(s.theta) ** 2 for s in trajectory])
    obs_ph = np.array([grad_l2(s.phi) ** 2 for s in trajectory])
    if constants is None:
        nan = np.full_like(obs_th, np.nan)
        return (
            EnvelopeSeries("grad_theta_sq", times, obs_th, nan, {"uncalibrated": True}),
            EnvelopeSeries("grad_phi_sq", times, obs_ph, nan, {"uncalibrated": True}),
        )
    sup_grad_u4 = max(grad_l2(s.u) for s in trajectory) ** 4
    elapsed = times - times[0]

    def _one(observed, kappa, source_sq, label) -> EnvelopeSeries:
        rate = 2.0 * (27.0 / 4.0) * constants.scalar_advection**4 * sup_grad_u4 / kappa**3
        intercept = float(observed[0]) + (2.0 / kappa) * source_sq
        env = intercept * np.exp(rate * elapsed)
        meta = {"intercept": intercept, "rate": rate, "kappa": kappa}
        return EnvelopeSeries(label, times, observed, env, meta)

    return (
        _one(obs_th, params.kappa1, norms.ell_sq, "grad_theta_sq"),
        _one(obs_ph, params.kappa2, norms.h_sq, "grad_phi_sq"),
    )


@dataclass(eq=False)
class ResidualSeries:
    """RHS - LHS of the enstrophy differential inequality, per sample.

    Two columns track the two readings of the forcing coefficient
    (printed mu/3 vs derived 6/mu); they coincide when f = 0.
    """

    times: np.ndarray
    lhs: np.ndarray
    rhs_printed: np.ndarray
    rhs_derived: np.ndarray
    meta: dict = dc_field(default_factory=dict)

    @property
    def residual_printed(self) -> np.ndarray:
        return self.rhs_printed - self.lhs

    @property
    def residual_derived(self) -> np.ndarray:
        return self.rhs_derived - self.lhs

    @property
    def scale(self) -> float:
        """Magnitude of the cancelling sides; residuals are meaningful relative to it."""
        return float(
            max(np.max(np.abs(self.lhs)), np.max(np.abs(self.rhs_derived)), 1e-300)
        )

    def to_dict(self) -> dict:
        return {
            "times": self.times.tolist(),
            "lhs": self.lhs.tolist(),
            "rhs_printed": self.rhs_printed.tolist(),
            "rhs_derived": self.rhs_derived.tolist(),
            "residual_printed": self.residual_printed.tolist(),
            "residual_derived": self.residual_derived.tolist(),
            "scale": self.scale,
            "meta": dict(self.meta),
        }


def enstrophy_residual(
    trajectory: Sequence[SimState],
    pair: ProdiSerrinPair,
    constants: CalibratedConstants,
    params: PhysicsParams,
    forcing: Forcing,
) -> ResidualSeries:
    """Differential-inequality residual d/dt |grad u|^2 + mu |Au|^2 vs its bound.

    d/dt is a centered difference at interior samples, one-sided at the ends.
    """
    if len(trajectory) < 3:
        raise TrajectoryError(
            f"residual tracking needs at least 3 snapshots, got {len(trajectory)}"
        )
    times = _trajectory_times(trajectory)
    enstrophy = np.array([grad_l2(s.u) ** 2 for s in trajectory])
    stokes_sq = np.array([stokes_l2(s.u) ** 2 for s in trajectory])
    k_vals = k_series(trajectory, pair).values
    grad_th_sq = np.array([grad_l2(s.theta) ** 2 for s in trajectory])
    grad_ph_sq = np.array([grad_l2(s.phi) ** 2 for s in trajectory])
    f_sq = np.array(
        [
            l2_norm(forcing.velocity(s.t)) ** 2 if forcing.velocity else 0.0
            for s in trajectory
        ]
    )
    c1 = enstrophy_growth_constant(constants.convective, pair.s)
    buoy = buoyancy_coefficients(params, trajectory[0].grid, constants.embedding)
    lhs = np.gradient(enstrophy, times) + params.mu * stokes_sq
    rhs_base = (
        c1 * params.mu ** (1.0 - pair.s) * k_vals * enstrophy
        + buoy["derived"] * (grad_th_sq + grad_ph_sq)
    )
    return ResidualSeries(
        times=times,
        lhs=lhs,
        rhs_printed=rhs_base + (params.mu / 3.0) * f_sq,
        rhs_derived=rhs_base + (6.0 / params.mu) * f_sq,
        meta={"growth_constant": c1, "buoyancy_derived": buoy["derived"]},
    )


def scalar_identity_residual(
    trajectory: Sequence[SimState], params: PhysicsParams, forcing: Forcing
) -> dict:
    """Residual of the scalar gradient-energy identities along the trajectory.

    For each scalar: 1/2 d/dt |grad v|^2 + kappa |lap v|^2 against
    -(source, lap v) + ((u.grad)v, lap v); zero up to time discretization.
    """
    if len(trajectory) < 3:
        raise TrajectoryError(
            f"residual tracking needs at least 3 snapshots, got {len(trajectory)}"
        )
    times = _trajectory_times(trajectory)

    def _one(getter, kappa, source) -> tuple[np.ndarray, float]:
        grads = np.array([grad_l2(getter(s)) ** 2 for s in trajectory])
        lhs = 0.5 * np.gradient(grads, times)
        rhs = np.zeros_like(lhs)
        for i, s in enumerate(trajectory):
            v = getter(s)
            lap = laplacian(v)
            lhs[i] += kappa * l2_norm(lap) ** 2
            rhs[i] += inner_product(convective_scalar(s.u, v), lap)
            if source is not None:
                rhs[i] -= inner_product(source(s.t), lap)
        scale = float(max(np.max(np.abs(lhs)), np.max(np.abs(rhs)), 1e-300))
        return rhs - lhs, scale

    theta_res, theta_scale = _one(lambda s: s.theta, params.kappa1, forcing.heat)
    phi_res, phi_scale = _one(lambda s: s.phi, params.kappa2, forcing.solute)
    return {
        "times": times.tolist(),
        "theta": theta_res.tolist(),
        "phi": phi_res.tolist(),
        "scale": max(theta_scale, phi_scale),
    }


# --- auxiliary envelope for the weak-in-time criterion ------------------------


@dataclass(eq=False)
class PsiReport:
    """Admissibility and containment record for one (eps, delta) choice."""

    eps: float
    delta: float
    admissible: bool
    violated: tuple[str, ...]
    intercept: float
    c3: float
    bound: Optional[float]
    times: np.ndarray
    psi: np.ndarray
    observed: np.ndarray
    observed_within_bound: Optional[bool]
    psi_within_bound: Optional[bool]
    m_uno: dict

    def to_dict(self) -> dict:
        return {
            "eps": self.eps,
            "delta": self.delta,
            "admissible": self.admissible,
            "violated": list(self.violated),
            "intercept": self.intercept,
            "c3": self.c3,
            "bound": self.bound,
            "times": self.times.tolist(),
            "psi": self.psi.tolist(),
            "observed": self.observed.tolist(),
            "observed_within_bound": self.observed_within_bound,
            "psi_within_bound": self.psi_within_bound,
            "m_uno": dict(self.m_uno),
        }


def m_uno_check(ks: TimeSeries, eps: float) -> dict:
    """Discrete layer-cake bound: eps int k^(1-eps) <= eps T + (1-eps) |k|_{1,w}."""
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    duration = ks.duration
    k1_weak = weak_lp_norm(ks.as_samples(), 1.0)
    lhs = eps * float(np.sum(ks.weights * ks.values ** (1.0 - eps)))
    rhs = eps * duration + (1.0 - eps) * k1_weak
    return {
        "eps": eps,
        "lhs": lhs,
        "rhs": rhs,
        "holds": bool(lhs <= rhs * (1.0 + 1e-12)),
        "k1_weak_norm": k1_weak,
        "duration": duration,
    }


def psi_envelope(
    trajectory: Sequence[SimState],
    pair: ProdiSerrinPair,
    constants: CalibratedConstants,
    params: PhysicsParams,
    eps: float,
    delta: float,
    norms: DataNorms,
) -> PsiReport:
    """Auxiliary-envelope tracker for the weak-in-time criterion.

    psi(t) = R + c3 mu^(1-s) int_0^t k^(1-eps) (|grad u|^2)^(1+2 eps); when
    the three smallness conditions hold, psi (hence |grad u|^2) stays below
    delta^(-1/(2 eps)) on the whole window.
    """
    times = _trajectory_times(trajectory)
    observed = np.array([grad_l2(s.u) ** 2 for s in trajectory])
    ks = k_series(trajectory, pair)
    intercept, _ = _enstrophy_intercept(
        float(observed[0]), constants, params, trajectory[0].grid, norms
    )
    if not math.isfinite(intercept):
        raise ValueError(f"non-finite envelope intercept {intercept}")
    c1 = enstrophy_growth_constant(constants.convective, pair.s)
    mu_factor = params.mu ** (1.0 - pair.s)

    violated: list[str] = []
    eps_ok = 0.0 < eps < 1.0
    delta_ok = 0.0 < delta < 1.0 / 3.0
    if not eps_ok:
        violated.append("eps-range: eps must lie in (0, 1)")
    if not delta_ok:
        violated.append("delta-range: delta must lie in (0, 1/3)")

    c3 = float("nan")
    bound = None
    psi = np.full_like(observed, np.nan)
    m_uno: dict = {}
    observed_within = None
    psi_within = None
    if eps_ok and delta_ok:
        c3 = constants.interpolation_for(eps) * c1
        scale = 2.0 * c3 * mu_factor
        k1_weak = weak_lp_norm(ks.as_samples(), 1.0)
        duration = ks.duration
        if not scale * k1_weak < 1.0 - 3.0 * delta:
            violated.append(
                f"k-smallness: 2 c3 mu^(1-s) |k|_1w = {scale * k1_weak:.6g}"
                f" !< 1 - 3 delta = {1.0 - 3.0 * delta:.6g}"
            )
        start_ok = intercept == 0.0 or 1.0 - delta < intercept ** (-2.0 * eps)
        if not start_ok:
            violated.append(
                f"initial-size: 1 - delta !< R^(-2 eps) = {intercept ** (-2.0 * eps):.6g}"
            )
        if not scale * eps * duration < delta:
            violated.append(
                f"eps-horizon: 2 c3 mu^(1-s) eps T = {scale * eps * duration:.6g}"
                f" !< delta = {delta:.6g}"
            )
        integrand = ks.values ** (1.0 - eps) * observed ** (1.0 + 2.0 * eps)
        cumulative = TimeSeries(times, integrand, ks.weights).cumulative()
        psi = intercept + c3 * mu_factor * cumulative
        bound = delta ** (-1.0 / (2.0 * eps))
        m_uno = m_uno_check(ks, eps)
        observed_within = bool(np.all(observed <= bound * (1.0 + 1e-12)))
        psi_within = bool(np.all(psi <= bound * (1.0 + 1e-12)))

    return PsiReport(
        eps=eps,
        delta=delta,
        admissible=not violated,
        violated=tuple(violated),
        intercept=intercept,
        c3=c3,
        bound=bound,
        times=times,
        psi=psi,
        observed=observed,
        observed_within_bound=observed_within,
        psi_within_bound=psi_within,
        m_uno=m_uno,
    )


def psi_search(
    trajectory: Sequence[SimState],
    pair: ProdiSerrinPair,
    constants: CalibratedConstants,
    params: PhysicsParams,
    norms: DataNorms,
    eps_values: Sequence[float] = EPS_GRID,
    delta_values: Sequence[float] = DELTA_GRID,
) -> tuple[Optional[PsiReport], list[dict]]:
    """Deterministic scan (eps outer, delta inner) for an admissible choice.

    Returns the first admissible report (or None) plus the full scan log.
    """
    scan: list[dict] = []
    chosen: Optional[PsiReport] = None
    for eps in eps_values:
        for delta in delta_values:
            report = psi_envelope(
                trajectory, pair, constants, params, eps, delta, norms
            )
            scan.append(
                {
                    "eps": eps,
                    "delta": delta,
                    "admissible": report.admissible,
                    "violated": list(report.violated),
                }
            )
            if report.admissible and chosen is None:
                chosen = report
    return chosen, scan


def trajectory_ratio_stats(
    trajectory: Sequence[SimState],
    pair: ProdiSerrinPair,
    constants: CalibratedConstants,
    eps: float,
) -> dict:
    """Observed convective/interpolation ratios along the trajectory."""
    conv, interp = [], []
    for state in trajectory:
        ratio = convective_ratio(state.u, pair)
        if ratio is not None:
            conv.append(ratio)
        ratio = interpolation_ratio(state.u, pair, eps)
        if ratio is not None:
            interp.append(ratio)

    def _stats(vals, limit) -> dict:
        if not vals:
            return {"samples": 0}
        arr = np.asarray(vals)
        return {
            "samples": int(arr.size),
            "max": float(arr.max()),
            "mean": float(arr.mean()),
            "within_calibrated": float(np.mean(arr <= limit)),
        }

    return {
        "convective": _stats(conv, constants.convective),
        "interpolation": _stats(interp, constants.interpolation_for(eps)),
    }


# --- full per-pair report ------------------------------------------------------


@dataclass(eq=False)
class MonitorReport:
    pair: ProdiSerrinPair
    constants: CalibratedConstants
    k_times: np.ndarray
    k_values: np.ndarray
    strong_time_norm: float
    weak_time_norm: float
    theorem1: Verdict
    theorem2: Verdict
    thresholds_by_eps: dict
    envelope_u: EnvelopeSeries
    envelope_theta: EnvelopeSeries
    envelope_phi: EnvelopeSeries
    residuals: ResidualSeries
    scalar_residuals: dict
    psi_selected: Optional[PsiReport]
    psi_scan: list
    m_uno: list
    ratio_stats: dict
    data: DataNorms


def verdict_to_dict(v: Verdict) -> dict:
    return {
        "status": v.status,
        "value": v.value,
        "threshold": v.threshold,
        "margin": v.margin,
        "note": v.note,
        "extras": dict(v.extras),
    }


def build_report(
    trajectory: Sequence[SimState],
    pair: ProdiSerrinPair,
    constants: CalibratedConstants,
    params: PhysicsParams,
    forcing: Forcing,
    eps_values: Sequence[float] = (0.1,),
    delta_values: Sequence[float] = DELTA_GRID,
) -> MonitorReport:
    """Evaluate every tracker for one exponent pair along a trajectory."""
    if len(trajectory) < 3:
        raise TrajectoryError(
            f"monitoring needs at least 3 snapshots, got {len(trajectory)}"
        )
    eps_values = [float(e) for e in eps_values]
    series = velocity_weak_series(trajectory, pair.r)
    ks = TimeSeries(series.times, series.values**pair.s, series.weights)
    strong = bochner_strong(series, pair.s)
    weak_t = bochner_weak_time(series, pair.s)

    thresholds = {
        eps: gamma_threshold(pair, constants, eps, params.mu) for eps in eps_values
    }
    # "appropriately chosen" eps: the most favorable calibrated threshold.
    best_eps = max(thresholds, key=thresholds.get)
    th2 = theorem2_criterion(trajectory, pair, constants, best_eps, params.mu)

    norms = data_norms(trajectory, forcing)
    psi_selected, psi_scan = psi_search(
        trajectory, pair, constants, params, norms,
        eps_values=eps_values if eps_values else EPS_GRID,
        delta_values=delta_values,
    )
    env_theta, env_phi = scalar_envelopes(trajectory, params, constants, norms)
    return MonitorReport(
        pair=pair,
        constants=constants,
        k_times=ks.times,
        k_values=ks.values,
        strong_time_norm=strong,
        weak_time_norm=weak_t,
        theorem1=theorem1_criterion(trajectory, pair),
        theorem2=th2,
        thresholds_by_eps=thresholds,
        envelope_u=gronwall_envelope_u(trajectory, pair, constants, params, norms),
        envelope_theta=env_theta,
        envelope_phi=env_phi,
        residuals=enstrophy_residual(trajectory, pair, constants, params, forcing),
        scalar_residuals=scalar_identity_residual(trajectory, params, forcing),
        psi_selected=psi_selected,
        psi_scan=psi_scan,
        m_uno=[m_uno_check(ks, eps) for eps in eps_values],
        ratio_stats=trajectory_ratio_stats(trajectory, pair, constants, eps_values[0]),
        data=norms,
    )


def report_to_dict(report: MonitorReport) -> dict:
    return {
        "pair": pair_to_dict(report.pair),
        "constants": report.constants.to_dict(),
        "k_series": {
            "times": report.k_times.tolist(),
            "values": report.k_values.tolist(),
        },
        "strong_time_norm": report.strong_time_norm,
        "weak_time_norm": report.weak_time_norm,
        "theorem1": verdict_to_dict(report.theorem1),
        "theorem2": verdict_to_dict(report.theorem2),
        "thresholds_by_eps": {repr(e): t for e, t in report.thresholds_by_eps.items()},
        "envelopes": {
            "u": report.envelope_u.to_dict(),
            "theta": report.envelope_theta.to_dict(),
            "phi": report.envelope_phi.to_dict(),
        },
        "residuals": report.residuals.to_dict(),
        "scalar_residuals": dict(report.scalar_residuals),
        "psi_selected": report.psi_selected.to_dict() if report.psi_selected else None,
        "psi_scan": list(report.psi_scan),
        "m_uno": list(report.m_uno),
        "ratio_stats": dict(report.ratio_stats),
        "data_norms": report.data.to_dict(),
    }
