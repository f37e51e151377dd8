"""Strong and weak Lebesgue norms on weighted samples.

A discretized field is reduced to a :class:`WeightedSamples` bag (absolute
values plus cell volumes); a sampled trajectory of scalar statistics becomes
a :class:`TimeSeries` (values plus trapezoid time weights).  Both feed the
same norm machinery:

* ``lp_norm``       -- the usual (sum w |v|^p)^(1/p), max for p = inf;
* ``weak_lp_norm``  -- sup_a { a * d(a)^(1/p) } with d the distribution
  function, evaluated exactly on the step structure of discrete data;
* ``layer_cake``    -- p * integral sigma^(p-1) d(sigma) dsigma in closed
  form per inter-jump interval, an identity check against lp_norm^p.

Time norms (``bochner_strong`` / ``bochner_weak_time``) apply the same two
norms to time samples with their quadrature weights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fields import ScalarField, VectorField


def _check_exponent(p: float, name: str = "p") -> float:
    p = float(p)
    if not p >= 1.0:
        raise ValueError(f"{name} must satisfy {name} >= 1, got {p}")
    return p


@dataclass(frozen=True, eq=False)
class WeightedSamples:
    """Sample magnitudes paired with strictly positive measure weights."""

    values: np.ndarray
    weights: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64).ravel()
        weights = np.asarray(self.weights, dtype=np.float64).ravel()
        if values.shape != weights.shape:
            raise ValueError(
                f"values and weights differ in length: {values.size} vs {weights.size}"
            )
        if values.size and not np.all(weights > 0):
            raise ValueError("weights must be strictly positive")
        values.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def from_scalar(cls, f: ScalarField) -> "WeightedSamples":
        phys = f.to_physical()
        vals = np.abs(phys.data).ravel()
        return cls(vals, np.full(vals.size, f.grid.cell_volume))

    @classmethod
    def from_vector(cls, u: VectorField) -> "WeightedSamples":
        vals = u.magnitude().ravel()
        return cls(vals, np.full(vals.size, u.grid.cell_volume))

    @property
    def total_measure(self) -> float:
        return float(self.weights.sum())


def distribution_function(samples: WeightedSamples, alpha: float) -> float:
    """Measure of the superlevel set {|value| > alpha}."""
    alpha = float(alpha)
    if alpha < 0:
        raise ValueError(f"alpha must be nonnegative, got {alpha}")
    return float(samples.weights[np.abs(samples.values) > alpha].sum())


def _descending(samples: WeightedSamples) -> tuple[np.ndarray, np.ndarray]:
    a = np.abs(samples.values)
    order = np.argsort(a, kind="stable")[::-1]
    return a[order], np.cumsum(samples.weights[order])


def weak_lp_norm(samples: WeightedSamples, p: float) -> float:
    """sup over alpha of alpha * d(alpha)^(1/p).

    For discrete data the distribution function is a right-continuous step
    function, so the supremum is attained at sample values; each candidate v
    is paired with the measure of {|value| >= v} (the left limit d(v-)).
    p = inf returns max |value|.
    """
    if math.isinf(p):
        return float(np.max(np.abs(samples.values))) if samples.values.size else 0.0
    p = _check_exponent(p)
    if samples.values.size == 0:
        return 0.0
    a, cumw = _descending(samples)
    candidates = a * cumw ** (1.0 / p)
    return float(np.max(candidates, initial=0.0))


def lp_norm(samples: WeightedSamples, p: float) -> float:
    """(sum w |v|^p)^(1/p); max |value| for p = inf."""
    if math.isinf(p):
        return float(np.max(np.abs(samples.values))) if samples.values.size else 0.0
    p = _check_exponent(p)
    if samples.values.size == 0:
        return 0.0
    return float(np.sum(samples.weights * np.abs(samples.values) ** p) ** (1.0 / p))


def layer_cake(samples: WeightedSamples, p: float) -> float:
    """p * integral_0^max sigma^(p-1) d(sigma) dsigma, exact on the step structure.

    On each interval (v_k-1, v_k] between consecutive distinct sample values
    the distribution function is the constant suffix weight, and the
    polynomial factor integrates in closed form, so the result carries no
    quadrature error and equals lp_norm(samples, p)**p to rounding.
    """
    p = _check_exponent(p)
    a = np.abs(samples.values)
    keep = a > 0
    a, w = a[keep], samples.weights[keep]
    if a.size == 0:
        return 0.0
    uniq, inverse = np.unique(a, return_inverse=True)
    wsum = np.bincount(inverse, weights=w)
    suffix = np.cumsum(wsum[::-1])[::-1]  # measure of {|v| >= uniq[k]}
    lower = np.concatenate(([0.0], uniq[:-1]))
    return float(np.sum(suffix * (uniq**p - lower**p)))


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Scalar samples on strictly increasing times with quadrature weights."""

    times: np.ndarray
    values: np.ndarray
    weights: np.ndarray

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=np.float64).ravel()
        values = np.asarray(self.values, dtype=np.float64).ravel()
        weights = np.asarray(self.weights, dtype=np.float64).ravel()
        if not (times.shape == values.shape == weights.shape):
            raise ValueError("times, values and weights must have equal length")
        if times.size == 0:
            raise ValueError("time series must contain at least one sample")
        if times.size > 1 and not np.all(np.diff(times) > 0):
            raise ValueError("times must be strictly increasing")
        if not np.all(weights > 0):
            raise ValueError("weights must be strictly positive")
        for arr in (times, values, weights):
            arr.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def from_times(cls, times, values) -> "TimeSeries":
        """Build a series with trapezoid weights (sum of weights = t_N - t_0)."""
        times = np.asarray(times, dtype=np.float64).ravel()
        if times.size < 2:
            raise ValueError("need at least two samples to derive time weights")
        dt = np.diff(times)
        weights = np.empty_like(times)
        weights[0] = dt[0] / 2.0
        weights[-1] = dt[-1] / 2.0
        weights[1:-1] = (dt[:-1] + dt[1:]) / 2.0
        return cls(times, values, weights)

    def as_samples(self) -> WeightedSamples:
        return WeightedSamples(self.values, self.weights)

    @property
    def duration(self) -> float:
        return float(self.weights.sum())

    def integral(self) -> float:
        return float(np.sum(self.weights * self.values))

    def cumulative(self) -> np.ndarray:
        """Cumulative trapezoid integral, starting at 0."""
        out = np.zeros_like(self.values)
        if self.values.size > 1:
            dt = np.diff(self.times)
            out[1:] = np.cumsum(dt * (self.values[1:] + self.values[:-1]) / 2.0)
        return out


def bochner_strong(series: TimeSeries, s: float) -> float:
    """(sum dt |v|^s)^(1/s) over the time samples."""
    if math.isinf(s):
        raise ValueError("s must be finite; got inf")
    s = _check_exponent(s, "s")
    return lp_norm(series.as_samples(), s)


def bochner_weak_time(series: TimeSeries, s: float) -> float:
    """Weak-L^s norm in time (never exceeds the strong time norm)."""
    if math.isinf(s):
        raise ValueError("s must be finite; got inf")
    s = _check_exponent(s, "s")
    return weak_lp_norm(series.as_samples(), s)


@dataclass(frozen=True)
class InterpolationBound:
    """Exponent bookkeeping for the weak-norm interpolation inequality."""

    s_eps: float
    r_eps: float
    rhs: float


def interpolation_check(
    u_weak_r: float, grad_u: float, r: float, s: float, eps: float
) -> InterpolationBound:
    """Shifted exponents and right-hand product of the interpolation bound.

    Given an exponent pair (r, s) on the 3/r + 2/s = 1 curve and eps in
    (0, 1), returns s_eps = s + eps*(4 - s), the r_eps completing the curve,
    and the product ||u||_{r,w}^(s(1-eps)) * ||grad u||^(4 eps).  The
    constant closing the inequality is calibrated elsewhere.
    """
    eps = float(eps)
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    inv_r = 0.0 if math.isinf(r) else 1.0 / r
    if abs(3.0 * inv_r + 2.0 / s - 1.0) > 1e-9:
        raise ValueError(f"(r, s) = ({r}, {s}) does not satisfy 3/r + 2/s = 1")
    s_eps = s + eps * (4.0 - s)
    r_eps = math.inf if s_eps == 2.0 else 3.0 * s_eps / (s_eps - 2.0)
    rhs = u_weak_r ** (s * (1.0 - eps)) * grad_u ** (4.0 * eps)
    return InterpolationBound(s_eps=s_eps, r_eps=r_eps, rhs=rhs)
