"""Shared test machinery: manufactured solutions and report comparison."""

from __future__ import annotations

import math

import numpy as np

import obflow as ob
from obflow.fields import VectorField, laplacian_vector, leray_project
from obflow import synth


def max_report_deviation(a, b, scale: float = 0.0) -> float:
    """Deep-compare two report trees; returns the largest normalized deviation.

    Numeric leaves are compared relative to max(|x|, |y|) and, when the
    enclosing dict carries a ``scale`` entry (residual series are differences
    of large cancelling terms), relative to that scale as well.
    """
    if isinstance(a, dict):
        assert set(a) == set(b), f"key mismatch: {set(a) ^ set(b)}"
        inner = scale
        if isinstance(a.get("scale"), float):
            inner = max(scale, a["scale"])
        return max(
            (max_report_deviation(a[k], b[k], inner) for k in a), default=0.0
        )
    if isinstance(a, list):
        assert len(a) == len(b), f"length mismatch: {len(a)} vs {len(b)}"
        return max(
            (max_report_deviation(x, y, scale) for x, y in zip(a, b)), default=0.0
        )
    if isinstance(a, bool) or a is None or isinstance(a, str):
        assert a == b, f"leaf mismatch: {a!r} vs {b!r}"
        return 0.0
    if isinstance(a, (int, float)):
        denom = max(abs(a), abs(b), scale, 1e-300)
        return abs(a - b) / denom
    raise AssertionError(f"unexpected leaf type {type(a)}")


class ManufacturedSolution:
    """Prescribed smooth trajectory plus the forcing that makes it exact.

    The forcing is computed with the solver's own discrete operators, so the
    semi-discrete system is satisfied identically and the only error left is
    time discretization.
    """

    def __init__(self, grid: ob.Grid, params: ob.PhysicsParams):
        self.grid = grid
        self.params = params
        if grid.dim == 2:
            self.U1 = synth.single_mode_div_free(grid, (1, 2))
            self.U2 = synth.single_mode_div_free(grid, (2, 1), phase=0.7)
            self.TH = synth.single_mode_scalar(grid, (1, 1), phase=0.3)
            self.PH = synth.single_mode_scalar(grid, (2, 0), phase=1.1)
        else:
            self.U1 = synth.single_mode_div_free(grid, (1, 2, 0))
            self.U2 = synth.single_mode_div_free(grid, (0, 2, 1), phase=0.7)
            self.TH = synth.single_mode_scalar(grid, (1, 1, 0), phase=0.3)
            self.PH = synth.single_mode_scalar(grid, (0, 1, 1), phase=1.1)

    # time profiles and their derivatives
    def _a(self, t):
        return 1.0 + 0.5 * math.sin(3.0 * t)

    def _da(self, t):
        return 1.5 * math.cos(3.0 * t)

    def _b(self, t):
        return 0.4 * math.cos(2.0 * t)

    def _db(self, t):
        return -0.8 * math.sin(2.0 * t)

    def _c(self, t):
        return 0.8 + 0.3 * math.sin(t)

    def _dc(self, t):
        return 0.3 * math.cos(t)

    def _d(self, t):
        return 0.5 + 0.2 * math.cos(2.0 * t)

    def _dd(self, t):
        return -0.4 * math.sin(2.0 * t)

    def velocity(self, t):
        return self._a(t) * self.U1 + self._b(t) * self.U2

    def theta(self, t):
        return self._c(t) * self.TH

    def phi(self, t):
        return self._d(t) * self.PH

    def _buoyancy(self, t):
        from obflow.dynamics import gravity_components

        g = gravity_components(self.params, self.grid)
        if g is None or self.params.alpha == 0.0:
            return None
        scalar = self.theta(t).to_physical().data + self.phi(t).to_physical().data
        return leray_project(
            VectorField.from_arrays(
                self.grid, [self.params.alpha * scalar * gi for gi in g]
            )
        )

    def forcing(self) -> ob.Forcing:
        def f(t):
            us = self.velocity(t)
            out = (
                self._da(t) * self.U1
                + self._db(t) * self.U2
                + leray_project(ob.convective_vector(us, us))
                - self.params.mu * laplacian_vector(us)
            )
            buoy = self._buoyancy(t)
            if buoy is not None:
                out = out - buoy
            return out

        def ell(t):
            us = self.velocity(t)
            return (
                self._dc(t) * self.TH
                + ob.convective_scalar(us, self.theta(t))
                - self.params.kappa1 * ob.laplacian(self.theta(t))
            )

        def h(t):
            us = self.velocity(t)
            return (
                self._dd(t) * self.PH
                + ob.convective_scalar(us, self.phi(t))
                - self.params.kappa2 * ob.laplacian(self.phi(t))
            )

        return ob.Forcing(velocity=f, heat=ell, solute=h)

    def initial(self) -> ob.SimState:
        return ob.SimState.make(self.velocity(0.0), self.theta(0.0), self.phi(0.0))

    def error_at(self, T: float, dt: float) -> float:
        result = ob.run(
            self.initial(),
            self.params,
            self.forcing(),
            T,
            options=ob.SolverOptions(max_dt=dt, sample_every=10**9),
        )
        assert result.reason == "completed"
        final = result.state
        return (
            ob.l2_norm(final.u - self.velocity(T).to_spectral())
            + ob.l2_norm(final.theta - self.theta(T).to_spectral())
            + ob.l2_norm(final.phi - self.phi(T).to_spectral())
        )


def random_samples(rng, size_range=(16, 512), signed=True) -> ob.WeightedSamples:
    n = int(rng.integers(*size_range))
    values = rng.lognormal(0.0, 1.5, n)
    if signed:
        values *= rng.choice([-1.0, 1.0], n)
    # inject ties and zeros so the step structure is exercised
    if n >= 8:
        m = n // 8
        values[:m] = values[m : 2 * m]
        values[2 * m : 2 * m + n // 16] = 0.0
    weights = rng.uniform(0.2, 2.0, n)
    return ob.WeightedSamples(values, weights)
