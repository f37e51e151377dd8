"""Grid, transform and spectral-operator contracts."""

import math

import numpy as np
import pytest

import obflow as ob
from obflow.fields import DIVERGENCE_FLAG, laplacian_vector
from obflow import synth


def rel(a, b):
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


class TestGrid:
    @pytest.mark.parametrize("bad", [{"dim": 4}, {"n": 7}, {"n": 4}, {"n": 24}, {"length": 0.0}])
    def test_rejects_bad_parameters(self, bad):
        kwargs = {"dim": 2, "n": 32, "length": 1.0}
        kwargs.update(bad)
        with pytest.raises(ValueError):
            ob.Grid(**kwargs)

    @pytest.mark.parametrize("dim,n,L", [(2, 32, 1.0), (2, 64, 2 * math.pi), (3, 16, 3.5)])
    def test_cell_volume_identity_exact(self, dim, n, L):
        g = ob.Grid(dim, n, L)
        assert g.cell_volume * n**dim == L**dim

    def test_equality_by_value(self):
        assert ob.Grid(2, 32) == ob.Grid(2, 32)
        assert ob.Grid(2, 32) != ob.Grid(2, 64)


class TestTransforms:
    def test_constant_field_has_single_mode(self, grid2):
        c = 2.5
        f = ob.ScalarField(grid2, np.full(grid2.shape, c))
        fh = f.to_spectral().data
        expected = c * grid2.n ** (grid2.dim / 2)
        assert rel(fh[0, 0].real, expected) < 1e-14
        fh2 = fh.copy()
        fh2[0, 0] = 0.0
        assert np.max(np.abs(fh2)) < 1e-12 * expected

    def test_pure_tone_two_conjugate_modes(self):
        g = ob.Grid(2, 16, 2.0)
        x, _ = g.coordinates()
        f = ob.ScalarField(g, np.sin(2 * math.pi * x / g.length))
        fh = f.to_spectral().data
        nonzero = np.argwhere(np.abs(fh) > 1e-10 * np.abs(fh).max())
        assert len(nonzero) == 2
        assert {tuple(idx) for idx in nonzero} == {(1, 0), (g.n - 1, 0)}

    def test_round_trip_identity(self, grid2, rng):
        f = ob.ScalarField(grid2, rng.standard_normal(grid2.shape))
        back = f.to_spectral().to_physical()
        assert np.max(np.abs(back.data - f.data)) < 1e-12 * np.max(np.abs(f.data))

    def test_zero_mean_flag_zeroes_origin(self, grid2, rng):
        f = ob.ScalarField(grid2, rng.standard_normal(grid2.shape) + 5.0)
        fz = f.with_zero_mean()
        assert fz.to_spectral().data[0, 0] == 0.0
        assert abs(fz.to_physical().mean()) < 1e-14

    def test_shape_mismatch_rejected(self, grid2):
        with pytest.raises(ValueError):
            ob.ScalarField(grid2, np.zeros((4, 4)))


class TestDifferentialOperators:
    def test_gradient_of_constant_vanishes(self, grid2):
        f = ob.ScalarField(grid2, np.full(grid2.shape, 3.0))
        assert ob.l2_norm(ob.gradient(f)) < 1e-13

    def test_laplacian_eigenfunction(self, grid2):
        x, _ = grid2.coordinates()
        k1 = 2 * math.pi / grid2.length
        f = ob.ScalarField(grid2, np.sin(k1 * x))
        lap = ob.laplacian(f).to_physical()
        assert np.max(np.abs(lap.data + k1**2 * f.data)) < 1e-12 * k1**2

    @pytest.mark.parametrize("dim", [2, 3])
    def test_divergence_of_gradient_is_laplacian(self, dim, rng):
        g = ob.Grid(dim, 16)
        f = synth.random_scalar(g, rng)
        a = ob.divergence(ob.gradient(f))
        b = ob.laplacian(f)
        assert ob.l2_norm(a - b) < 1e-10 * ob.l2_norm(b)

    def test_grid_mismatch_rejected(self, grid2, rng):
        other = ob.Grid(2, 64)
        f = synth.random_scalar(grid2, rng)
        h = synth.random_scalar(other, rng)
        with pytest.raises(ob.GridMismatchError):
            ob.inner_product(f, h)


class TestLerayProjection:
    def test_annihilates_gradients(self, grid2, rng):
        chi = synth.random_scalar(grid2, rng)
        v = ob.gradient(chi)
        assert ob.l2_norm(ob.leray_project(v)) < 1e-10 * ob.l2_norm(v)

    def test_divergence_free_fixed_point(self, grid2, rng):
        u = synth.random_div_free(grid2, rng)
        pu = ob.leray_project(u)
        assert ob.l2_norm(pu - u) < 1e-12 * ob.l2_norm(u)

    def test_output_divergence_and_idempotence(self, grid2, rng):
        for _ in range(10):
            v = synth.random_vector(grid2, rng)
            pv = ob.leray_project(v)
            assert ob.l2_norm(ob.divergence(pv)) < 1e-10 * max(ob.grad_l2(pv), 1e-30)
            ppv = ob.leray_project(pv)
            assert ob.l2_norm(ppv - pv) < 1e-12 * max(ob.l2_norm(pv), 1e-30)

    def test_zero_mode_untouched(self, grid2):
        arrays = [np.full(grid2.shape, 1.5), np.full(grid2.shape, -0.5)]
        v = ob.VectorField.from_arrays(grid2, arrays)
        pv = ob.leray_project(v).to_physical()
        assert rel(pv.components[0].data.mean(), 1.5) < 1e-14
        assert rel(pv.components[1].data.mean(), -0.5) < 1e-14


class TestStokesOperator:
    def test_eigenmode_relation(self, grid2):
        mode = (2, 1)
        u = synth.single_mode_div_free(grid2, mode)
        ksq = sum((2 * math.pi / grid2.length * m) ** 2 for m in mode)
        au = ob.stokes_apply(u)
        assert ob.l2_norm(au - ksq * u.to_spectral()) < 1e-10 * ob.l2_norm(au)

    def test_zero_input(self, grid2):
        u = ob.SimState.zero(grid2).u
        assert ob.l2_norm(ob.stokes_apply(u)) == 0.0

    def test_matches_negative_laplacian_on_div_free(self, grid2, rng):
        u = synth.random_div_free(grid2, rng)
        au = ob.stokes_apply(u)
        ref = -1.0 * laplacian_vector(u)
        assert ob.l2_norm(au - ref) < 1e-10 * ob.l2_norm(ref)
        assert DIVERGENCE_FLAG not in au.flags

    def test_flags_divergent_input(self, grid2, rng):
        v = synth.random_vector(grid2, rng)  # not projected
        assert DIVERGENCE_FLAG in ob.stokes_apply(v).flags


class TestConvection:
    def test_zero_velocity(self, grid2, rng):
        u = ob.SimState.zero(grid2).u
        f = synth.random_scalar(grid2, rng)
        assert ob.l2_norm(ob.convective_scalar(u, f)) == 0.0

    def test_uniform_advection_of_tone(self, grid2):
        c = (1.7, 0.0)
        u = ob.VectorField.from_arrays(
            grid2, [np.full(grid2.shape, ci) for ci in c]
        )
        k1 = 2 * math.pi / grid2.length
        x, _ = grid2.coordinates()
        f = ob.ScalarField(grid2, np.sin(k1 * x))
        adv = ob.convective_scalar(u, f).to_physical()
        expected = c[0] * k1 * np.cos(k1 * x)
        assert np.max(np.abs(adv.data - expected)) < 1e-12 * k1

    def test_skew_symmetry(self, grid2, rng):
        for _ in range(10):
            u = synth.random_div_free(grid2, rng)
            f = synth.random_scalar(grid2, rng)
            pairing = ob.inner_product(ob.convective_scalar(u, f), f)
            scale = ob.l2_norm(u) * ob.grad_l2(f) * ob.l2_norm(f)
            assert abs(pairing) <= 1e-8 * scale

    def test_vector_skew_symmetry(self, grid2, rng):
        u = synth.random_div_free(grid2, rng)
        v = synth.random_div_free(grid2, rng)
        pairing = ob.inner_product(ob.convective_vector(u, v), v)
        scale = ob.l2_norm(u) * ob.grad_l2(v) * ob.l2_norm(v)
        assert abs(pairing) <= 1e-8 * scale


class TestInnerProductsAndNorms:
    def test_inner_is_norm_squared(self, grid2, rng):
        f = synth.random_scalar(grid2, rng)
        assert rel(ob.inner_product(f, f), ob.l2_norm(f) ** 2) < 1e-12

    def test_constant_norm(self, grid2):
        c = 1.3
        f = ob.ScalarField(grid2, np.full(grid2.shape, c))
        assert rel(ob.l2_norm(f) ** 2, c**2 * grid2.volume) < 1e-13

    def test_parseval(self, grid2, rng):
        for _ in range(10):
            f = ob.ScalarField(grid2, rng.standard_normal(grid2.shape))
            phys = ob.l2_norm(f)
            spec = ob.l2_norm(f.to_spectral())
            assert rel(phys, spec) < 1e-12

    def test_grad_norm_matches_gradient(self, grid2, rng):
        f = synth.random_scalar(grid2, rng)
        assert rel(ob.grad_l2(f), ob.l2_norm(ob.gradient(f))) < 1e-12
