from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diracnls.core import TorusGrid, hs_eps_norm
from diracnls.errors import GridError, SolvabilityError
from diracnls.multiscale import (
    apply_shifted_hill,
    assemble_ansatz,
    build_u0,
    build_u1,
    embed_fast_slow,
    forcing,
    kernel_projections,
    nld_rhs_envelope,
    residual_rho,
    solvability_check,
)
from diracnls.nld import NLDParams, SpinorField, nld_mass, nld_step


def zero_spinor(grid):
    z = np.zeros(grid.points)
    return SpinorField(grid, z, z)


def derivative(grid, f):
    return np.fft.ifft(1j * grid.xi * np.fft.fft(f))


class TestU0:
    def test_free_constant(self, dp_free, env_grid):
        sp = SpinorField(env_grid, np.ones(256), np.zeros(256))
        u0 = build_u0(dp_free, sp)
        y = np.linspace(0, 1, 7)
        assert np.max(np.abs(u0.evaluate(y) - np.exp(1j * np.pi * y)[None, :])) < 1e-13
        fine = TorusGrid.resolving(32, 1 / 8)
        vals = u0.on_fine_grid(fine, 1 / 8)
        assert np.max(np.abs(vals - np.exp(1j * np.pi * fine.x / (1 / 8)))) < 1e-12

    def test_cell_parseval(self, dp25, spinor):
        u0 = build_u0(dp25, spinor)
        dens = np.abs(spinor.minus) ** 2 + np.abs(spinor.plus) ** 2
        assert np.max(np.abs(u0.cell_mass() - dens)) <= 1e-10

    def test_zero(self, dp25, env_grid):
        assert np.all(build_u0(dp25, zero_spinor(env_grid)).coeffs == 0)

    @pytest.mark.parametrize("eps", [1 / 3, 0.2])
    def test_incommensurate(self, dp25, spinor, eps):
        u0 = build_u0(dp25, spinor)
        with pytest.raises(GridError):
            u0.on_fine_grid(TorusGrid(32, 2**15), eps)


class TestEnvelopeRhs:
    def test_constant_linear(self, dp25, env_grid):
        sp = SpinorField(env_grid, np.full(256, 0.3), np.full(256, 0.2j))
        d = nld_rhs_envelope(dp25, sp, NLDParams.from_dirac(dp25, 0))
        assert np.max(np.abs(d.minus)) < 1e-13 and np.max(np.abs(d.plus)) < 1e-13

    def test_single_mode(self, dp25, env_grid):
        e = np.exp(2j * np.pi * env_grid.x / 32)
        sp = SpinorField(env_grid, e, np.zeros(256))
        d = nld_rhs_envelope(dp25, sp, NLDParams.from_dirac(dp25, 0))
        assert np.max(np.abs(d.minus + dp25.c_sharp * (2j * np.pi / 32) * e)) < 1e-12

    def test_consistent_with_stepper(self, dp25, spinor, nldp):
        d = nld_rhs_envelope(dp25, spinor, nldp)
        errs = []
        for h in (1e-3, 5e-4):
            s = nld_step(spinor, nldp, h)
            errs.append(np.max(np.abs((s.minus - spinor.minus) / h - d.minus)))
        assert 1.8 < errs[0] / errs[1] < 2.2  # first-order consistency


class TestU1:
    def test_trivial(self, dp25, env_grid):
        sp = SpinorField(env_grid, np.full(256, 0.7), np.zeros(256))
        b = build_u1(dp25, sp, NLDParams.from_dirac(dp25, 0))
        assert np.max(np.abs(b.u1_coeffs)) < 1e-13

    def test_orthogonal_to_kernel(self, dp25, spinor, nldp):
        b = build_u1(dp25, spinor, nldp)
        qm, qp = kernel_projections(b.u1_coeffs, dp25.phi_minus.fourier_coeffs, dp25.phi_plus.fourier_coeffs)
        assert max(np.max(np.abs(qm)), np.max(np.abs(qp))) <= 1e-10

    def test_resolvent_round_trip(self, dp25, spinor, nldp):
        b = build_u1(dp25, spinor, nldp)
        a, c = dp25.phi_minus.fourier_coeffs, dp25.phi_plus.fourier_coeffs
        F = forcing(dp25, spinor, nldp)
        pm, pp = kernel_projections(F, a, c)
        back = apply_shifted_hill(dp25, b.u1_coeffs)
        assert np.max(np.linalg.norm(back - (F - np.outer(pm, a) - np.outer(pp, c)), axis=1)) <= 1e-8

    def test_rejects_non_solution(self, dp25, env_grid, nldp):
        # a spinor paired with the wrong coupling constants does not solve the effective system
        sp = SpinorField.gaussian(env_grid, 1.0, 0.5, 1.0)
        wrong = replace(nldp, c_sharp=-nldp.c_sharp)
        with pytest.raises(SolvabilityError):
            build_u1(dp25, sp, wrong)

    def test_linear_superposition(self, dp25, env_grid):
        p = NLDParams.from_dirac(dp25, 0)
        rng = np.random.default_rng(7)
        x = env_grid.x

        def rand_env():
            a = rng.standard_normal(4) + 1j * rng.standard_normal(4)
            g = np.exp(-x**2 / 2)
            return SpinorField(env_grid, g * (a[0] + a[1] * x), g * (a[2] + a[3] * x**2))

        s1, s2 = rand_env(), rand_env()
        s12 = SpinorField(env_grid, s1.minus + s2.minus, s1.plus + s2.plus)
        u = [build_u1(dp25, s, p).u1_coeffs for s in (s1, s2, s12)]
        assert np.max(np.abs(u[0] + u[1] - u[2])) <= 1e-10


class TestAssembly:
    def test_free_gaussian(self, dp_free, env_grid):
        eps = 1 / 8
        sp = SpinorField.gaussian(env_grid, 1.0, 0.0, 1.0)
        b = build_u1(dp_free, sp, NLDParams.from_dirac(dp_free, 0), epsilon=eps)
        fine = TorusGrid.resolving(32, eps)
        psi = assemble_ansatz(b, fine, 0.0, include_u1=False)
        exact = np.exp(-fine.x**2 / 2) * np.exp(1j * np.pi * fine.x / eps)
        assert np.max(np.abs(psi.values - exact)) < 1e-12

    @pytest.mark.parametrize("eps", [1 / 8, 1 / 16])
    def test_two_scale_parseval(self, dp25, spinor, nldp, eps):
        b = build_u1(dp25, spinor, nldp, epsilon=eps)
        psi = assemble_ansatz(b, TorusGrid.resolving(32, eps), 0.0, include_u1=False)
        assert abs(psi.l2_norm() - np.sqrt(nld_mass(spinor))) <= 1e-8

    def test_phase_period(self, dp25, spinor, nldp):
        eps = 1 / 8
        b = build_u1(dp25, spinor, nldp, epsilon=eps)
        fine = TorusGrid.resolving(32, eps)
        t0 = 0.1
        a = assemble_ansatz(b, fine, t0)
        c = assemble_ansatz(b, fine, t0 + 2 * np.pi * eps / dp25.mu_star)
        assert np.max(np.abs(a.values - c.values)) < 1e-11

    def test_embedding_matches_interpolation(self, dp25, spinor):
        # direct evaluation of sum_m A_m(x) exp(i (pi + 2 pi m) x / eps) at fine points
        eps = 1 / 8
        fine = TorusGrid.resolving(32, eps)
        coeffs = build_u0(dp25, spinor).coeffs
        vals = embed_fast_slow(coeffs, spinor.grid, fine, eps)
        step = fine.points // spinor.grid.points
        x = fine.x[::step]
        wn = np.pi + 2 * np.pi * np.arange(-24, 25)
        direct = np.sum(coeffs * np.exp(1j * np.outer(x / eps, wn)), axis=1)
        assert np.max(np.abs(vals[::step] - direct)) < 1e-12

    def test_requires_epsilon(self, dp25, spinor, nldp):
        b = build_u1(dp25, spinor, nldp)
        with pytest.raises(GridError):
            assemble_ansatz(b, TorusGrid(32, 8192), 0.0)


class TestResidual:
    def test_zero_spinor(self, dp25, env_grid, nldp):
        b = build_u1(dp25, zero_spinor(env_grid), nldp, epsilon=1 / 8)
        r, rep = residual_rho(b, nldp, TorusGrid.resolving(32, 1 / 8))
        assert rep["norm"] == 0 and np.all(r.values == 0)

    def test_fd_step_insensitive(self, dp25, spinor, nldp):
        eps = 1 / 16
        b = build_u1(dp25, spinor, nldp, epsilon=eps)
        fine = TorusGrid.resolving(32, eps)
        _, r1 = residual_rho(b, nldp, fine)
        _, r2 = residual_rho(b, nldp, fine, dt_fd=0.5 * r1["dt_fd"])
        assert abs(r1["norm"] - r2["norm"]) <= 0.01 * r1["norm"]

    def test_quadratic_scaling(self, dp25, spinor, nldp):
        norms = []
        for eps in (1 / 8, 1 / 16, 1 / 32):
            b = build_u1(dp25, spinor, nldp, epsilon=eps)
            norms.append(residual_rho(b, nldp, TorusGrid.resolving(32, eps))[1]["norm"])
        ratios = np.array(norms[:-1]) / np.array(norms[1:])
        slope = np.polyfit(np.log([1 / 8, 1 / 16, 1 / 32]), np.log(norms), 1)[0]
        assert np.all((3.5 <= ratios) & (ratios <= 4.5))
        assert abs(slope - 2.0) <= 0.3


class TestSolvability:
    def test_nld_substitution(self, dp25, spinor, nldp):
        assert solvability_check(dp25, spinor, nldp)["max"] <= 1e-8

    @pytest.mark.parametrize("kappa", [-1, 0, 1])
    def test_other_kappas(self, dp25, spinor, kappa):
        p = NLDParams.from_dirac(dp25, kappa)
        assert solvability_check(dp25, spinor, p)["max"] <= 1e-8

    def test_transport_left_over(self, dp25, spinor, env_grid):
        p = NLDParams.from_dirac(dp25, 0)
        rep = solvability_check(dp25, spinor, p, dalpha=zero_spinor(env_grid))
        gm = dp25.c_sharp * np.abs(derivative(env_grid, spinor.minus))
        gp = dp25.c_sharp * np.abs(derivative(env_grid, spinor.plus))
        assert np.max(np.abs(np.abs(rep["proj_minus"]) - gm)) <= 1e-8
        assert np.max(np.abs(np.abs(rep["proj_plus"]) - gp)) <= 1e-8
        assert rep["max"] > 1

    def test_zero(self, dp25, env_grid, nldp):
        assert solvability_check(dp25, zero_spinor(env_grid), nldp)["max"] == 0

    @settings(max_examples=10, deadline=None)
    @given(st.floats(0, 2 * np.pi))
    def test_global_phase_invariance(self, theta):
        from conftest import V25
        from diracnls.diracpoint import dirac_point

        dp = dirac_point(V25, offsets=None)
        grid = TorusGrid(32, 256)
        sp = SpinorField.gaussian(grid, 1.0, 0.5, 1.0)
        p = NLDParams.from_dirac(dp, 1)
        ph = np.exp(1j * theta)
        r0 = solvability_check(dp, sp, p)["max"]
        r1 = solvability_check(dp, SpinorField(grid, ph * sp.minus, ph * sp.plus), p)["max"]
        assert abs(r0 - r1) <= 1e-12


def test_initial_offset_is_order_eps(dp25, spinor, nldp):
    offs = []
    for eps in (1 / 8, 1 / 16):
        b = build_u1(dp25, spinor, nldp, epsilon=eps)
        fine = TorusGrid.resolving(32, eps)
        offs.append(hs_eps_norm(assemble_ansatz(b, fine, 0.0) - assemble_ansatz(b, fine, 0.0, include_u1=False)))
    assert 1.8 < offs[0] / offs[1] < 2.2
