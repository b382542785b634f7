from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diracnls.core import TorusGrid, hs_norm
from diracnls.errors import BlowUpError, StepSizeError
from diracnls.nld import (
    NLDParams,
    SpinorField,
    coupling_matrix,
    nld_energy,
    nld_evolve,
    nld_hs_norm,
    nld_mass,
    nld_step,
    nonlinear_substep,
    transport_multipliers,
)

GRID = TorusGrid(32, 256)
DEFAULT = NLDParams(6.260868340794987, 1.0035512283027954, -0.126370358503908, 1.0)


def diff_norm(a: SpinorField, b: SpinorField) -> float:
    return np.hypot(hs_norm(a.minus - b.minus, a.grid), hs_norm(a.plus - b.plus, a.grid))


class TestCoupling:
    def test_single_component(self):
        G = coupling_matrix(1.0, 0.0, NLDParams(1, 1, 0))
        assert np.allclose(G, np.diag([1, 2]))

    def test_zero(self):
        assert np.all(coupling_matrix(0, 0, DEFAULT) == 0)

    def test_mixed(self):
        G = coupling_matrix(1.0, 1j, NLDParams(1, 1, 0.5))
        assert np.allclose(G, [[3, 0.5j], [-0.5j, 3]])

    @given(st.complex_numbers(max_magnitude=10), st.complex_numbers(max_magnitude=10))
    def test_hermitian(self, a, b):
        G = coupling_matrix(a, b, DEFAULT)
        assert np.allclose(G, G.conj().T, atol=1e-12)

    def test_broadcast(self):
        G = coupling_matrix(np.ones(5), np.zeros(5), DEFAULT)
        assert G.shape == (5, 2, 2)


class TestStep:
    def test_unit_multipliers(self):
        for m in transport_multipliers(GRID, 6.26, 0.013):
            assert np.max(np.abs(np.abs(m) - 1)) <= 1e-14

    def test_linear_transport(self):
        p = NLDParams(6.26, 1, 0, kappa=0, dt=0.01)
        f = SpinorField.gaussian(GRID, 1.0, 0.3, 1.0)
        out = nld_evolve(f, p, 1.0, [1.0])[0]
        x = GRID.x
        exact_m = np.exp(-(((x - 6.26 + 16) % 32 - 16) ** 2) / 2)
        exact_p = 0.3 * np.exp(-(((x + 6.26 + 16) % 32 - 16) ** 2) / 2)
        assert np.max(np.abs(out.minus - exact_m)) <= 1e-10
        assert np.max(np.abs(out.plus - exact_p)) <= 1e-10

    def test_transport_quarter_time(self):
        p = NLDParams(2 * np.pi, 1, 0, kappa=0)
        f = SpinorField.gaussian(GRID, 1.0, 0.0, 1.0)
        out = nld_evolve(f, p, 0.25, [0.25])[0]
        shifted = SpinorField.gaussian(GRID, 1.0, 0.0, 1.0, center=np.pi / 2)
        assert diff_norm(out, shifted) <= 1e-8

    def test_constant_data_phase(self):
        a, b = 0.7, 0.4 - 0.2j
        p = NLDParams(6.26, 1.3, 0.0, kappa=1, dt=1 / 400)
        f = SpinorField(GRID, np.full(256, a), np.full(256, b))
        out = nld_evolve(f, p, 1.0, [1.0])[0]
        w = 1.3 * (abs(a) ** 2 + 2 * abs(b) ** 2)
        assert np.max(np.abs(out.minus - a * np.exp(-1j * w))) <= 1e-8

    def test_pointwise_invariant(self):
        rng = np.random.default_rng(3)
        am = rng.standard_normal(64) + 1j * rng.standard_normal(64)
        ap = rng.standard_normal(64) + 1j * rng.standard_normal(64)
        bm, bp = nonlinear_substep(am, ap, DEFAULT, 0.01)
        n0 = np.abs(am) ** 2 + np.abs(ap) ** 2
        assert np.max(np.abs(np.abs(bm) ** 2 + np.abs(bp) ** 2 - n0)) <= 1e-12 * np.max(n0)

    def test_reversible_linear(self):
        p = NLDParams(6.26, 1, 0, kappa=0, dt=0.01)
        f = SpinorField.gaussian(GRID, 1.0, 0.5, 1.0)
        g = f
        for _ in range(50):
            g = nld_step(g, p)
        for _ in range(50):
            g = nld_step(g, p, -p.dt)
        assert diff_norm(f, g) <= 1e-11

    @settings(max_examples=10, deadline=None)
    @given(st.floats(0, 2 * np.pi))
    def test_gauge_covariance(self, theta):
        f = SpinorField.gaussian(GRID, 1.0, 0.5, 1.0)
        ph = np.exp(1j * theta)
        g = SpinorField(GRID, ph * f.minus, ph * f.plus)
        a = nld_evolve(f, DEFAULT, 0.1, [0.1])[0]
        b = nld_evolve(g, DEFAULT, 0.1, [0.1])[0]
        assert np.hypot(hs_norm(ph * a.minus - b.minus, GRID), hs_norm(ph * a.plus - b.plus, GRID)) <= 1e-11

    def test_cfl_guard(self):
        f = SpinorField.gaussian(GRID, 10.0, 10.0, 1.0)
        with pytest.raises(StepSizeError):
            nld_step(f, NLDParams(1, 1, 0, dt=0.01))


class TestEvolve:
    def test_zero_time(self):
        f = SpinorField.gaussian(GRID, 1.0, 0.5, 1.0)
        out = nld_evolve(f, DEFAULT, 0.0, [0.0])
        assert out[0] is f

    def test_lands_on_sample_times(self):
        f = SpinorField.gaussian(GRID, 1.0, 0.5, 1.0)
        ts = [0.0, 0.0013, 0.1, 0.25]
        out = nld_evolve(f, DEFAULT, 0.25, ts)
        assert [s.t for s in out] == ts

    def test_mass_conservation(self):
        f = SpinorField.gaussian(GRID, 1.0, 0.5, 1.0)
        out = nld_evolve(f, DEFAULT, 1.0, np.linspace(0, 1, 5))
        m0 = nld_mass(f)
        assert max(abs(nld_mass(s) - m0) for s in out) / m0 <= 1e-10

    def test_energy_drift_small(self):
        f = SpinorField.gaussian(GRID, 1.0, 0.5, 1.0)
        out = nld_evolve(f, DEFAULT, 1.0, [0.0, 1.0])
        e0 = nld_energy(out[0], DEFAULT)
        assert abs(nld_energy(out[1], DEFAULT) - e0) / abs(e0) < 1e-4

    def test_self_convergence_order(self):
        f = SpinorField.gaussian(GRID, 1.0, 0.5, 1.0)
        runs = [nld_evolve(f, replace(DEFAULT, dt=dt), 1.0, [1.0])[0] for dt in (1e-2, 5e-3, 2.5e-3)]
        d1, d2 = diff_norm(runs[0], runs[1]), diff_norm(runs[1], runs[2])
        assert abs(np.log2(d1 / d2) - 2.0) <= 0.2
        assert 3.5 <= d1 / d2 <= 4.5

    def test_blow_up_guard(self, monkeypatch):
        import diracnls.nld as nld

        # a guard below the initial norm must trip on the first step
        monkeypatch.setattr(nld, "BLOWUP_FACTOR", 0.5)
        f = SpinorField.gaussian(GRID, 1.0, 0.5, 1.0)
        with pytest.raises(BlowUpError) as info:
            nld_evolve(f, DEFAULT, 0.5, [0.5])
        assert info.value.t == pytest.approx(DEFAULT.dt)

    def test_bad_samples(self):
        f = SpinorField.gaussian(GRID, 1.0, 0.5, 1.0)
        with pytest.raises(ValueError):
            nld_evolve(f, DEFAULT, 0.1, [0.2])

    def test_params_validation(self):
        with pytest.raises(ValueError):
            NLDParams(1, 1, 0, kappa=2)
        with pytest.raises(ValueError):
            NLDParams(1, 1, 0, dt=0)

    def test_hs_norm_of_spinor(self):
        f = SpinorField.gaussian(GRID, 1.0, 0.0, 1.0)
        assert abs(nld_hs_norm(f, 0) ** 2 - np.sqrt(np.pi)) < 1e-10
