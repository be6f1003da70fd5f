import math

import numpy as np
import pytest

from bec_cosmo.closed_form import FamilyKind, GammaFamily, Model
from bec_cosmo.cosmology_map import (
    CosmologyConfig,
    MappingWarning,
    anisotropy_recover,
    bianchi_residuals,
    constancy_check,
    continuity_residual,
    cosmic_time,
    eos_residual,
    flrw_residuals,
    map_bianchi,
    map_flrw,
    shear_D,
    table_identity_residual,
)
from bec_cosmo.moment_dynamics import ClosureTrap, ConstantTrap, MomentState, closure_initial_state, evolve
from bec_cosmo.ode_engine import fd_derivative

K = FamilyKind


def static(I2=1.0):
    # omega = 1 fixed point with I4 = I2/2, so lambda = I2^2
    return evolve(MomentState(0.0, 1.0, I2, 0.0, I2 / 2), ConstantTrap(1.0), 2.0, samples=41)


@pytest.fixture(scope="module")
def stiff_run():
    fam = GammaFamily(K.STIFF, alpha=1.0, lam=1.0, Lambda=3.0)
    traj = evolve(closure_initial_state(fam, 1.0), ClosureTrap(fam), 0.5, rtol=1e-12, samples=2001)
    return fam, traj, CosmologyConfig(Model.FLRW, d=4, Lambda=3.0, curvature_k=1, gamma=fam.gamma)


@pytest.fixture(scope="module")
def bianchi_run():
    fam = GammaFamily(K.BIANCHI_GAMMA2, alpha=1.0, lam=-3.0, Lambda=1.0)
    # rho falls well below Lambda here, so the relative EoS residual needs the tightest rtol
    traj = evolve(closure_initial_state(fam, 1.0), ClosureTrap(fam), 1.0, rtol=1e-13, samples=2001)
    cfg = CosmologyConfig(Model.BIANCHI_I, d=4, Lambda=1.0, gamma=2.0, shear_constants=(1.0, -1.0, 0.0))
    return fam, traj, cfg


class TestFlrwMap:
    def test_static_row(self):
        s = map_flrw(static(), CosmologyConfig(Model.FLRW, d=4))
        assert np.allclose(s.scale, 1.0) and np.allclose(s.H, 0.0, atol=1e-14)
        assert np.allclose(s.rho_phi, 3.0) and np.allclose(s.p_phi, -1.0)
        fried, cont = flrw_residuals(s, CosmologyConfig(Model.FLRW, d=4, curvature_k=1))
        assert fried <= 1e-14 and cont <= 1e-12

    def test_sign_of_H(self):
        traj = evolve(MomentState(0.0, 1.0, 1.0, -0.4, 1.0), ConstantTrap(1.0), 0.3, samples=31)
        s = map_flrw(traj, CosmologyConfig(curvature_k=0))
        assert np.all(np.sign(s.H) == np.sign(s.I3))

    def test_table_identity(self, stiff_run):
        _, traj, cfg = stiff_run
        assert table_identity_residual(map_flrw(traj, cfg)) <= 1e-12

    def test_closure_residuals(self, stiff_run):
        fam, traj, cfg = stiff_run
        s = map_flrw(traj, cfg)
        fried, cont = flrw_residuals(s, cfg)
        assert fried <= 1e-6 and cont <= 1e-5
        assert eos_residual(s, fam.gamma) <= 1e-10

    def test_density_scaling(self, stiff_run):
        # rho scales as a^(-gamma (d-1)) on a closure run: the Lambda shift cancels
        fam, traj, cfg = stiff_run
        s = map_flrw(traj, cfg)
        ok, dev = constancy_check(s.rho_phi, s.scale, fam.gamma * 3)
        assert ok, dev

    def test_rtol_convergence(self):
        fam = GammaFamily(K.STIFF, alpha=1.0, lam=1.0, Lambda=3.0)
        cfg = CosmologyConfig(Model.FLRW, d=4, Lambda=3.0, curvature_k=1)
        res = []
        for rtol in (1e-7, 1e-9, 1e-11):
            traj = evolve(closure_initial_state(fam, 1.0), ClosureTrap(fam), 0.5, rtol=rtol, samples=501)
            res.append(flrw_residuals(map_flrw(traj, cfg), cfg)[0])
        assert res[1] <= res[0] * 1.01 + 1e-13 and res[2] <= res[1] * 1.01 + 1e-13

    def test_curvature_warnings(self):
        traj = evolve(MomentState(0.0, 1.0, 1.0, 0.0, 0.7), ConstantTrap(1.0), 0.5, samples=21)
        with pytest.warns(MappingWarning):
            s = map_flrw(traj, CosmologyConfig())
        assert s.metadata["warnings"]
        with pytest.warns(MappingWarning):
            map_flrw(static(), CosmologyConfig(curvature_k=0))

    def test_fluid_term_shifts_residual(self):
        s = map_flrw(static(), CosmologyConfig(curvature_k=1))
        fried, _ = flrw_residuals(s, CosmologyConfig(curvature_k=1, D_fluid=3.0, n_fluid=2))
        assert fried == pytest.approx(1.0, rel=1e-12)

    def test_errors(self, bianchi_run):
        _, traj, cfg = bianchi_run
        with pytest.raises(ValueError):
            map_flrw(traj, cfg)
        with pytest.raises(ValueError):
            map_flrw(static(), CosmologyConfig(), samples=3)
        with pytest.raises(ValueError):
            CosmologyConfig(d=2)
        with pytest.raises(ValueError):
            CosmologyConfig(curvature_k=2)
        with pytest.raises(ValueError):
            CosmologyConfig(Model.BIANCHI_I, shear_constants=(1.0, 1.0, 0.0))


class TestBianchiMap:
    def test_unit_scale(self):
        for d in (3, 4, 6):
            s = map_bianchi(static(), CosmologyConfig(Model.BIANCHI_I, d=d))
            assert np.allclose(s.scale, 1.0)

    def test_D_from_lambda(self):
        traj = evolve(MomentState(0.0, 1.0, 1.0, 0.0, 0.0), ConstantTrap(0.0), 0.5, samples=21)
        assert traj.lam == 0.0
        assert map_bianchi(traj, CosmologyConfig(Model.BIANCHI_I)).metadata["D"] == 0.0

    def test_D_reference(self, bianchi_run):
        _, traj, cfg = bianchi_run
        assert map_bianchi(traj, cfg).metadata["D"] == pytest.approx(1.0, rel=1e-12)

    def test_positive_lambda_warns(self):
        with pytest.warns(MappingWarning):
            s = map_bianchi(static(), CosmologyConfig(Model.BIANCHI_I))
        assert s.metadata["D"] < 0

    def test_static_isotropic_limit(self):
        # lambda = 0 at rest: I4 = 0, omega = 0, so rho = p = 0 and Lambda = 0
        traj = evolve(MomentState(0.0, 1.0, 1.0, 0.0, 0.0), ConstantTrap(0.0), 0.5, samples=21)
        cfg = CosmologyConfig(Model.BIANCHI_I)
        assert bianchi_residuals(map_bianchi(traj, cfg), cfg) == (0.0, 0.0)

    def test_closure_residuals(self, bianchi_run):
        fam, traj, cfg = bianchi_run
        s = map_bianchi(traj, cfg)
        eq10, eq11 = bianchi_residuals(s, cfg)
        assert eq10 <= 1e-6 and eq11 <= 1e-6
        assert eos_residual(s, 2.0) <= 1e-10
        assert table_identity_residual(s) <= 1e-12
        assert continuity_residual(s, cfg.d) <= 1e-5

    def test_D_perturbation(self, bianchi_run):
        _, traj, cfg = bianchi_run
        s = map_bianchi(traj, cfg)
        D = s.metadata["D"]
        eq10, _ = bianchi_residuals(s, cfg, D=1.01 * D)
        expected = 0.01 * D * cfg.K * np.max(1.0 / s.I2)
        assert eq10 == pytest.approx(expected, rel=1e-3)


class TestCosmicTime:
    @pytest.mark.parametrize("I2,factor", [(1.0, 1.0), (4.0, 0.5)])
    def test_constant_Y(self, I2, factor):
        traj = static(I2)
        clock = cosmic_time(traj)
        assert np.allclose(clock.tau, factor * (traj.t - traj.t0), atol=1e-13)

    def test_roundtrip_derivative(self, stiff_run):
        _, traj, _ = stiff_run
        clock = cosmic_time(traj)
        assert np.all(np.diff(clock.tau) > 0)
        tau = np.linspace(0, clock.tau[-1], 801)
        t = clock.t_of(tau)
        dT = fd_derivative(t, tau[1] - tau[0])
        Y = np.sqrt(traj.state(t)[:, 1])
        assert np.max(np.abs(dT - Y)) <= 1e-6

    def test_resampling_invariance(self, stiff_run):
        _, traj, _ = stiff_run
        coarse = traj.resample(401)
        t = np.linspace(traj.t0, traj.t_final, 37)
        assert np.max(np.abs(cosmic_time(traj).tau_of(t) - cosmic_time(coarse).tau_of(t))) <= 1e-8


class TestAnisotropy:
    def test_shear_D_example(self):
        assert shear_D((1.0, -1.0, 0.0), 4, 1.0) == pytest.approx(1.0, rel=1e-15)
        assert shear_D((0.0, 0.0, 0.0), 4, 1.0) == 0.0

    def test_isotropic(self):
        traj = evolve(MomentState(0.0, 1.0, 1.0, 0.0, 0.0), ConstantTrap(0.0), 0.5, samples=41)
        cfg = CosmologyConfig(Model.BIANCHI_I, shear_constants=(0.0, 0.0, 0.0))
        s = map_bianchi(traj, cfg)
        an = anisotropy_recover(s, cfg, traj)
        assert an.D_shear == 0.0
        assert np.allclose(an.X, s.scale[:, None], rtol=1e-15)

    @pytest.mark.parametrize("use_traj", [True, False])
    def test_product_and_constancy(self, bianchi_run, use_traj):
        _, traj, cfg = bianchi_run
        s = map_bianchi(traj, cfg)
        an = anisotropy_recover(s, cfg, traj if use_traj else None)
        assert an.D_shear == pytest.approx(an.D_lambda, rel=1e-8)
        assert np.max(np.abs(np.prod(an.X, axis=1) / s.scale**3 - 1.0)) <= 1e-10
        if use_traj:
            # H_i = d ln X_i / dtau; (H_1 - H_2) R^(d-1) must equal c_1 - c_2
            H = fd_derivative(np.log(an.X), s.h_tau)
            ok, dev = constancy_check((H[:, 0] - H[:, 1])[2:-2], s.scale[2:-2], 3)
            assert ok, dev
            assert (H[10, 0] - H[10, 1]) * s.scale[10] ** 3 == pytest.approx(2.0, rel=1e-8)

    def test_mismatch(self, bianchi_run):
        _, traj, _ = bianchi_run
        cfg = CosmologyConfig(Model.BIANCHI_I, d=4, Lambda=1.0, shear_constants=(2.0, -2.0, 0.0))
        with pytest.raises(ValueError):
            anisotropy_recover(map_bianchi(traj, cfg), cfg, traj)


class TestConstancyCheck:
    def test_power_law(self):
        R = np.linspace(1, 3, 50)
        assert constancy_check(R**-2.5, R, 2.5)[0]
        assert constancy_check(np.full(50, 4.0), R, 0.0) == (True, 0.0)
        assert not constancy_check(R**-2.0, R, 2.5)[0]
