import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bec_cosmo.closed_form import FamilyKind, GammaFamily, Model, radicand, relation_for
from bec_cosmo.closed_form.solve import radicand_bounds, solve_family
from bec_cosmo.moment_dynamics import (
    ClosureTrap,
    ConstantTrap,
    FunctionTrap,
    MomentState,
    TabulatedTrap,
    closure_initial_state,
    emp_residual,
    evolve,
    i2_scalar_residual,
    lambda_invariant,
    moment_rhs,
)

K = FamilyKind


def lambda_drift(traj):
    lam = traj.lambdas()
    return float(np.max(np.abs(lam - lam[0])) / max(1.0, abs(lam[0])))


class TestMomentAlgebra:
    def test_rhs_example(self):
        s = MomentState(0.0, 1.0, 2.0, 3.0, 4.0)
        assert moment_rhs(s, 0.5) == (0.0, 3.0, -2.0 + 16.0, -0.75)

    def test_lambda_examples(self):
        assert lambda_invariant(MomentState(0.0, 1.0, 1.0, 0.0, 0.5)) == 1.0
        assert lambda_invariant(MomentState(0.0, 1.0, 2.0, 2.0, 1.0)) == 3.0

    def test_fixed_point(self):
        # omega = 1, I4 = omega^2 I2 / 2, I3 = 0 is stationary
        s = MomentState(0.0, 1.0, 2.0, 0.0, 1.0)
        assert moment_rhs(s, 1.0) == (0.0, 0.0, 0.0, 0.0)
        traj = evolve(s, ConstantTrap(1.0), 5.0, samples=11)
        assert np.max(np.abs(traj.states - s.as_array())) <= 1e-12

    @settings(max_examples=40, deadline=None)
    @given(I2=st.floats(0.1, 5), I3=st.floats(-3, 3), I4=st.floats(0.1, 5), w2=st.floats(0, 10))
    def test_lambda_is_conserved_by_rhs(self, I2, I3, I4, w2):
        # d lambda/dt = 2 I2' I4 + 2 I2 I4' - I3 I3'/2 = 0 for any omega^2
        s = MomentState(0.0, 1.0, I2, I3, I4)
        _, d2, d3, d4 = moment_rhs(s, w2)
        rate = 2 * d2 * I4 + 2 * I2 * d4 - 0.5 * I3 * d3
        assert abs(rate) <= 1e-12 * max(1.0, abs(I2 * I3 * w2), abs(I3 * I4))


class TestEvolve:
    def test_constant_trap_invariants(self):
        traj = evolve(MomentState(0.0, 1.0, 1.0, 0.3, 1.2), ConstantTrap(1.5), 10.0, rtol=1e-10)
        assert lambda_drift(traj) <= 1e-7
        assert np.max(np.abs(traj.states[:, 0] - 1.0)) <= 1e-12
        assert emp_residual(traj) <= 1e-5

    def test_constant_trap_closed_form(self):
        # for constant omega, I2'' ' = -4 w^2 I2' exactly, so I2 oscillates at 2 w
        w, s0 = 1.3, MomentState(0.0, 1.0, 1.0, 0.0, 2.0)
        traj = evolve(s0, ConstantTrap(w), 3.0, rtol=1e-12, samples=301)
        mean = (s0.I4 * 4 + 2 * w * w * s0.I2) / (4 * w * w)
        ref = mean + (s0.I2 - mean) * np.cos(2 * w * traj.t)
        assert np.max(np.abs(traj.states[:, 1] - ref)) <= 1e-9

    def test_tabulated_trap(self):
        ts = np.linspace(0, 4, 401)
        traj = evolve(MomentState(0.0, 1.0, 1.0, 0.0, 1.0), TabulatedTrap(ts, 1 + 0.5 * np.sin(ts)), 4.0)
        assert lambda_drift(traj) <= 1e-7

    def test_function_trap(self):
        traj = evolve(MomentState(0.0, 1.0, 1.0, 0.0, 1.0), FunctionTrap(lambda t: 1 + 0.5 * math.cos(3 * t)), 6.0)
        assert lambda_drift(traj) <= 1e-7
        assert emp_residual(traj) <= 1e-5

    def test_time_reversal(self):
        s0 = MomentState(0.0, 1.0, 1.0, 0.4, 1.1)
        fwd = evolve(s0, ConstantTrap(0.8), 2.0, rtol=1e-12, samples=3)
        end = fwd.states[-1]
        back = evolve(MomentState(0.0, end[0], end[1], -end[2], end[3]), ConstantTrap(0.8), 2.0,
                      rtol=1e-12, samples=3)
        ret = back.states[-1]
        assert np.allclose([ret[1], -ret[2], ret[3]], [s0.I2, s0.I3, s0.I4], atol=1e-9)

    def test_closure_scalar_residual(self):
        fam = GammaFamily(K.MATTER, alpha=1.0, lam=1.0, Lambda=0.2)
        traj = evolve(closure_initial_state(fam, 1.0), ClosureTrap(fam), 1.0, rtol=1e-12)
        assert traj.lam == pytest.approx(1.0, rel=1e-12)
        assert i2_scalar_residual(traj, fam) <= 1e-9

    def test_closure_mismatch_rejected(self):
        fam = GammaFamily(K.MATTER)
        traj = evolve(closure_initial_state(fam, 1.0), ClosureTrap(fam), 0.2)
        with pytest.raises(ValueError):
            i2_scalar_residual(traj, GammaFamily(K.RADIATION))

    def test_collapse_halts(self):
        # stiff with lambda < 0 and a decreasing start reaches I2 -> 0 in finite time
        fam = GammaFamily(K.STIFF, alpha=1.0, lam=-1.0)
        traj = evolve(closure_initial_state(fam, 1.0, sign=-1), ClosureTrap(fam), 5.0)
        assert traj.halted in ("collapse", "i2_floor")
        assert traj.t_final < 5.0
        assert np.all(traj.states[:, 1] > 0)

    def test_validation(self):
        s = MomentState(0.0, 1.0, 1.0, 0.0, 1.0)
        with pytest.raises(ValueError):
            evolve(MomentState(0.0, 1.0, 0.0, 0.0, 1.0), ConstantTrap(1.0), 1.0)
        with pytest.raises(ValueError):
            evolve(s, ConstantTrap(1.0), 1.0, rtol=1e-2)
        with pytest.raises(ValueError):
            evolve(s, ConstantTrap(1.0), -1.0)
        with pytest.raises(ValueError):
            evolve(s, TabulatedTrap(np.array([0.0, 0.5]), np.array([1.0, 1.0])), 1.0)
        with pytest.raises(ValueError):
            TabulatedTrap(np.array([0.0, 0.0]), np.array([1.0, 1.0]))
        with pytest.raises(ValueError):
            TabulatedTrap(np.array([0.0, 1.0]), np.array([1.0, -1.0]))
        with pytest.raises(ValueError):
            ConstantTrap(math.inf)

    def test_closure_initial_state(self):
        fam = GammaFamily(K.STIFF, alpha=1.0, lam=1.0)
        s = closure_initial_state(fam, 1.0, sign=-1)
        assert s.I3 == pytest.approx(-2.0, rel=1e-15)
        assert lambda_invariant(s) == pytest.approx(1.0, rel=1e-15)
        with pytest.raises(ValueError):
            closure_initial_state(fam, 3.0)


class TestSolveFamily:
    @pytest.mark.parametrize("fam,t_end", [
        (GammaFamily(K.STIFF, alpha=1.0, lam=1.0), 0.3),
        (GammaFamily(K.STIFF, alpha=1.0, lam=1.0, Lambda=3.0), 0.5),
        (GammaFamily(K.MATTER, alpha=1.0, lam=1.0), 0.5),
        (GammaFamily(K.RADIATION, alpha=1.0, lam=0.5), 0.5),
        (GammaFamily(K.BIANCHI_GAMMA2, alpha=1.0, lam=-3.0, Lambda=1.0), 1.0),
        (GammaFamily(K.BIANCHI_GAMMA_N, alpha=1.0, lam=1.0, n=2), 1.0),
        (GammaFamily(K.RADIATION, alpha=1.0, lam=0.5, Lambda=0.5), 0.5),
    ])
    def test_matches_integration(self, fam, t_end):
        sol = solve_family(fam, 1.0, t_end, samples=101)
        traj = evolve(closure_initial_state(fam, 1.0), ClosureTrap(fam), t_end, rtol=1e-12, samples=101)
        assert np.max(np.abs(sol.I2 - traj.states[:, 1])) <= 1e-7
        assert np.all(sol.omega_sq > 0)

    def test_turning_point_then_return(self):
        # stiff with lambda > 0 rises to the vertex sqrt(2 alpha / lambda) and falls back
        fam = GammaFamily(K.STIFF, alpha=1.0, lam=1.0)
        sol = solve_family(fam, 1.0, 1.5, samples=301)
        assert np.nanmax(sol.I2) == pytest.approx(math.sqrt(2.0), rel=1e-6)
        assert sol.metadata["route"] == "explicit"

    def test_collapse_marked(self):
        fam = GammaFamily(K.STIFF, alpha=1.0, lam=1.0)
        sol = solve_family(fam, 1.0, 3.0, samples=301)
        assert sol.metadata["halted"] == "collapse"
        assert np.isnan(sol.I2[-1])

    def test_t_start(self):
        fam = GammaFamily(K.MATTER)
        a = solve_family(fam, 1.0, (0.0, 0.4), samples=21)
        b = solve_family(fam, 1.0, (2.0, 2.4), samples=21)
        assert np.allclose(a.I2, b.I2, rtol=1e-12)
        with pytest.raises(ValueError):
            solve_family(fam, 1.0, (1.0, 0.5))

    def test_relation_residual_on_samples(self):
        fam = GammaFamily(K.BIANCHI_GAMMA_N, alpha=1.0, lam=1.0, n=3)
        sol = solve_family(fam, 1.0, 1.0, samples=51)
        rel = sol.relation
        res = [rel.residual(t, x) for t, x in zip(sol.t, sol.I2)]
        assert max(map(abs, res)) <= 1e-10


class TestRadicandBounds:
    def test_turning_and_collapse(self):
        fam = GammaFamily(K.STIFF, alpha=1.0, lam=1.0)
        r = lambda x: radicand(x, fam, Model.FLRW)
        lo, hi = radicand_bounds(r, 1.0, 1)
        assert lo.kind == "collapse" and lo.value == 0.0
        assert hi.kind == "turning" and hi.value == pytest.approx(math.sqrt(2.0), rel=1e-12)

    def test_open(self):
        fam = GammaFamily(K.MATTER, alpha=1.0, lam=-1.0)
        lo, hi = radicand_bounds(lambda x: radicand(x, fam, Model.FLRW), 1.0, 1)
        assert hi.kind == "open"

    def test_start_on_turning_point(self):
        fam = GammaFamily(K.STIFF, alpha=1.0, lam=1.0)
        x0 = math.sqrt(2.0)
        lo, hi = radicand_bounds(lambda x: max(radicand(x, fam, Model.FLRW), 0.0) if x >= x0 else
                                 radicand(x, fam, Model.FLRW), x0, -1)
        assert hi == type(hi)(x0, "turning")
        assert relation_for(fam, x0).sign == -1
