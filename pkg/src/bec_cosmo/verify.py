"""Invariant checks: a built-in scenario battery and checks on a stored trajectory."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .closed_form import (
    EllipticBranch,
    FamilyKind,
    GammaFamily,
    Model,
    appendix_integral,
    family_integral,
    solve_family,
)
from .cosmology_map import (
    CosmologyConfig,
    anisotropy_recover,
    bianchi_residuals,
    eos_residual,
    flrw_residuals,
    map_bianchi,
    map_flrw,
)
from .cubic_analysis import CubicInvariants, EmpCoefficients, RootClass, classify_and_solve
from .moment_dynamics import (
    ClosureTrap,
    FunctionTrap,
    MomentState,
    Trajectory,
    closure_initial_state,
    emp_residual,
    evolve,
)
from .ode_engine import quad_adaptive, rk_integrate
from .special_functions import ellip_f, hyp2f1, jacobi

__all__ = ["Check", "SCENARIOS", "run_battery", "check_trajectory"]

LAMBDA_DRIFT_TOL = 1e-7
I1_TOL = 1e-12
EMP_TOL = 1e-5


@dataclass(frozen=True)
class Check:
    name: str
    max_abs_residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(self.max_abs_residual <= self.tolerance)

    def as_dict(self) -> dict:
        return {**asdict(self), "pass": self.passed}


def _rel_drift(lams: np.ndarray) -> float:
    ref = lams[0]
    return float(np.max(np.abs(lams - ref)) / max(abs(ref), np.finfo(float).tiny))


def check_trajectory(traj: Trajectory) -> list[Check]:
    """lambda conservation, I1 constancy and the EMP residual on stored samples."""
    I1 = traj.states[:, 0]
    out = [
        Check("lambda_conservation", _rel_drift(traj.lambdas()), LAMBDA_DRIFT_TOL),
        Check("i1_constancy", float(np.max(np.abs(I1 - I1[0]))) / max(abs(I1[0]), 1.0), I1_TOL),
    ]
    if len(traj.t) >= 5:
        out.append(Check("emp_residual", emp_residual(traj, samples=len(traj.t)), EMP_TOL))
    return out


# ---------------------------------------------------------------------------
# scenarios


def _modulated_trap(t):
    return (1.0 + 0.3 * math.sin(t)) ** 2


def scenario_moments() -> list[Check]:
    traj = evolve(MomentState(0.0, 1.0, 2.0, 0.5, 1.0), FunctionTrap(_modulated_trap), 20.0, rtol=1e-10)
    return [
        Check("lambda_conservation", _rel_drift(traj.lambdas()), LAMBDA_DRIFT_TOL),
        Check("emp_residual", emp_residual(traj), EMP_TOL),
    ]


def scenario_stiff() -> list[Check]:
    fam = GammaFamily(FamilyKind.STIFF, d=4, alpha=1.0, lam=1.0)
    s0 = closure_initial_state(fam, 1.0)
    traj = evolve(s0, ClosureTrap(fam), 0.475, rtol=1e-12)
    sol = solve_family(fam, 1.0, 0.475, I3_0=s0.I3, samples=len(traj.t))
    err = np.max(np.abs(traj.states[:, 1] / sol.I2 - 1.0))
    return [Check("stiff_closed_form", float(err), 1e-6)]


def scenario_elliptic() -> list[Check]:
    coeffs = EmpCoefficients(1.0, 1.0, 1.0)
    eb = EllipticBranch(coeffs)
    y0 = 1.0
    sol = rk_integrate(lambda t, s: np.array([s[1], -8.0 / s[0] ** 3 + 2.0]),
                       [y0, 2.0 * math.sqrt(coeffs.rhs(y0))], 0.0, 0.3, rtol=1e-12)
    ts = np.linspace(0.0, 0.3, 200)
    ys = sol(ts)[:, 0]
    gap = np.array([eb.z_continuous(eb.x_of(y)) for y in ys]) - ts
    return [Check("elliptic_branch", float(np.std(gap)), 1e-5)]


def _appendix_intervals(roots):
    # antiderivatives are per window; keep each interval inside one
    top = max(roots.roots)
    if roots.cls is RootClass.ONE_REAL:
        return [(top + 0.1, roots.t1 - 0.1), (roots.t1 + 0.1, roots.t1 + 2.0)]
    return [(top + 0.5, top + 2.5)]


def scenario_appendix() -> list[Check]:
    worst = 0.0
    for p, q in ((0.0, 1.0), (-1.0, 0.0), (-3.0, 2.0)):
        roots = classify_and_solve(CubicInvariants(1.0, 0.0, 0.0, 0.0, p, q, -4 * p**3 - 27 * q * q))
        for lo, hi in _appendix_intervals(roots):
            for j in (0, 1):
                exact = quad_adaptive(lambda x: x**j / math.sqrt(roots.X(x)), lo, hi)
                diff = appendix_integral(j, hi, roots) - appendix_integral(j, lo, roots)
                worst = max(worst, abs(diff - exact))
    return [Check("appendix_integrals", worst, 1e-8)]


def scenario_family_integral() -> list[Check]:
    worst = 0.0
    for n in range(5):
        exact = quad_adaptive(lambda x: 1.0 / math.sqrt(2.0 * x ** (1.0 / (n + 1)) - 0.5), 1.0, 3.0)
        worst = max(worst, abs(family_integral(n, 2.0, 0.5, 3.0) - family_integral(n, 2.0, 0.5, 1.0) - exact))
    return [Check("family_integral", worst, 1e-8)]


def scenario_special() -> list[Check]:
    worst = 0.0
    for x in np.linspace(0.05, 0.95, 7):
        for k in (0.3, 0.9):
            exact = quad_adaptive(lambda t: 1.0 / math.sqrt((1 - t * t) * (1 - k * k * t * t)), 0.0, x)
            worst = max(worst, abs(ellip_f(x, k) - exact))
            j = jacobi(ellip_f(x, k), k)
            worst = max(worst, abs(j.sn - x))
    for z in (-0.5, -0.1, 0.1, 0.5, 0.9):
        worst = max(worst, abs(hyp2f1(1, 1, 2, z) + math.log1p(-z) / z))
    return [Check("special_functions", worst, 1e-10)]


def scenario_flrw() -> list[Check]:
    fam = GammaFamily(FamilyKind.STIFF, d=4, alpha=1.0, lam=1.0, Lambda=0.3)
    traj = evolve(closure_initial_state(fam, 1.0), ClosureTrap(fam), 1.0, rtol=1e-12)
    cfg = CosmologyConfig(Model.FLRW, d=4, Lambda=0.3, K=1.0, curvature_k=1)
    series = map_flrw(traj, cfg)
    fried, cont = flrw_residuals(series, cfg)
    return [
        Check("flrw_friedmann", fried, 1e-6),
        Check("flrw_continuity", cont, 1e-5),
        Check("flrw_equation_of_state", eos_residual(series, fam.gamma), 1e-10),
    ]


def scenario_bianchi() -> list[Check]:
    fam = GammaFamily(FamilyKind.BIANCHI_GAMMA2, d=4, alpha=1.0, lam=-3.0, Lambda=1.0)
    traj = evolve(closure_initial_state(fam, 1.0), ClosureTrap(fam), 1.0, rtol=1e-12)
    cfg = CosmologyConfig(Model.BIANCHI_I, d=4, Lambda=1.0, K=1.0, shear_constants=(1.0, -1.0, 0.0))
    series = map_bianchi(traj, cfg)
    eq10, eq11 = bianchi_residuals(series, cfg)
    an = anisotropy_recover(series, cfg, traj)
    prod = np.max(np.abs(np.prod(an.X, axis=1) / series.scale ** 3 - 1.0))
    return [
        Check("bianchi_eq10", eq10, 1e-6),
        Check("bianchi_eq11", eq11, 1e-6),
        Check("bianchi_volume_product", float(prod), 1e-10),
        Check("bianchi_shear_D", abs(an.D_shear - an.D_lambda) / abs(an.D_lambda), 1e-8),
    ]


def scenario_gamma_n() -> list[Check]:
    worst = 0.0
    worst_w = 0.0
    for n in (1, 2, 3):
        fam = GammaFamily(FamilyKind.BIANCHI_GAMMA_N, d=4, alpha=1.0, lam=1.0, n=n)
        traj = evolve(closure_initial_state(fam, 1.0), ClosureTrap(fam), 3.0, rtol=1e-12)
        rel = solve_family(fam, 1.0, 3.0, samples=5).relation
        gap = np.array([rel.lhs(x) for x in traj.states[:, 1]]) - 2.0 * traj.t
        worst = max(worst, float(np.std(gap)))
        I2 = traj.states[:, 1]
        law = 2 * n * fam.alpha / ((n + 1) * I2 ** (2.0 - 1.0 / (n + 1)))
        worst_w = max(worst_w, float(np.max(np.abs(traj.omega_sq - law) / law)))
    return [Check("gamma_n_relation", worst, 1e-5), Check("gamma_n_omega_sq", worst_w, 1e-12)]


SCENARIOS = {
    "moments": scenario_moments,
    "stiff": scenario_stiff,
    "elliptic": scenario_elliptic,
    "appendix": scenario_appendix,
    "family_integral": scenario_family_integral,
    "special_functions": scenario_special,
    "flrw": scenario_flrw,
    "bianchi": scenario_bianchi,
    "gamma_n": scenario_gamma_n,
}


def _run(name: str) -> list[Check]:
    return SCENARIOS[name]()


def run_battery(jobs: int = 1) -> list[Check]:
    """All scenarios, in a fixed order; ``jobs`` > 1 runs them in worker processes."""
    names = list(SCENARIOS)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run, names))
    else:
        results = [_run(n) for n in names]
    return [c for group in results for c in group]
