"""Implicit branch solutions of y'^2/4 = 2A/y^2 - B + C y.

With y = m x + n, the solution satisfies z(x) = +-t + z0 where
z'(x) = +-(m/4)(m x + n)/sqrt(X(x)); w(y) = z((y - n)/m) inverts y(t).
For the one-real-root class z is assembled from u(x), E(u(x)) and
sqrt(X)/(x - t2) on the two windows either side of t1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..cubic_analysis import (
    CubicInvariants,
    EmpCoefficients,
    RootClass,
    RootData,
    classify_and_solve,
    derive_invariants,
)
from ..special_functions import ConvergenceError, jacobi, legendre_f
from .appendix import RegionError, Window, appendix_integral, one_real_amplitude

__all__ = [
    "BranchSolution",
    "EllipticBranch",
    "theta",
    "theta_u",
    "z_branch",
    "w_of",
]

CN_CHECK_TOL = 1e-10
MONOTONE_SAMPLES = 64


@dataclass(frozen=True)
class BranchSolution:
    """Window, sign of +-t and integration constant of one branch."""

    branch: Window = Window.LOWER
    sign: int = 1
    z0: float = 0.0

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")


def theta(x: float, roots: RootData) -> float:
    """theta(x) = (2x - t1 - t2)(t1 - t2)/(x - t2)^2, in [0, 1] for x > r1."""
    return math.sin(one_real_amplitude(x, roots)) ** 2


def theta_u(x: float, roots: RootData) -> float:
    """u(x, k) = EF(sqrt(theta(x)), k); cn(u) = |x - t1|/(x - t2) is checked on return."""
    phi = one_real_amplitude(x, roots)
    u = legendre_f(phi, roots.modulus)
    expected = abs(x - roots.t1) / (x - roots.t2)
    cn = jacobi(u, roots.modulus).cn
    if abs(cn - expected) > CN_CHECK_TOL:
        raise ConvergenceError(f"cn(u) = {cn!r} disagrees with {expected!r}")
    return u


def _window_ok(x: float, roots: RootData, window: Window) -> bool:
    if window is Window.LOWER:
        return roots.r1 <= x <= roots.t1
    return x >= roots.t1


def z_branch(x: float, coeffs: EmpCoefficients, roots: RootData, br: BranchSolution,
             inv: CubicInvariants | None = None) -> float:
    """z(x) = sign * [(m B / 12 C) I0(x) + (m^2/4) I1(x)] + z0 on the branch window.

    x = t1 is accepted on either window as the common limit point.
    """
    if roots.cls is not RootClass.ONE_REAL:
        raise ValueError("branch solutions need the one-real-root class")
    if not _window_ok(x, roots, br.branch):
        raise RegionError(f"x={x!r} outside {br.branch.value}")
    inv = inv or derive_invariants(coeffs)
    return br.sign * _core(x, coeffs, inv, roots, br.branch) + br.z0


def _core(x, coeffs, inv, roots, window=None) -> float:
    m = inv.m
    i0 = appendix_integral(0, x, roots, window)
    i1 = appendix_integral(1, x, roots, window)
    return m * coeffs.B / (12.0 * coeffs.C) * i0 + 0.25 * m * m * i1


def w_of(y: float, coeffs: EmpCoefficients, roots: RootData, br: BranchSolution,
         inv: CubicInvariants | None = None) -> float:
    """w(y) = z((y - n)/m)."""
    inv = inv or derive_invariants(coeffs)
    return z_branch((y - inv.shift_n) / inv.m, coeffs, roots, br, inv)


class EllipticBranch:
    """Reduction of one EMP coefficient set, with z on any root class.

    For the one-real-root class ``z_continuous`` adds the jump at t1 so a
    single antiderivative covers both windows. Monotonicity of z on each
    window (split where m x + n changes sign) is sampled on construction.
    """

    def __init__(self, coeffs: EmpCoefficients):
        self.coeffs = coeffs
        self.inv = derive_invariants(coeffs)
        self.roots = classify_and_solve(self.inv)
        self._jump = 0.0
        if self.roots.cls is RootClass.ONE_REAL:
            t1 = self.roots.t1
            self._jump = (_core(t1, coeffs, self.inv, self.roots, Window.LOWER)
                          - _core(t1, coeffs, self.inv, self.roots, Window.UPPER))
            self._check_monotone()

    @property
    def lower_limit(self) -> float:
        """Left end of the region where z is defined."""
        r = self.roots
        if r.cls is RootClass.ONE_REAL:
            return r.r1
        if r.cls is RootClass.THREE_REAL:
            return r.a
        return r.c

    def x_of(self, y: float) -> float:
        return (y - self.inv.shift_n) / self.inv.m

    def y_of(self, x: float) -> float:
        return self.inv.m * x + self.inv.shift_n

    def z(self, x: float, br: BranchSolution) -> float:
        return z_branch(x, self.coeffs, self.roots, br, self.inv)

    def w(self, y: float, br: BranchSolution) -> float:
        return w_of(y, self.coeffs, self.roots, br, self.inv)

    def z_continuous(self, x: float) -> float:
        """sign=+, z0=0 antiderivative, continuous across t1 (UpperWindow shifted)."""
        r = self.roots
        if r.cls is RootClass.ONE_REAL:
            if x <= r.t1:
                return _core(x, self.coeffs, self.inv, r, Window.LOWER)
            return _core(x, self.coeffs, self.inv, r, Window.UPPER) + self._jump
        return _core(x, self.coeffs, self.inv, r)

    def _check_monotone(self) -> None:
        r = self.roots
        span = r.t1 - r.r1
        x_star = -self.inv.shift_n / self.inv.m
        for window, lo, hi in ((Window.LOWER, r.r1, r.t1), (Window.UPPER, r.t1, r.t1 + 10.0 * span)):
            cuts = [lo] + ([x_star] if lo < x_star < hi else []) + [hi]
            for a, b in zip(cuts[:-1], cuts[1:]):
                pad = 1e-3 * (b - a)
                xs = np.linspace(a + pad, b - pad, MONOTONE_SAMPLES)
                zs = np.array([_core(x, self.coeffs, self.inv, r, window) for x in xs])
                steps = np.diff(zs)
                if not (np.all(steps > 0) or np.all(steps < 0)):
                    raise ConvergenceError(f"z not monotone on {window.value} [{a}, {b}]")
