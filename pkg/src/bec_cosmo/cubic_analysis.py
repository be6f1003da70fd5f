"""Reduction of y'^2/4 = 2A/y^2 - B + C y to a depressed cubic, and its roots.

The substitution y = m v + n with m^3 = 4/C and n = B/(3C) turns the
right-hand side (times y^2) into 4 X(v) where X(v) = v^3 + p v + q. The sign
of the discriminant -4p^3 - 27q^2 decides between one real root with a
complex pair, three distinct real roots, or a repeated root.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

__all__ = [
    "EmpCoefficients",
    "CubicInvariants",
    "RootClass",
    "RootData",
    "derive_invariants",
    "classify_and_solve",
    "cubic_value",
    "DEGENERACY_TOL",
]

DEGENERACY_TOL = 1e-10


@dataclass(frozen=True)
class EmpCoefficients:
    """Coefficients of y'^2/4 = 2A/y^2 - B + C y."""

    A: float
    B: float
    C: float

    def rhs(self, y: float) -> float:
        return 2.0 * self.A / (y * y) - self.B + self.C * y


@dataclass(frozen=True)
class CubicInvariants:
    m: float
    shift_n: float
    g2: float
    g3: float
    p: float
    q: float
    delta: float


class RootClass(enum.Enum):
    ONE_REAL = "OneReal"
    THREE_REAL = "ThreeReal"
    DEGENERATE = "Degenerate"


@dataclass(frozen=True)
class RootData:
    """Roots of X(x) = x^3 + p x + q and the parameters built from them.

    For ``ONE_REAL``: r1, sigma (= Im r2 > 0), rho (= -r1/2), g, t1, t2, modulus.
    For ``THREE_REAL``: a > b > c, modulus sqrt((b-c)/(a-c)), g = 2/sqrt(a-c).
    For ``DEGENERATE``: X = (x-a)^2 (x-c); a == c == 0 for the triple root.
    Unused fields are None.
    """

    cls: RootClass
    p: float
    q: float
    delta: float
    r1: float | None = None
    sigma: float | None = None
    rho: float | None = None
    g: float | None = None
    t1: float | None = None
    t2: float | None = None
    modulus: float | None = None
    a: float | None = None
    b: float | None = None
    c: float | None = None
    near_degenerate: bool = False

    @property
    def roots(self) -> list[float]:
        """Real roots, largest first."""
        if self.cls is RootClass.ONE_REAL:
            return [self.r1]
        if self.cls is RootClass.THREE_REAL:
            return [self.a, self.b, self.c]
        return sorted({self.a, self.c}, reverse=True)

    def X(self, x: float) -> float:
        return _horner(x, self.p, self.q)


def derive_invariants(coeffs: EmpCoefficients) -> CubicInvariants:
    """Weierstrass-type invariants of the reduced cubic.

    Raises ValueError for C = 0: that case has elementary solutions and is
    handled by the Lambda = 0 relations in :mod:`bec_cosmo.closed_form`.
    """
    A, B, C = coeffs.A, coeffs.B, coeffs.C
    if C == 0.0:
        raise ValueError("C = 0: no cubic reduction; use the elementary (Lambda = 0) relations")
    m = math.copysign(math.exp(math.log(4.0 / abs(C)) / 3.0), C)
    n = B / (3.0 * C)
    g2 = m * B * B / (3.0 * C)
    g3 = 2.0 * B**3 / (27.0 * C * C) - 2.0 * A
    p = -g2 / 4.0
    q = -g3 / 4.0
    delta = -4.0 * p**3 - 27.0 * q * q
    return CubicInvariants(m=m, shift_n=n, g2=g2, g3=g3, p=p, q=q, delta=delta)


def cubic_value(x: float, inv: CubicInvariants | RootData) -> float:
    """X(x) = x^3 + p x + q in Horner form."""
    return _horner(x, inv.p, inv.q)


def _horner(x: float, p: float, q: float) -> float:
    return (x * x + p) * x + q


def _newton_polish(x: float, p: float, q: float) -> float:
    f = _horner(x, p, q)
    d = 3.0 * x * x + p
    if d != 0.0:
        x_new = x - f / d
        if abs(_horner(x_new, p, q)) <= abs(f):
            return x_new
    return x


def classify_and_solve(inv: CubicInvariants, degeneracy_tol: float = DEGENERACY_TOL) -> RootData:
    """Classify X(x) = x^3 + p x + q by its discriminant and compute the roots.

    |delta| <= degeneracy_tol * max(1, |p|^3, |q|^2) is treated as a repeated
    root; ``near_degenerate`` records whether that band was used.
    """
    p, q = inv.p, inv.q
    delta = -4.0 * p**3 - 27.0 * q * q
    scale = max(1.0, abs(p) ** 3, q * q)

    if abs(delta) <= degeneracy_tol * scale:
        if p == 0.0 and q == 0.0:
            return RootData(RootClass.DEGENERATE, p, q, delta, a=0.0, c=0.0)
        if p == 0.0:
            a = c = -math.copysign(abs(q) ** (1.0 / 3.0), q)
        else:
            a = -1.5 * q / p
            c = -2.0 * a
        return RootData(RootClass.DEGENERATE, p, q, delta, a=a, c=c,
                        near_degenerate=delta != 0.0)

    if delta > 0.0:
        # three real roots, trigonometric form (p < 0 here)
        r = 2.0 * math.sqrt(-p / 3.0)
        arg = 3.0 * q / (p * r)
        arg = min(1.0, max(-1.0, arg))
        phi = math.acos(arg) / 3.0
        roots = [r * math.cos(phi - 2.0 * math.pi * j / 3.0) for j in range(3)]
        roots = sorted((_newton_polish(x, p, q) for x in roots), reverse=True)
        a, b, c = roots
        return RootData(RootClass.THREE_REAL, p, q, delta, a=a, b=b, c=c,
                        modulus=math.sqrt((b - c) / (a - c)), g=2.0 / math.sqrt(a - c))

    # one real root: Cardano with the cancellation-free choice of cube root
    D = q * q / 4.0 + p**3 / 27.0
    s = -0.5 * q - math.copysign(math.sqrt(D), q)
    u = math.copysign(abs(s) ** (1.0 / 3.0), s)
    r1 = u - p / (3.0 * u) if u != 0.0 else 0.0
    r1 = _newton_polish(_newton_polish(r1, p, q), p, q)
    rho = -0.5 * r1
    # X / (x - r1) = (x - rho)^2 + sigma^2
    sigma2 = max(p + 0.75 * r1 * r1, 0.0)
    sigma = math.sqrt(sigma2)
    root_sum = math.sqrt(9.0 * rho * rho + sigma2)
    g = 1.0 / math.sqrt(root_sum)
    if rho >= 0.0:
        k2 = (root_sum + 3.0 * rho) / (2.0 * root_sum)
    else:
        k2 = sigma2 / (2.0 * root_sum * (root_sum - 3.0 * rho))
    return RootData(
        RootClass.ONE_REAL, p, q, delta,
        r1=r1, sigma=sigma, rho=rho, g=g,
        t1=r1 + root_sum, t2=r1 - root_sum,
        modulus=math.sqrt(k2),
    )
