"""Antiderivatives I_j(x) = integral x^j / sqrt(X(x)) dx, j = 0, 1.

One formula set per discriminant class; integration constants are omitted,
so only differences and derivatives are meaningful.
"""

from __future__ import annotations

import enum
import math

from ..cubic_analysis import RootClass, RootData
from ..special_functions import legendre_e, legendre_f

__all__ = ["Window", "one_real_amplitude", "appendix_integral", "RegionError"]


class RegionError(ValueError):
    """x lies outside the region where the requested formula is valid."""


class Window(enum.Enum):
    """The two sides of t1 for the one-real-root class."""

    LOWER = "LowerWindow"  # r1 < x < t1
    UPPER = "UpperWindow"  # t1 < x

    @classmethod
    def of(cls, x: float, roots: RootData) -> "Window":
        return cls.LOWER if x < roots.t1 else cls.UPPER


def one_real_amplitude(x: float, roots: RootData) -> float:
    """Amplitude phi = am(u(x)) with sin(phi) = sqrt(theta(x)), cos(phi) = |x - t1| / (x - t2).

    Both legs are formed from exact differences so phi stays accurate at
    either end of [0, pi/2].
    """
    if roots.cls is not RootClass.ONE_REAL:
        raise ValueError("amplitude defined for the one-real-root class only")
    if not x >= roots.r1:
        raise RegionError(f"x={x!r} lies below the real root r1={roots.r1!r}")
    half_gap = roots.t1 - roots.r1  # sqrt(9 rho^2 + sigma^2)
    # theta(x) (x - t2)^2 = 4 (x - r1) * half_gap
    return math.atan2(2.0 * math.sqrt((x - roots.r1) * half_gap), abs(x - roots.t1))


def _one_real(j: int, x: float, roots: RootData, window: Window | None) -> float:
    if window is None:
        if x == roots.t1:
            raise RegionError("x = t1 separates the two branches; pass a window to take a limit")
        window = Window.of(x, roots)
    elif window is Window.LOWER and x > roots.t1 or window is Window.UPPER and x < roots.t1:
        raise RegionError(f"x={x!r} not in {window.value}")
    phi = one_real_amplitude(x, roots)
    k = roots.modulus
    g = roots.g
    u = legendre_f(phi, k)
    sign = 1.0 if window is Window.LOWER else -1.0
    if j == 0:
        return sign * g * u
    E = legendre_e(phi, k)
    sqrt_term = g * math.sqrt(roots.X(x)) / (x - roots.t2)
    if window is Window.LOWER:
        return (2.0 / g) * (u - E + sqrt_term) + roots.t2 * g * u
    return -(2.0 / g) * (u - E - sqrt_term) - roots.t2 * g * u


def _three_real(j: int, x: float, roots: RootData) -> float:
    a, b, c = roots.a, roots.b, roots.c
    if not x >= a:
        raise RegionError(f"x={x!r} lies below the largest root a={a!r}")
    k = roots.modulus
    # sn^2 = (x-a)/(x-b), cn^2 = (a-b)/(x-b)
    phi = math.atan2(math.sqrt(x - a), math.sqrt(a - b))
    u = legendre_f(phi, k)
    sqrt_ac = math.sqrt(a - c)
    if j == 0:
        return 2.0 * u / sqrt_ac
    E = legendre_e(phi, k)
    tn = math.sqrt((x - a) / (a - b))
    dn = math.sqrt((a - b) * (x - c) / ((x - b) * (a - c)))
    return 2.0 * sqrt_ac * (dn * tn - E) + 2.0 * a * u / sqrt_ac


def _degenerate(j: int, x: float, roots: RootData) -> float:
    a, c = roots.a, roots.c
    if a == c:
        if not x > a:
            raise RegionError(f"x={x!r} must exceed the triple root {a!r}")
        s = math.sqrt(x - a)
        return -2.0 / s if j == 0 else 2.0 * (x - 2.0 * a) / s
    if not x >= c or x == a:
        raise RegionError(f"x={x!r} must be at least c={c!r} and differ from the double root a={a!r}")
    s = math.sqrt(x - c)
    # J = integral dx / ((x - a) sqrt(x - c))
    if a > c:
        d = math.sqrt(a - c)
        J = math.log(abs((s - d) / (s + d))) / d
    else:
        d = math.sqrt(c - a)
        J = 2.0 * math.atan(s / d) / d
    sgn = 1.0 if x > a else -1.0
    return sgn * J if j == 0 else sgn * (2.0 * s + a * J)


def appendix_integral(j: int, x: float, roots: RootData, window: Window | None = None) -> float:
    """Antiderivative of x^j / sqrt(X(x)) for j in {0, 1}.

    Valid regions: x >= r1 with x != t1 (one real root; ``window`` selects a
    side and allows the limit x = t1), x >= a (three real roots), and x >= c
    away from the double root a (repeated root; x > a for a triple root).
    """
    if j not in (0, 1):
        raise ValueError("j must be 0 or 1")
    if roots.cls is RootClass.ONE_REAL:
        return _one_real(j, x, roots, window)
    if roots.cls is RootClass.THREE_REAL:
        return _three_real(j, x, roots)
    return _degenerate(j, x, roots)
