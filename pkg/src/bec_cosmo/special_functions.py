"""Elliptic integrals, Jacobi elliptic functions and the Gauss series 2F1.

Everything is real-argument, double precision and evaluated by the
arithmetic-geometric mean (descending Landen) recurrences. Close to k = 1 the
AGM recurrences lose digits in k' = sqrt(1 - k^2); there the first-order
expansions in k'^2 about the hyperbolic limit take over (see
``MODULUS_ASYMPTOTIC_TOL``).

Modulus convention: the modulus k (not the parameter m = k^2) is passed
everywhere, with 0 <= k <= 1.
"""

from __future__ import annotations

import math
from typing import NamedTuple

__all__ = [
    "EllipticDomainError",
    "ConvergenceError",
    "JacobiValues",
    "complementary",
    "legendre_f",
    "legendre_e",
    "complete_k",
    "complete_e",
    "ellip_f",
    "ellip_e_incomplete",
    "ellip_e_of_sn",
    "jacobi",
    "inverse_cn",
    "hyp2f1",
]

# 1 - k below which the k'^2 expansions about k = 1 are considered
MODULUS_ASYMPTOTIC_TOL = 1e-9
# the expansions are only used while their first correction stays this small
ASYMPTOTIC_GATE = 1e-6
AGM_EPS = 2.0**-53
AGM_MAX_ITER = 64
HYP2F1_TERM_TOL = 1e-15
HYP2F1_MAX_TERMS = 1_000_000


class EllipticDomainError(ValueError):
    """An argument lies outside the real domain of the requested function."""


class ConvergenceError(ArithmeticError):
    """A series or iteration failed to converge."""


class JacobiValues(NamedTuple):
    sn: float
    cn: float
    dn: float
    tn: float
    am: float


def _check_modulus(k: float) -> None:
    if not (0.0 <= k <= 1.0):
        raise EllipticDomainError(f"modulus k={k!r} outside [0, 1]")


def complementary(k: float) -> float:
    """k' = sqrt(1 - k^2), formed as sqrt((1-k)(1+k)) to keep digits near k = 1."""
    _check_modulus(k)
    return math.sqrt((1.0 - k) * (1.0 + k))


def _agm_complete(k: float, kp: float) -> tuple[float, float]:
    """Complete integrals (K, E) for 0 <= k < 1."""
    a, b = 1.0, kp
    sum_c2 = 0.5 * k * k
    two_n = 1.0
    for _ in range(AGM_MAX_ITER):
        c = 0.5 * (a - b)
        a, b = 0.5 * (a + b), math.sqrt(a * b)
        two_n *= 2.0
        sum_c2 += 0.5 * two_n * c * c
        if abs(c) <= AGM_EPS * a:
            break
    K = math.pi / (2.0 * a)
    return K, K * (1.0 - sum_c2)


def _legendre_reduced(phi: float, k: float, kp: float) -> tuple[float, float]:
    """F and E for |phi| <= pi/2 and 0 < k < 1 by the AGM with phase tracking."""
    L_gate = 1.0 - k < MODULUS_ASYMPTOTIC_TOL
    if L_gate:
        c = math.cos(phi)
        if c != 0.0 and (kp / c) ** 2 < ASYMPTOTIC_GATE:
            s = math.sin(phi)
            L = math.atanh(s)
            kp2 = kp * kp
            F = L - 0.25 * kp2 * (s / (c * c) - L)
            E = s + 0.5 * kp2 * (L - s)
            return F, E
    a, b = 1.0, kp
    sum_c2 = 0.5 * k * k
    sum_sin = 0.0
    two_n = 1.0
    for _ in range(AGM_MAX_ITER):
        delta = math.atan2(b * math.sin(phi), a * math.cos(phi))
        delta += 2.0 * math.pi * round((phi - delta) / (2.0 * math.pi))
        phi += delta
        c = 0.5 * (a - b)
        a, b = 0.5 * (a + b), math.sqrt(a * b)
        two_n *= 2.0
        sum_c2 += 0.5 * two_n * c * c
        sum_sin += c * math.sin(phi)
        if abs(c) <= AGM_EPS * a:
            break
    else:
        raise ConvergenceError("AGM did not converge")
    F = phi / (two_n * a)
    return F, F * (1.0 - sum_c2) + sum_sin


def _legendre_fe(phi: float, k: float) -> tuple[float, float]:
    _check_modulus(k)
    if not math.isfinite(phi):
        raise EllipticDomainError("non-finite amplitude")
    if k == 0.0:
        return phi, phi
    j = round(phi / math.pi)
    r = phi - j * math.pi
    kp = complementary(k)
    if kp == 0.0:
        if j != 0 or abs(r) >= 0.5 * math.pi:
            raise EllipticDomainError("F(phi, 1) diverges at |phi| >= pi/2")
        return math.atanh(math.sin(r)), math.sin(r)
    F, E = _legendre_reduced(r, k, kp)
    if j:
        K, Ec = _agm_complete(k, kp)
        F += 2 * j * K
        E += 2 * j * Ec
    return F, E


def legendre_f(phi: float, k: float) -> float:
    """Incomplete integral of the first kind in Legendre form, F(phi, k)."""
    return _legendre_fe(phi, k)[0]


def legendre_e(phi: float, k: float) -> float:
    """Incomplete integral of the second kind in Legendre form, E(phi, k)."""
    return _legendre_fe(phi, k)[1]


def complete_k(k: float) -> float:
    """K(k); diverges at k = 1."""
    _check_modulus(k)
    kp = complementary(k)
    if kp == 0.0:
        raise EllipticDomainError("K(k) diverges at k = 1")
    return _agm_complete(k, kp)[0]


def complete_e(k: float) -> float:
    _check_modulus(k)
    kp = complementary(k)
    if kp == 0.0:
        return 1.0
    return _agm_complete(k, kp)[1]


def _asin_amplitude(x: float) -> float:
    return math.atan2(x, math.sqrt((1.0 - x) * (1.0 + x)))


def ellip_f(x: float, k: float) -> float:
    """EF(x, k) = integral_0^x dt / sqrt((1 - t^2)(1 - k^2 t^2)) for |x| <= 1."""
    _check_modulus(k)
    if not (-1.0 <= x <= 1.0):
        raise EllipticDomainError(f"|x| = {abs(x)!r} > 1")
    if k == 1.0 and abs(x) == 1.0:
        raise EllipticDomainError("EF(+-1, 1) diverges")
    return legendre_f(_asin_amplitude(x), k)


def ellip_e_of_sn(x: float, k: float) -> float:
    """integral_0^x sqrt((1 - k^2 t^2) / (1 - t^2)) dt, i.e. E(u, k) with sn(u) = x, 0 <= u <= K."""
    _check_modulus(k)
    if not (-1.0 <= x <= 1.0):
        raise EllipticDomainError(f"|x| = {abs(x)!r} > 1")
    return legendre_e(_asin_amplitude(x), k)


def _jacobi_near_one(u: float, kp: float) -> JacobiValues:
    # first-order expansions in k'^2 about the hyperbolic limit
    t = math.tanh(u)
    sech = 1.0 / math.cosh(u)
    kp2 = kp * kp
    w = 0.25 * kp2 * (math.sinh(u) * math.cosh(u) - u)
    sn = t + w * sech * sech
    cn = sech - w * t * sech
    dn = sech + 0.25 * kp2 * (math.sinh(u) * math.cosh(u) + u) * t * sech
    am = math.atan2(sn, cn)
    return JacobiValues(sn, cn, dn, sn / cn, am)


def jacobi(u: float, k: float) -> JacobiValues:
    """sn, cn, dn, tn = sn/cn and the amplitude am(u, k).

    tn is returned as a signed infinity when cn vanishes exactly (pole).
    """
    _check_modulus(k)
    if not math.isfinite(u):
        raise EllipticDomainError("non-finite argument")
    if k == 0.0:
        s, c = math.sin(u), math.cos(u)
        return JacobiValues(s, c, 1.0, _ratio(s, c), u)
    kp = complementary(k)
    if kp == 0.0:
        sech = 1.0 / math.cosh(u)
        t = math.tanh(u)
        return JacobiValues(t, sech, sech, math.sinh(u), math.atan2(t, sech))
    if 1.0 - k < MODULUS_ASYMPTOTIC_TOL and (kp * math.cosh(u)) ** 2 < ASYMPTOTIC_GATE:
        return _jacobi_near_one(u, kp)

    K, _ = _agm_complete(k, kp)
    periods = round(u / (4.0 * K))
    ur = u - 4.0 * K * periods

    a = [1.0]
    c = [k]
    b = kp
    for _ in range(AGM_MAX_ITER):
        a_prev = a[-1]
        c.append(0.5 * (a_prev - b))
        a.append(0.5 * (a_prev + b))
        b = math.sqrt(a_prev * b)
        if abs(c[-1]) <= AGM_EPS * a[-1]:
            break
    n = len(a) - 1
    phi = 2.0**n * a[n] * ur
    phi_next = phi
    for i in range(n, 0, -1):
        phi_next = phi
        phi = 0.5 * (phi + math.asin(c[i] / a[i] * math.sin(phi)))
    sn, cn = math.sin(phi), math.cos(phi)
    dn = cn / math.cos(phi_next - phi) if n > 0 else 1.0
    am = phi + 2.0 * math.pi * periods
    return JacobiValues(sn, cn, dn, _ratio(sn, cn), am)


def _ratio(s: float, c: float) -> float:
    if c == 0.0:
        return math.copysign(math.inf, s)
    return s / c


def ellip_e_incomplete(u: float, k: float) -> float:
    """E(u, k) = integral_0^u dn^2(v, k) dv for any finite u."""
    _check_modulus(k)
    if not math.isfinite(u):
        raise EllipticDomainError("non-finite argument")
    if u == 0.0:
        return 0.0
    if k == 0.0:
        return u
    if k == 1.0:
        return math.tanh(u)
    return legendre_e(jacobi(u, k).am, k)


def inverse_cn(y: float, k: float) -> float:
    """Smallest u >= 0 with cn(u, k) = y, for 0 < y <= 1."""
    _check_modulus(k)
    if not (0.0 < y <= 1.0):
        raise EllipticDomainError(f"cn^-1 needs 0 < y <= 1, got {y!r}")
    phi = math.atan2(math.sqrt((1.0 - y) * (1.0 + y)), y)
    return legendre_f(phi, k)


def hyp2f1(a: float, b: float, c: float, z: float,
           tol: float = HYP2F1_TERM_TOL, max_terms: int = HYP2F1_MAX_TERMS) -> float:
    """Gauss hypergeometric function by its power series, for |z| < 1."""
    if c <= 0 and float(c).is_integer():
        raise ValueError(f"c={c!r} is a pole of 2F1")
    if not abs(z) < 1.0:
        raise ConvergenceError(f"series for 2F1 diverges at |z| = {abs(z)!r} >= 1")
    term = 1.0
    total = 1.0
    for n in range(max_terms):
        term *= (a + n) * (b + n) / ((c + n) * (n + 1)) * z
        total += term
        if term == 0.0 or abs(term) < tol * abs(total):
            return total
    raise ConvergenceError(f"2F1 series not converged after {max_terms} terms")
