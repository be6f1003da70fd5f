"""Equation-of-state closures and the closed-form solutions they admit.

With p = (gamma - 1) rho the trap frequency becomes a power law in I2 and
I2 obeys a first-order equation Idot2^2 / 4 = r(I2) with

    r(I2) = 2 alpha I2^(-q) + c_Lambda I2 - lambda.

Per family, ``relation_for`` returns L(I2) with L(I2(t)) = kappa * (sign t) + t0,
L increasing in I2.
"""

from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass, field
from typing import Callable

from ..cubic_analysis import EmpCoefficients, RootClass
from ..ode_engine import quad_adaptive
from ..special_functions import hyp2f1
from .elliptic import EllipticBranch

__all__ = [
    "Model",
    "FamilyKind",
    "GammaFamily",
    "UnsupportedClosedForm",
    "ImplicitRelation",
    "omega_sq_law",
    "i4_closure",
    "radicand",
    "radicand_exponent",
    "lambda_coefficient",
    "family_integral",
    "hypergeometric_relation",
    "stiff_explicit",
    "matter_relation",
    "radiation_relation",
    "relation_for",
]

DOMAIN_EDGE_TOL = 1e-12


class Model(enum.Enum):
    FLRW = "FLRW"
    BIANCHI_I = "BianchiI"


class FamilyKind(enum.Enum):
    STIFF = "Stiff"
    MATTER = "Matter"
    RADIATION = "Radiation"
    BIANCHI_GAMMA2 = "BianchiGamma2"
    BIANCHI_GAMMA_N = "BianchiGammaN"
    CUSTOM = "Custom"


_FLRW_KINDS = {FamilyKind.STIFF, FamilyKind.MATTER, FamilyKind.RADIATION}
_BIANCHI_KINDS = {FamilyKind.BIANCHI_GAMMA2, FamilyKind.BIANCHI_GAMMA_N}


class UnsupportedClosedForm(ValueError):
    """No closed-form relation exists for this family; integrate numerically instead."""


@dataclass(frozen=True)
class GammaFamily:
    """Equation-of-state family p = (gamma - 1) rho with its constants.

    ``t0`` overrides the integration constant of the relation; by default it
    is fixed by the initial condition. ``gamma_value`` is only read for
    ``CUSTOM``.
    """

    kind: FamilyKind
    d: int = 4
    alpha: float = 1.0
    lam: float = 1.0
    Lambda: float = 0.0
    n: int = 1
    t0: float | None = None
    gamma_value: float | None = None

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 3:
            raise ValueError(f"d must be an integer >= 3, got {self.d!r}")
        if not self.alpha > 0.0:
            raise ValueError(f"alpha must be positive, got {self.alpha!r}")
        if self.kind is FamilyKind.BIANCHI_GAMMA_N and (int(self.n) != self.n or self.n < 1):
            raise ValueError(f"n must be an integer >= 1 (n = 0 gives gamma = 0), got {self.n!r}")
        if self.kind is FamilyKind.CUSTOM and not (self.gamma_value and self.gamma_value > 0.0):
            raise ValueError("CUSTOM family needs gamma_value > 0")

    @property
    def gamma(self) -> float:
        k, d = self.kind, self.d
        if k is FamilyKind.STIFF:
            return 6.0 / (d - 1)
        if k is FamilyKind.MATTER:
            return 4.0 / (d - 1)
        if k is FamilyKind.RADIATION:
            return 3.0 / (d - 1)
        if k is FamilyKind.BIANCHI_GAMMA2:
            return 2.0
        if k is FamilyKind.BIANCHI_GAMMA_N:
            return 2.0 * (1.0 - 1.0 / (self.n + 1))
        return float(self.gamma_value)

    @property
    def default_model(self) -> Model:
        return Model.BIANCHI_I if self.kind in _BIANCHI_KINDS else Model.FLRW


def _model(fam: GammaFamily, model: Model | None) -> Model:
    model = model or fam.default_model
    if fam.kind in _FLRW_KINDS and model is not Model.FLRW:
        raise ValueError(f"{fam.kind.value} is an FLRW family")
    if fam.kind in _BIANCHI_KINDS and model is not Model.BIANCHI_I:
        raise ValueError(f"{fam.kind.value} is a Bianchi I family")
    return model


def _check_i2(I2: float) -> None:
    if not I2 > 0.0:
        raise ValueError(f"I2 must be positive, got {I2!r}")


def omega_sq_law(I2: float, fam: GammaFamily, model: Model | None = None) -> float:
    """Trap frequency squared forced by the equation of state."""
    _check_i2(I2)
    model = _model(fam, model)
    g = fam.gamma
    if model is Model.FLRW:
        return g * (fam.d - 1) * fam.alpha / I2 ** ((g * (fam.d - 1) + 2.0) / 2.0)
    return g * fam.alpha / I2 ** (g / 2.0 + 1.0)


def i4_closure(I2: float, fam: GammaFamily, model: Model | None = None) -> float:
    """I4 as a function of I2 (first integral of the closed system)."""
    _check_i2(I2)
    model = _model(fam, model)
    g, d = fam.gamma, fam.d
    if model is Model.FLRW:
        return fam.alpha / I2 ** (g * (d - 1) / 2.0) + fam.Lambda / ((d - 1) * (d - 2))
    return fam.alpha / I2 ** (g / 2.0) + (d - 1) * fam.Lambda / (d - 2)


def radicand_exponent(fam: GammaFamily, model: Model | None = None) -> float:
    """q in r(I2) = 2 alpha I2^(-q) + c_Lambda I2 - lambda."""
    model = _model(fam, model)
    if model is Model.FLRW:
        return (fam.gamma * (fam.d - 1) - 2.0) / 2.0
    return fam.gamma / 2.0 - 1.0


def lambda_coefficient(fam: GammaFamily, model: Model | None = None) -> float:
    """c_Lambda in r(I2): 2 Lambda/((d-1)(d-2)) for FLRW, 2(d-1) Lambda/(d-2) for Bianchi I."""
    model = _model(fam, model)
    d = fam.d
    if model is Model.FLRW:
        return 2.0 * fam.Lambda / ((d - 1) * (d - 2))
    return 2.0 * (d - 1) * fam.Lambda / (d - 2)


def radicand(I2: float, fam: GammaFamily, model: Model | None = None) -> float:
    """r(I2) = Idot2^2 / 4 along a closed trajectory with invariant fam.lam."""
    _check_i2(I2)
    q = radicand_exponent(fam, model)
    return 2.0 * fam.alpha * I2 ** (-q) + lambda_coefficient(fam, model) * I2 - fam.lam


# ---------------------------------------------------------------------------
# closed-form antiderivatives


def family_integral(n: int, a: float, c: float, x: float) -> float:
    """Antiderivative of 1/sqrt(a x^(1/(n+1)) - c) as a finite sum."""
    if int(n) != n or n < 0:
        raise ValueError(f"n must be a non-negative integer, got {n!r}")
    if not x > 0.0:
        raise ValueError(f"x must be positive, got {x!r}")
    lead = a * x ** (1.0 / (n + 1))
    s = lead - c
    if s < 0.0:
        # the turning point s = 0 is an admissible endpoint; allow rounding below it
        if s < -DOMAIN_EDGE_TOL * max(abs(lead), abs(c)):
            raise ValueError(f"a x^(1/(n+1)) - c = {s!r} must be positive")
        s = 0.0
    total = 0.0
    for j in range(n + 1):
        total += math.comb(n, j) * s ** (n - j) * c**j / (2 * n - 2 * j + 1)
    return 2.0 * (n + 1) / a ** (n + 1) * math.sqrt(s) * total


def hypergeometric_relation(I2: float, alpha: float, lam: float, q: float) -> float:
    """I2^(q/2+1) 2F1(1/2 + 1/q, 1/2; 3/2 + 1/q; lam I2^q / 2 alpha) / (sqrt(2 alpha)(q + 2)).

    Antiderivative (time factor 1) for the Lambda = 0 equation with q > 0,
    valid while |lam I2^q / 2 alpha| < 1.
    """
    _check_i2(I2)
    if not q > 0.0:
        raise ValueError("hypergeometric relation needs q > 0")
    z = lam * I2**q / (2.0 * alpha)
    F = hyp2f1(0.5 + 1.0 / q, 0.5, 1.5 + 1.0 / q, z)
    return I2 ** (q / 2.0 + 1.0) * F / (math.sqrt(2.0 * alpha) * (q + 2.0))


def stiff_explicit(t: float, alpha: float, lam: float, sign: int, t0: float) -> float:
    """I2(t) = sqrt(2 alpha/lam - 4 lam (sign t + t0)^2); NaN once I2^2 <= 0."""
    s = sign * t + t0
    sq = 2.0 * alpha / lam - 4.0 * lam * s * s
    return math.sqrt(sq) if sq > 0.0 else math.nan


def _edge_gap(A: float, BI: float) -> float:
    gap = A - BI
    if gap < 0.0:
        if gap < -DOMAIN_EDGE_TOL * A:
            raise ValueError(f"I2 beyond the domain edge A/B by {-gap!r}")
        gap = 0.0
    return gap


def matter_relation(I2: float, alpha: float, lam: float) -> float:
    """-sqrt(A - B I) sqrt(I)/B + A/B^(3/2) arctan sqrt(B I/(A - B I)), A = 2 alpha, B = lam.

    Time factor 2; domain 0 < I2 < A/B with lam > 0.
    """
    _check_i2(I2)
    if not lam > 0.0:
        raise ValueError("the matter relation needs lambda > 0")
    A, B = 2.0 * alpha, lam
    gap = _edge_gap(A, B * I2)
    return (-math.sqrt(gap) * math.sqrt(I2) / B
            + A / B**1.5 * math.atan2(math.sqrt(B * I2), math.sqrt(gap)))


def radiation_relation(I2: float, alpha: float, lam: float) -> float:
    """Time-factor-2 relation for the Lambda = 0 radiation-like closure.

    Domain: lam > 0 and 2 alpha - lam sqrt(I2) > 0.
    """
    _check_i2(I2)
    if not lam > 0.0:
        raise ValueError("the radiation relation needs lambda > 0")
    gap = _edge_gap(2.0 * alpha, lam * math.sqrt(I2))
    q4 = I2**0.25
    return (6.0 * alpha**2 / lam**2.5 * math.atan2(math.sqrt(lam) * q4, math.sqrt(gap))
            - math.sqrt(gap) * (3.0 * alpha * q4 / lam**2 + I2**0.75 / lam))


# ---------------------------------------------------------------------------
# relation objects


@dataclass(frozen=True)
class ImplicitRelation:
    """L(I2(t)) = time_factor * sign * t + t0, with L increasing in I2.

    ``explicit`` gives I2(t) directly when a formula exists; ``route`` is one
    of ``explicit``, ``implicit``, ``elliptic``, ``quadrature``.
    """

    name: str
    route: str
    fam: GammaFamily
    model: Model
    lhs: Callable[[float], float]
    time_factor: float
    sign: int
    t0: float
    explicit: Callable[[float], float] | None = None
    constants: dict = field(default_factory=dict)
    # a second antiderivative of the same equation (differs from lhs by a constant)
    alternate: Callable[[float], float] | None = None

    def rhs(self, t: float) -> float:
        return self.time_factor * self.sign * t + self.t0

    def residual(self, t: float, I2: float) -> float:
        return self.lhs(I2) - self.rhs(t)

    def slope(self, I2: float) -> float:
        """dL/dI2 = time_factor / (2 sqrt(r(I2)))."""
        return self.time_factor / (2.0 * math.sqrt(max(radicand(I2, self.fam, self.model), 0.0)))

    def metadata(self) -> dict:
        return {
            "relation": self.name,
            "route": self.route,
            "sign": self.sign,
            "t0": self.t0,
            "time_factor": self.time_factor,
            **self.constants,
        }


def _quadrature_lhs(fam: GammaFamily, model: Model, anchor: float) -> Callable[[float], float]:
    def lhs(I2: float) -> float:
        f = lambda x: 0.5 / math.sqrt(max(radicand(x, fam, model), 0.0))
        lo, hi = sorted((anchor, I2))
        val = quad_adaptive(f, lo, hi, tol=1e-12, singular=True) if hi > lo else 0.0
        return val if I2 >= anchor else -val
    return lhs


def _matter_quadrature_lhs(fam: GammaFamily, model: Model, anchor: float) -> Callable[[float], float]:
    A, B, C = 2.0 * fam.alpha, fam.lam, lambda_coefficient(fam, model)

    def lhs(I2: float) -> float:
        f = lambda x: math.sqrt(x) / math.sqrt(max(C * x * x - B * x + A, 0.0))
        lo, hi = sorted((anchor, I2))
        val = quad_adaptive(f, lo, hi, tol=1e-12, singular=True) if hi > lo else 0.0
        return val if I2 >= anchor else -val
    return lhs


def _direction(I2_0: float, I3_0: float | None, sign: int | None,
               fam: GammaFamily, model: Model) -> int:
    if sign is not None:
        if sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        return sign
    if I3_0 is not None and I3_0 != 0.0:
        return 1 if I3_0 > 0.0 else -1
    if I3_0 is None and radicand(I2_0, fam, model) > 0.0:
        return 1
    # at rest: Iddot2 = 2 r'(I2) decides the direction
    h = 1e-6 * I2_0
    dr = radicand(I2_0 + h, fam, model) - radicand(I2_0 - h, fam, model)
    return 1 if dr >= 0.0 else -1


def relation_for(fam: GammaFamily, I2_0: float, model: Model | None = None,
                 I3_0: float | None = None, sign: int | None = None) -> ImplicitRelation:
    """The relation of a family anchored at I2(0) = I2_0.

    ``sign`` (the +- of the relation) defaults to the sign of Idot2(0) = I3_0,
    itself defaulting to the increasing branch. Radiation with Lambda != 0 has
    no closed form and raises :class:`UnsupportedClosedForm`.
    """
    _check_i2(I2_0)
    model = _model(fam, model)
    r0 = radicand(I2_0, fam, model)
    if r0 < -1e-12 * max(1.0, abs(fam.lam), 2.0 * fam.alpha * I2_0 ** -radicand_exponent(fam, model)):
        raise ValueError(f"I2_0={I2_0!r} is not reachable: Idot2^2/4 = {r0!r} < 0")
    r0 = max(r0, 0.0)
    s = _direction(I2_0, I3_0, sign, fam, model)
    a, lam, L, d, kind = fam.alpha, fam.lam, fam.Lambda, fam.d, fam.kind
    q = radicand_exponent(fam, model)

    def build(name, route, lhs, kappa, explicit=None, **constants):
        t0 = fam.t0 if fam.t0 is not None else lhs(I2_0)
        return ImplicitRelation(name, route, fam, model, lhs, kappa, s, t0, explicit, constants)

    if kind is FamilyKind.STIFF and L == 0.0:
        hyp = lambda x: hypergeometric_relation(x, a, lam, q)
        if lam == 0.0:
            root = math.sqrt(2.0 * a)
            # I2^2 = I2_0^2 + sign 4 sqrt(2 alpha) t
            lhs = lambda x: x * x / (4.0 * root)
            rel = build("stiff-lambda0", "explicit", lhs, 1.0)
            return _with_explicit(rel, lambda t: _sqrt_or_nan(4.0 * root * rel.rhs(t)))
        lhs = lambda x: -math.sqrt(max(2.0 * a - lam * x * x, 0.0)) / (2.0 * lam)
        if lam < 0.0:
            lhs = lambda x: math.sqrt(2.0 * a - lam * x * x) / (2.0 * -lam)
        rel = build("stiff", "explicit", lhs, 1.0)
        t0 = rel.t0
        # lhs = -sqrt(2a - lam I^2)/(2 lam) <=> I^2 = 2a/lam - 4 lam (sign t + t0)^2
        return _with_explicit(rel, lambda t: stiff_explicit(t, a, lam, s, t0), alternate=hyp)

    if kind is FamilyKind.BIANCHI_GAMMA2:
        b = lambda_coefficient(fam, model)
        if b == 0.0:
            slope = 2.0 * math.sqrt(max(2.0 * a - lam, 0.0))
            if slope == 0.0:
                raise ValueError("2 alpha = lambda with Lambda = 0: I2 is constant")
            rel = build("bianchi-gamma2-lambda0", "explicit", lambda x: x / slope, 1.0)
            return _with_explicit(rel, lambda t: _positive_or_nan(slope * rel.rhs(t)))
        # (2/b) sqrt(b I2 - lam + 2 alpha) = sign 2t + t0 <=> I2 = (b/4) s^2 + (lam - 2 alpha)/b
        rel = build("bianchi-gamma2", "explicit",
                    lambda x: 2.0 / b * math.sqrt(max(b * x - lam + 2.0 * a, 0.0)), 2.0, b=b)
        return _with_explicit(rel, lambda t: _positive_or_nan(
            0.25 * b * rel.rhs(t) ** 2 + (lam - 2.0 * a) / b))

    if kind is FamilyKind.BIANCHI_GAMMA_N and L == 0.0:
        n = fam.n
        return build(f"gamma-n{n}", "implicit",
                     lambda x: family_integral(n, 2.0 * a, lam, x), 2.0, n=n)

    if kind is FamilyKind.MATTER and L == 0.0 and lam > 0.0:
        return build("matter", "implicit", lambda x: matter_relation(x, a, lam), 2.0,
                     A=2.0 * a, B=lam)

    if kind is FamilyKind.RADIATION and L != 0.0:
        raise UnsupportedClosedForm(
            "radiation-like closure with Lambda != 0 has no closed-form relation")

    if kind is FamilyKind.RADIATION and lam > 0.0:
        return build("radiation", "implicit", lambda x: radiation_relation(x, a, lam), 2.0)

    if kind is FamilyKind.STIFF:
        coeffs = EmpCoefficients(a, lam, lambda_coefficient(fam, model))
        eb = EllipticBranch(coeffs)
        x0 = eb.x_of(I2_0)
        if _in_formula_region(eb, x0):
            r = eb.roots
            return build("stiff-elliptic", "elliptic", lambda x: eb.z_continuous(eb.x_of(x)), 1.0,
                         A=coeffs.A, B=coeffs.B, C=coeffs.C, root_class=r.cls.value,
                         delta=r.delta, modulus=r.modulus)

    if kind is FamilyKind.MATTER:
        return build("matter-quadrature", "quadrature", _matter_quadrature_lhs(fam, model, I2_0), 2.0,
                     A=2.0 * a, B=lam, C=lambda_coefficient(fam, model))

    return build("quadrature", "quadrature", _quadrature_lhs(fam, model, I2_0), 1.0)


def _in_formula_region(eb: EllipticBranch, x0: float) -> bool:
    r = eb.roots
    if r.cls is RootClass.ONE_REAL:
        return x0 > r.r1
    if r.cls is RootClass.THREE_REAL:
        return x0 > r.a
    if r.a == r.c:
        return x0 > r.a
    return x0 > r.c and x0 != r.a


def _sqrt_or_nan(v: float) -> float:
    return math.sqrt(v) if v > 0.0 else math.nan


def _positive_or_nan(v: float) -> float:
    return v if v > 0.0 else math.nan


def _with_explicit(rel: ImplicitRelation, fn: Callable[[float], float],
                   alternate: Callable[[float], float] | None = None) -> ImplicitRelation:
    return dataclasses.replace(rel, explicit=fn, alternate=alternate)
