"""Sampling I2(t) from a family relation.

Explicit relations are evaluated directly. Implicit ones are inverted on
the monotone segment holding the current time: between turning points
(zeros of the radicand) the relation runs forward, at a turning point the
sign of +-t flips, and a collapse I2 -> 0 ends the trajectory. Quadrature
routes take I2(t) from the integrated moment system instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from ..ode_engine import invert_monotone
from .families import (
    FamilyKind,
    GammaFamily,
    ImplicitRelation,
    Model,
    UnsupportedClosedForm,
    _model,
    i4_closure,
    omega_sq_law,
    radicand,
    relation_for,
)

__all__ = ["Bound", "FamilySolution", "radicand_bounds", "solve_family"]

SCAN_FACTOR = 1.25
SCAN_LIMIT = (1e-300, 1e300)
MAX_SEGMENTS = 100_000


@dataclass(frozen=True)
class Bound:
    """Edge of the accessible I2 interval: ``turning`` (r = 0), ``collapse`` (I2 -> 0) or ``open``."""

    value: float
    kind: str


@dataclass
class FamilySolution:
    relation: ImplicitRelation | None
    t: np.ndarray
    I2: np.ndarray
    omega_sq: np.ndarray
    metadata: dict = field(default_factory=dict)


def radicand_bounds(r, x0: float, direction: int) -> tuple[Bound, Bound]:
    """Nearest zeros of r below and above x0 by geometric scanning then bracketing.

    A start exactly on a turning point counts as the bound behind ``direction``.
    """
    r0 = r(x0)
    lo = hi = None
    if r0 <= 0.0:
        if direction > 0:
            lo = Bound(x0, "turning")
        else:
            hi = Bound(x0, "turning")
    if lo is None:
        lo = _scan(r, x0, 1.0 / SCAN_FACTOR, Bound(0.0, "collapse"))
    if hi is None:
        hi = _scan(r, x0, SCAN_FACTOR, Bound(math.inf, "open"))
    return lo, hi


def _scan(r, x0, factor, fallback):
    prev = x0
    x = x0 * factor
    while SCAN_LIMIT[0] < x < SCAN_LIMIT[1]:
        try:
            rx = r(x)
        except OverflowError:
            # a power term dominates from here on: r stays positive
            return fallback
        if rx <= 0.0:
            a, b = sorted((prev, x))
            if r(prev) <= 0.0:
                return Bound(prev, "turning")
            return Bound(brentq(r, a, b, xtol=1e-15 * max(1.0, b), rtol=1e-15), "turning")
        prev = x
        x *= factor
    return fallback


def _safe(fn, x):
    try:
        v = fn(x)
    except (ValueError, ArithmeticError):
        return math.nan
    return v


def _sample_implicit(rel: ImplicitRelation, I2_0: float, ts: np.ndarray, t_start: float,
                     fam: GammaFamily, model: Model):
    r = lambda x: radicand(x, fam, model)
    kappa = rel.time_factor
    G = lambda x: rel.lhs(x) / kappa
    dG = lambda x: 0.5 / math.sqrt(max(r(x), 1e-300))
    lo, hi = radicand_bounds(r, I2_0, rel.sign)
    G_lo = G(lo.value) if lo.kind == "turning" else _safe(G, max(lo.value, SCAN_LIMIT[0]))
    G_hi = G(hi.value) if hi.kind == "turning" else math.nan

    out = np.full(len(ts), math.nan)
    seg_t, seg_G, direction = t_start, G(I2_0), rel.sign
    segments = [(seg_t, seg_G, direction)]
    halted = None
    for i, t in enumerate(ts):
        while True:
            target = seg_G + direction * (t - seg_t)
            if direction > 0 and math.isfinite(G_hi) and target >= G_hi:
                if hi.kind != "turning":
                    halted = hi.kind
                    break
                seg_t, seg_G, direction = seg_t + (G_hi - seg_G), G_hi, -1
            elif direction < 0 and math.isfinite(G_lo) and target <= G_lo:
                if lo.kind != "turning":
                    halted = "collapse"
                    break
                seg_t, seg_G, direction = seg_t + (seg_G - G_lo), G_lo, 1
            else:
                break
            segments.append((seg_t, seg_G, direction))
            if len(segments) > MAX_SEGMENTS:
                raise ArithmeticError("too many turning points in the requested span")
        if halted:
            break
        a = lo.value if lo.kind == "turning" else max(lo.value, SCAN_LIMIT[0])
        b = hi.value if hi.kind == "turning" else _open_bracket(G, target, I2_0)
        if b is None:
            halted = "open"
            break
        if a > 0.0 and G(a) >= target:
            out[i] = a
        else:
            out[i] = invert_monotone(G, target, a, b, dfn=dG)
    turning = [{"t": s[0], "I2": lo.value if s[2] > 0 else hi.value} for s in segments[1:]]
    return out, {"lower_bound": [lo.value, lo.kind], "upper_bound": [hi.value, hi.kind],
                 "turning_points": turning, "halted": halted}


def _open_bracket(G, target, x0):
    x = max(x0, 1.0)
    while x < SCAN_LIMIT[1]:
        if G(x) >= target:
            return x
        x *= 2.0
    return None


def solve_family(fam: GammaFamily, I2_0: float, tspan, model: Model | None = None,
                 I3_0: float | None = None, sign: int | None = None,
                 samples: int = 2001, rtol: float = 1e-11) -> FamilySolution:
    """Closed-form relation for a family plus I2(t) sampled on a uniform grid.

    ``tspan`` is ``t_end`` or ``(t_start, t_end)``; the initial condition
    I2(t_start) = I2_0 anchors the relation unless ``fam.t0`` is set. Samples
    past a collapse are NaN. Relations without a closed form (quadrature
    routes, radiation with Lambda != 0) are sampled from the integrated
    moment system.
    """
    from ..moment_dynamics import ClosureTrap, MomentState, evolve

    model = _model(fam, model)
    t_start, t_end = (0.0, float(tspan)) if np.ndim(tspan) == 0 else map(float, tspan)
    if not t_end > t_start:
        raise ValueError("tspan must be increasing")
    ts = np.linspace(t_start, t_end, samples)
    try:
        rel = relation_for(fam, I2_0, model, I3_0=I3_0, sign=sign)
    except UnsupportedClosedForm as exc:
        rel = None
        note = str(exc)
    meta = {"family": fam.kind.value, "model": model.value, "gamma": fam.gamma, "d": fam.d,
            "alpha": fam.alpha, "lambda": fam.lam, "Lambda": fam.Lambda, "I2_0": I2_0}
    if fam.kind is FamilyKind.BIANCHI_GAMMA_N:
        meta["n"] = fam.n

    if rel is not None and rel.route == "explicit":
        # shift so the relation's own time origin is t_start
        I2 = np.array([rel.explicit(t - t_start) for t in ts])
        meta.update(rel.metadata())
        meta["halted"] = "collapse" if np.any(np.isnan(I2)) else None
    elif rel is not None and rel.route in ("implicit", "elliptic"):
        I2, extra = _sample_implicit(rel, I2_0, ts - t_start, 0.0, fam, model)
        meta.update(rel.metadata())
        meta.update(extra)
    else:
        s = sign if sign is not None else (rel.sign if rel is not None else
                                           (1 if I3_0 is None or I3_0 >= 0 else -1))
        r0 = max(radicand(I2_0, fam, model), 0.0)
        s0 = MomentState(t_start, 1.0, I2_0, s * 2.0 * math.sqrt(r0), i4_closure(I2_0, fam, model))
        traj = evolve(s0, ClosureTrap(fam, model), t_end, rtol=rtol, samples=samples)
        I2 = np.full(samples, math.nan)
        inside = ts <= traj.t_final
        I2[inside] = np.atleast_2d(traj.state(ts[inside]))[:, 1]
        I2[I2 <= 0.0] = math.nan
        meta.update(rel.metadata() if rel is not None else
                    {"relation": None, "route": "numeric", "note": note, "sign": s})
        meta["halted"] = traj.halted
    omega = np.array([omega_sq_law(x, fam, model) if x > 0 else math.nan for x in I2])
    return FamilySolution(rel, ts, I2, omega, meta)
