"""Numeric plumbing shared by the rest of the package.

Dormand-Prince 5(4) integration with dense output and event location,
adaptive quadrature (Gauss-Kronrod for smooth integrands, tanh-sinh for
integrable endpoint singularities), safeguarded root bracketing and
fourth-order finite-difference stencils.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

__all__ = [
    "IntegrationError",
    "DenseSolution",
    "Event",
    "rk_integrate",
    "quad_adaptive",
    "tanh_sinh",
    "gauss_legendre",
    "invert_monotone",
    "fd_derivative",
    "fd_second_derivative",
]


class IntegrationError(RuntimeError):
    """Raised when a numeric routine cannot meet its contract.

    ``partial`` holds the dense solution up to the failure, when there is one.
    """

    def __init__(self, message: str, partial: "DenseSolution | None" = None):
        super().__init__(message)
        self.partial = partial


# Dormand-Prince 5(4) tableau.
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_E = np.array(
    [71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40]
)
# Shampine's quartic continuous extension; row i weights stage i against
# the powers theta, theta**2, theta**3, theta**4.
_P = np.array(
    [
        [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
        [0.0, 0.0, 0.0, 0.0],
        [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
        [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
        [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
        [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
        [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
    ]
)

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 10.0
PI_BETA = 0.04
EVENT_TOL = 1e-12


@dataclass(frozen=True)
class Event:
    """A scalar event function g(t, y); a sign change of g ends or marks a step."""

    name: str
    func: Callable[[float, np.ndarray], float]
    terminal: bool = True


@dataclass
class DenseSolution:
    """Piecewise quartic interpolant over the accepted steps.

    ``breaks`` holds the step boundaries (monotone in the integration
    direction), ``nodes`` the solution at those boundaries and ``coeffs``
    the per-step polynomial coefficients in theta = (t - t_i) / h_i.
    """

    breaks: np.ndarray
    nodes: np.ndarray
    coeffs: np.ndarray
    n_accepted: int = 0
    n_rejected: int = 0
    n_rhs: int = 0
    event: str | None = None
    event_time: float | None = None

    @property
    def t0(self) -> float:
        return float(self.breaks[0])

    @property
    def t_final(self) -> float:
        return float(self.breaks[-1])

    def _locate(self, t: np.ndarray) -> np.ndarray:
        forward = self.breaks[-1] >= self.breaks[0]
        b = self.breaks if forward else self.breaks[::-1]
        idx = np.searchsorted(b, t, side="right") - 1
        idx = np.clip(idx, 0, len(self.breaks) - 2)
        if not forward:
            idx = len(self.breaks) - 2 - idx
        return idx

    def __call__(self, t):
        """Evaluate the interpolant; scalar t gives shape (n,), array t gives (m, n)."""
        scalar = np.ndim(t) == 0
        tt = np.atleast_1d(np.asarray(t, dtype=float))
        idx = self._locate(tt)
        t_lo = self.breaks[idx]
        h = self.breaks[idx + 1] - t_lo
        theta = (tt - t_lo) / h
        powers = np.stack([theta, theta**2, theta**3, theta**4], axis=-1)
        # coeffs[i] has shape (4, n): y = y_i + sum_j coeffs[i, j] theta^(j+1)
        out = self.nodes[idx] + np.einsum("mj,mjn->mn", powers, self.coeffs[idx])
        return out[0] if scalar else out

    def derivative(self, t):
        """Time derivative of the interpolant."""
        scalar = np.ndim(t) == 0
        tt = np.atleast_1d(np.asarray(t, dtype=float))
        idx = self._locate(tt)
        t_lo = self.breaks[idx]
        h = self.breaks[idx + 1] - t_lo
        theta = (tt - t_lo) / h
        dpowers = np.stack([np.ones_like(theta), 2 * theta, 3 * theta**2, 4 * theta**3], axis=-1)
        out = np.einsum("mj,mjn->mn", dpowers, self.coeffs[idx]) / h[:, None]
        return out[0] if scalar else out


def _initial_step(rhs, t0, y0, f0, direction, rtol, atol, order=5):
    scale = atol + np.abs(y0) * rtol
    d0 = np.sqrt(np.mean((y0 / scale) ** 2))
    d1 = np.sqrt(np.mean((f0 / scale) ** 2))
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    y1 = y0 + direction * h0 * f0
    f1 = rhs(t0 + direction * h0, y1)
    d2 = np.sqrt(np.mean(((f1 - f0) / scale) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1.0 / (order + 1))
    return min(100 * h0, h1)


def _step(rhs, t, y, f, h):
    k = np.empty((7, y.size))
    k[0] = f
    for i in range(1, 7):
        dy = np.dot(_A[i], k[:i]) * h
        k[i] = rhs(t + _C[i] * h, y + dy)
    y_new = y + h * np.dot(_B5, k)
    err = h * np.dot(_E, k)
    return y_new, err, k


def _bisect_event(ev: Event, poly, t_lo, t_hi, g_lo):
    a, b, ga = t_lo, t_hi, g_lo
    while abs(b - a) > EVENT_TOL:
        mid = 0.5 * (a + b)
        gm = ev.func(mid, poly(mid))
        if gm == 0.0:
            return mid
        if (gm > 0) == (ga > 0):
            a, ga = mid, gm
        else:
            b = mid
    return 0.5 * (a + b)


def rk_integrate(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    y0: Sequence[float],
    t0: float,
    t_end: float,
    rtol: float = 1e-10,
    atol: float | np.ndarray | None = None,
    events: Sequence[Event] = (),
    max_steps: int = 1_000_000,
    h_max: float | None = None,
) -> DenseSolution:
    """Integrate y' = rhs(t, y) from t0 to t_end with the Dormand-Prince 5(4) pair.

    Step control is a PI controller on the embedded error estimate. Events are
    located by bisection on the dense output to ``EVENT_TOL`` in t; a terminal
    event truncates the solution at the event time.

    Raises
    ------
    IntegrationError
        On step-size underflow, non-finite state or when ``max_steps`` is hit.
    """
    if rtol < 1e-13:
        raise ValueError(f"rtol={rtol!r} below the supported floor 1e-13")
    y = np.array(y0, dtype=float)
    if not np.all(np.isfinite(y)):
        raise ValueError("non-finite initial state")
    if atol is None:
        atol = rtol * 1e-2 * max(np.linalg.norm(y), 1.0)
    atol = np.broadcast_to(np.asarray(atol, dtype=float), y.shape)

    t = float(t0)
    direction = 1.0 if t_end >= t0 else -1.0
    span = abs(t_end - t0)
    h_max = span if h_max is None else h_max

    breaks = [t]
    nodes = [y.copy()]
    coeffs = []
    if span == 0.0:
        return DenseSolution(np.array(breaks), np.array(nodes), np.zeros((0, 4, y.size)))

    f = np.asarray(rhs(t, y), dtype=float)
    n_rhs = 1
    h = min(_initial_step(rhs, t, y, f, direction, rtol, atol), h_max)
    n_rhs += 1
    err_prev = 1e-4
    n_acc = n_rej = 0
    g_prev = [ev.func(t, y) for ev in events]
    hit_name = None
    hit_time = None

    while direction * (t_end - t) > 0:
        if n_acc + n_rej >= max_steps:
            raise IntegrationError(f"max_steps={max_steps} exceeded at t={t!r}")
        min_step = 10 * abs(np.nextafter(t, direction * np.inf) - t)
        if h < min_step:
            raise IntegrationError(f"step size underflow at t={t!r} (h={h!r})",
                                   partial=_assemble(breaks, nodes, coeffs, y.size, n_acc, n_rej, n_rhs))
        remaining = abs(t_end - t)
        last = h >= remaining
        if last:
            h = remaining
        h_signed = direction * h
        y_new, err, k = _step(rhs, t, y, f, h_signed)
        n_rhs += 6
        if not np.all(np.isfinite(y_new)):
            h *= MIN_FACTOR
            n_rej += 1
            continue
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err_norm = float(np.sqrt(np.mean((err / scale) ** 2)))
        if err_norm <= 1.0:
            if err_norm == 0.0:
                factor = MAX_FACTOR
            else:
                factor = SAFETY * err_norm ** (-(0.2 - 0.75 * PI_BETA)) * err_prev**PI_BETA
                factor = min(MAX_FACTOR, max(MIN_FACTOR, factor))
            t_new = t_end if last else t + h_signed
            c = h_signed * (k.T @ _P).T  # (4, n)
            y_ref = y

            def poly(tt, y_ref=y_ref, c=c, t_lo=t, hs=h_signed):
                th = (tt - t_lo) / hs
                return y_ref + th * c[0] + th**2 * c[1] + th**3 * c[2] + th**4 * c[3]

            f_new = k[6]
            # event detection on the accepted step
            stop_at = None
            for i, ev in enumerate(events):
                g_new = ev.func(t_new, y_new)
                if g_prev[i] != 0.0 and (g_new == 0.0 or (g_new > 0) != (g_prev[i] > 0)):
                    te = _bisect_event(ev, poly, t, t_new, g_prev[i])
                    if ev.terminal and (stop_at is None or direction * (te - stop_at[0]) < 0):
                        stop_at = (te, ev.name)
                g_prev[i] = g_new
            if stop_at is not None:
                te, name = stop_at
                ye = poly(te)
                # store the truncated step as a fresh polynomial through (t, y) and (te, ye)
                th_e = (te - t) / h_signed
                c_trunc = np.array([c[0] * th_e, c[1] * th_e**2, c[2] * th_e**3, c[3] * th_e**4])
                breaks.append(te)
                nodes.append(ye)
                coeffs.append(c_trunc)
                n_acc += 1
                hit_name, hit_time = name, te
                break
            breaks.append(t_new)
            nodes.append(y_new)
            coeffs.append(c)
            t, y, f = t_new, y_new, f_new
            err_prev = max(err_norm, 1e-4)
            n_acc += 1
            h = min(h * factor, h_max)
        else:
            factor = max(MIN_FACTOR, SAFETY * err_norm ** -0.2)
            h *= factor
            n_rej += 1

    return _assemble(breaks, nodes, coeffs, y.size, n_acc, n_rej, n_rhs, hit_name, hit_time)


def _assemble(breaks, nodes, coeffs, n, n_acc, n_rej, n_rhs, event=None, event_time=None):
    return DenseSolution(
        breaks=np.array(breaks),
        nodes=np.array(nodes),
        coeffs=np.array(coeffs).reshape(-1, 4, n),
        n_accepted=n_acc,
        n_rejected=n_rej,
        n_rhs=n_rhs,
        event=event,
        event_time=event_time,
    )


# ---------------------------------------------------------------------------
# quadrature

_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1]."""
    if n not in _GL_CACHE:
        _GL_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _GL_CACHE[n]


def tanh_sinh(f: Callable[..., float], a: float, b: float, tol: float = 1e-12,
              max_level: int = 12, distances: bool = False) -> float:
    """Double-exponential quadrature, tolerant of integrable endpoint singularities.

    f is never evaluated at a or b. With ``distances=True`` it is called as
    ``f(x, x - a, b - x)`` where the distance to the nearer endpoint is exact,
    which keeps integrands like 1/sqrt(b - x) accurate next to the singularity.
    """
    if a == b:
        return 0.0
    if b < a:
        return -tanh_sinh(f, b, a, tol, max_level, distances)
    width = b - a
    half = 0.5 * width
    h = 1.0
    t_max = 4.5

    def contrib(t):
        s = 0.5 * math.pi * math.sinh(t)
        ch = math.cosh(s)
        near = half / (math.exp(abs(s)) * ch)  # half * (1 - tanh|s|)
        if near == 0.0:
            return 0.0
        w = 0.5 * math.pi * math.cosh(t) / (ch * ch)
        if s >= 0:
            da, db = width - near, near
            x = b - near
        else:
            da, db = near, width - near
            x = a + near
        if not distances:
            if x <= a or x >= b:
                return 0.0
            return w * f(x)
        return w * f(x, da, db)

    total = contrib(0.0)
    n = int(t_max / h)
    for k in range(1, n + 1):
        total += contrib(k * h) + contrib(-k * h)
    est = total * h
    for level in range(1, max_level + 1):
        h *= 0.5
        n = int(t_max / h)
        for k in range(1, n + 1, 2):
            total += contrib(k * h) + contrib(-k * h)
        new = total * h
        if level >= 3 and abs(new - est) * half <= tol:
            return half * new
        est = new
    raise IntegrationError("tanh-sinh quadrature did not converge")


def quad_adaptive(f: Callable[..., float], a: float, b: float, tol: float = 1e-12,
                  singular: bool = False, distances: bool = False) -> float:
    """Integrate f over [a, b] to absolute tolerance ``tol``.

    Smooth integrands go through adaptive Gauss-Kronrod (QUADPACK). With
    ``singular=True`` the caller declares an integrable endpoint singularity and
    tanh-sinh is used instead (see :func:`tanh_sinh` for ``distances``).
    """
    if singular or distances:
        return tanh_sinh(f, a, b, tol, distances=distances)
    val, err = integrate.quad(f, a, b, epsabs=tol, epsrel=0.0, limit=500)
    if not math.isfinite(val) or err > 10 * max(tol, 1e-14 * abs(val)):
        raise IntegrationError(f"quadrature did not converge (error estimate {err:.3g})")
    return float(val)


# ---------------------------------------------------------------------------
# root bracketing

def invert_monotone(
    fn: Callable[[float], float],
    target: float,
    lo: float,
    hi: float,
    dfn: Callable[[float], float] | None = None,
    xtol: float = 1e-15,
    max_iter: int = 200,
) -> float:
    """Solve fn(x) = target for monotone fn on [lo, hi] by safeguarded Newton.

    Newton steps (when ``dfn`` is given) are accepted only while they stay
    inside the current bracket; otherwise the bracket is bisected.
    """
    f_lo = fn(lo) - target
    f_hi = fn(hi) - target
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if (f_lo > 0) == (f_hi > 0):
        raise ValueError(f"target {target!r} not bracketed by [{lo!r}, {hi!r}]")
    increasing = f_hi > 0
    x = 0.5 * (lo + hi)
    for _ in range(max_iter):
        fx = fn(x) - target
        if fx == 0.0:
            return x
        if (fx > 0) == increasing:
            hi = x
        else:
            lo = x
        if hi - lo <= xtol * max(1.0, abs(x)):
            return 0.5 * (lo + hi)
        x_new = None
        if dfn is not None:
            d = dfn(x)
            if d != 0.0 and math.isfinite(d):
                cand = x - fx / d
                if lo < cand < hi:
                    x_new = cand
        if x_new is None:
            x_new = 0.5 * (lo + hi)
        if abs(x_new - x) <= xtol * max(1.0, abs(x)):
            return x_new
        x = x_new
    return x


# ---------------------------------------------------------------------------
# finite differences

# fourth-order first-derivative stencils
_D1_CENTRAL = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_D1_FORWARD = np.array(
    [
        [-25.0, 48.0, -36.0, 16.0, -3.0],
        [-3.0, -10.0, 18.0, -6.0, 1.0],
    ]
) / 12.0
# fourth-order second-derivative stencils
_D2_CENTRAL = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0
_D2_FORWARD = np.array(
    [
        [45.0, -154.0, 214.0, -156.0, 61.0, -10.0],
        [10.0, -15.0, -4.0, 14.0, -6.0, 1.0],
    ]
) / 12.0


def fd_derivative(values, h: float) -> np.ndarray:
    """Fourth-order first derivative of samples on a uniform grid of spacing h.

    Central stencils in the interior, one-sided fourth-order stencils on the
    two outermost points at each end.
    """
    y = np.asarray(values, dtype=float)
    if y.shape[0] < 5:
        raise ValueError("fd_derivative needs at least 5 samples")
    out = np.empty_like(y)
    n = y.shape[0]
    out[2:-2] = (y[:-4] * _D1_CENTRAL[0] + y[1:-3] * _D1_CENTRAL[1]
                 + y[3:-1] * _D1_CENTRAL[3] + y[4:] * _D1_CENTRAL[4])
    for i in range(2):
        out[i] = np.tensordot(_D1_FORWARD[i], y[:5], axes=1)
        out[n - 1 - i] = -np.tensordot(_D1_FORWARD[i], y[::-1][:5], axes=1)
    return out / h


def fd_second_derivative(values, h: float) -> np.ndarray:
    """Fourth-order second derivative on a uniform grid (needs at least 6 samples)."""
    y = np.asarray(values, dtype=float)
    if y.shape[0] < 6:
        raise ValueError("fd_second_derivative needs at least 6 samples")
    out = np.empty_like(y)
    n = y.shape[0]
    out[2:-2] = (y[:-4] * _D2_CENTRAL[0] + y[1:-3] * _D2_CENTRAL[1] + y[2:-2] * _D2_CENTRAL[2]
                 + y[3:-1] * _D2_CENTRAL[3] + y[4:] * _D2_CENTRAL[4])
    for i in range(2):
        out[i] = np.tensordot(_D2_FORWARD[i], y[:6], axes=1)
        out[n - 1 - i] = np.tensordot(_D2_FORWARD[i], y[::-1][:6], axes=1)
    return out / (h * h)
