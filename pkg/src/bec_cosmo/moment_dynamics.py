"""Moment dynamics of a harmonically trapped condensate.

The moments obey

    I1' = 0,  I2' = I3,  I3' = -2 w^2 I2 + 4 I4,  I4' = -(w^2 / 2) I3,

which conserve lambda = 2 I2 I4 - I3^2 / 4 for any w(t). X = sqrt(I2) then
solves the Ermakov-Milne-Pinney equation X'' + w^2 X = lambda / X^3.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from scipy.interpolate import CubicHermiteSpline, CubicSpline

from .closed_form.families import (
    GammaFamily,
    Model,
    _model,
    i4_closure,
    omega_sq_law,
    radicand,
)
from .ode_engine import DenseSolution, Event, IntegrationError, fd_second_derivative, rk_integrate

__all__ = [
    "MomentState",
    "ConstantTrap",
    "ClosureTrap",
    "TabulatedTrap",
    "FunctionTrap",
    "TrapSpec",
    "Trajectory",
    "moment_rhs",
    "lambda_invariant",
    "evolve",
    "emp_residual",
    "i2_scalar_residual",
    "closure_initial_state",
    "I2_FLOOR",
]

I2_FLOOR = 1e-12
RTOL_RANGE = (1e-13, 1e-3)
EMP_FD_STEP = 5e-3
COLLAPSE_RATIO = 1e-6


@dataclass(frozen=True)
class MomentState:
    t: float
    I1: float
    I2: float
    I3: float
    I4: float

    def as_array(self) -> np.ndarray:
        return np.array([self.I1, self.I2, self.I3, self.I4])

    @classmethod
    def from_array(cls, t: float, y) -> "MomentState":
        return cls(float(t), *(float(v) for v in y))


@dataclass(frozen=True)
class ConstantTrap:
    omega0: float

    def __post_init__(self):
        if not math.isfinite(self.omega0):
            raise ValueError("omega0 must be finite")

    def omega_sq(self, t: float, I2: float) -> float:
        return self.omega0 * self.omega0


@dataclass(frozen=True)
class ClosureTrap:
    """w^2 fixed by an equation of state: w^2 = omega_sq_law(I2)."""

    fam: GammaFamily
    model: Model | None = None

    def __post_init__(self):
        object.__setattr__(self, "model", _model(self.fam, self.model))

    def omega_sq(self, t: float, I2: float) -> float:
        # stages may probe I2 <= 0 just before the floor event; hold at the floor
        return omega_sq_law(max(I2, I2_FLOOR), self.fam, self.model)


@dataclass(frozen=True)
class TabulatedTrap:
    """w^2(t) linearly interpolated from samples on a strictly increasing grid."""

    times: np.ndarray
    omega_sq_values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        w = np.asarray(self.omega_sq_values, dtype=float)
        if t.ndim != 1 or t.shape != w.shape or len(t) < 2:
            raise ValueError("tabulated trap needs matching 1-d arrays with at least 2 samples")
        if np.any(np.diff(t) <= 0):
            raise ValueError("tabulated trap grid must be strictly increasing")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("tabulated omega^2 must be finite and non-negative")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "omega_sq_values", w)

    def omega_sq(self, t: float, I2: float) -> float:
        return float(np.interp(t, self.times, self.omega_sq_values))


@dataclass(frozen=True)
class FunctionTrap:
    """w^2(t) from a callable, for smooth prescribed protocols."""

    fn: Callable[[float], float]

    def omega_sq(self, t: float, I2: float) -> float:
        return float(self.fn(t))


TrapSpec = Union[ConstantTrap, ClosureTrap, TabulatedTrap, FunctionTrap]


def moment_rhs(s: MomentState, omega_sq: float) -> tuple[float, float, float, float]:
    return (0.0, s.I3, -2.0 * omega_sq * s.I2 + 4.0 * s.I4, -0.5 * omega_sq * s.I3)


def lambda_invariant(s: MomentState) -> float:
    return 2.0 * s.I2 * s.I4 - 0.25 * s.I3 * s.I3


def _lambda_arr(y: np.ndarray) -> np.ndarray:
    return 2.0 * y[..., 1] * y[..., 3] - 0.25 * y[..., 2] ** 2


@dataclass(frozen=True)
class Trajectory:
    """Integrated (or tabulated) moment trajectory with a continuous interpolant.

    ``states`` has columns (I1, I2, I3, I4); ``dense`` is the integrator's
    dense output, or None for trajectories read from samples, which are
    interpolated by cubic Hermite splines using the moment equations for
    the slopes (and a cubic spline for w^2 when no trap is attached).
    """

    t: np.ndarray
    states: np.ndarray
    omega_sq: np.ndarray
    trap: TrapSpec | None = None
    dense: DenseSolution | None = None
    halted: str | None = None
    halt_time: float | None = None

    def __post_init__(self):
        if len(self.t) > 1 and not np.all(np.diff(self.t) > 0):
            raise ValueError("trajectory times must be strictly increasing")
        if np.any(self.states[:, 1] <= 0):
            raise ValueError("I2 must stay positive on a trajectory")

    @property
    def t0(self) -> float:
        return float(self.t[0])

    @property
    def t_final(self) -> float:
        return float(self.t[-1])

    @property
    def lam(self) -> float:
        """lambda measured at the first sample."""
        return float(_lambda_arr(self.states[0]))

    def lambdas(self) -> np.ndarray:
        return _lambda_arr(self.states)

    def state(self, t) -> np.ndarray:
        """Interpolated (I1, I2, I3, I4) at t (scalar or array)."""
        if self.dense is not None:
            return self.dense(t)
        return self._spline()(t)

    def omega_sq_at(self, t) -> np.ndarray:
        tt = np.atleast_1d(np.asarray(t, dtype=float))
        if self.trap is None:
            out = self._omega_spline()(tt)
        else:
            y = np.atleast_2d(self.state(tt))
            out = np.array([self.trap.omega_sq(ti, yi[1]) for ti, yi in zip(tt, y)])
        return out[0] if np.ndim(t) == 0 else out

    def _spline(self):
        spl = self.__dict__.get("_hermite")
        if spl is None:
            y = self.states
            w = self.omega_sq
            dy = np.stack([np.zeros(len(y)), y[:, 2], -2 * w * y[:, 1] + 4 * y[:, 3],
                           -0.5 * w * y[:, 2]], axis=1)
            spl = CubicHermiteSpline(self.t, y, dy, axis=0)
            object.__setattr__(self, "_hermite", spl)
        return spl

    def _omega_spline(self):
        spl = self.__dict__.get("_omega")
        if spl is None:
            spl = CubicSpline(self.t, self.omega_sq) if len(self.t) > 2 else (
                lambda x: np.interp(x, self.t, self.omega_sq))
            object.__setattr__(self, "_omega", spl)
        return spl

    def rows(self):
        for ti, yi, wi in zip(self.t, self.states, self.omega_sq):
            yield MomentState.from_array(ti, yi), float(wi)

    def resample(self, n: int) -> "Trajectory":
        """Uniform grid of n samples over [t0, t_final] from the interpolant."""
        if n < 2:
            raise ValueError("need at least 2 samples")
        tt = np.linspace(self.t0, self.t_final, n)
        y = self.state(tt)
        w = self.omega_sq_at(tt)
        return Trajectory(tt, y, np.asarray(w, dtype=float), self.trap, self.dense,
                          self.halted, self.halt_time)


def evolve(s0: MomentState, trap: TrapSpec, t_end: float, rtol: float = 1e-10,
           i2_floor: float = I2_FLOOR, samples: int = 2001,
           max_steps: int = 1_000_000) -> Trajectory:
    """Integrate the four-moment system from s0 to t_end.

    The integration halts at the ``i2_floor`` event when I2 crosses the floor,
    or with ``halted='collapse'`` when the step size underflows after I2 has
    dropped below ``COLLAPSE_RATIO`` times its maximum; the trajectory then
    ends at that time.
    Samples are placed on a uniform grid over the integrated interval.
    """
    if not s0.I2 > 0.0:
        raise ValueError(f"I2 must be positive, got {s0.I2!r}")
    if not RTOL_RANGE[0] <= rtol <= RTOL_RANGE[1]:
        raise ValueError(f"rtol={rtol!r} outside [{RTOL_RANGE[0]}, {RTOL_RANGE[1]}]")
    if not t_end > s0.t:
        raise ValueError("t_end must exceed the initial time")
    if samples < 2:
        raise ValueError("samples must be at least 2")
    if isinstance(trap, TabulatedTrap) and not (trap.times[0] <= s0.t and t_end <= trap.times[-1]):
        raise ValueError("integration interval leaves the tabulated trap grid")

    def rhs(t, y):
        w = trap.omega_sq(t, y[1])
        return np.array([0.0, y[2], -2.0 * w * y[1] + 4.0 * y[3], -0.5 * w * y[2]])

    floor = Event("i2_floor", lambda t, y: y[1] - i2_floor, terminal=True)
    y0 = s0.as_array()
    try:
        sol = rk_integrate(rhs, y0, s0.t, t_end, rtol=rtol,
                           atol=rtol * 1e-2 * np.linalg.norm(y0), events=(floor,),
                           max_steps=max_steps)
    except IntegrationError as exc:
        sol = exc.partial
        # near a collapse I2 ~ sqrt(t_c - t) and the step size underflows long
        # before I2 reaches the floor; record that as a collapse
        if sol is None or len(sol.breaks) < 2 or sol.nodes[-1, 1] > COLLAPSE_RATIO * np.max(sol.nodes[:, 1]):
            raise
        sol.event, sol.event_time = "collapse", sol.t_final
    tt = np.linspace(s0.t, sol.t_final, samples)
    y = sol(tt)
    if sol.event is not None:
        # last sample sits on the floor; keep the strictly positive part
        keep = y[:, 1] > 0.0
        tt, y = tt[keep], y[keep]
    w = np.array([trap.omega_sq(ti, yi[1]) for ti, yi in zip(tt, y)])
    return Trajectory(tt, y, w, trap, sol, sol.event, sol.event_time)


def emp_residual(traj: Trajectory, samples: int | None = None) -> float:
    """max |X'' + w^2 X - lambda / X^3| with X = sqrt(I2) over interior points.

    X'' is taken by 4th-order finite differences of the interpolant on a
    uniform grid of ``samples`` points. The default spacing is at most
    ``EMP_FD_STEP``, where the stencil's truncation error sits below the
    interpolation noise it amplifies. One-sided edge stencils are excluded
    from the maximum.
    """
    span = traj.t_final - traj.t0
    n = samples or max(len(traj.t), int(math.ceil(span / EMP_FD_STEP)) + 1)
    if n < 5:
        raise ValueError("need at least 5 samples")
    tt = np.linspace(traj.t0, traj.t_final, n)
    h = tt[1] - tt[0]
    X = np.sqrt(np.atleast_2d(traj.state(tt))[:, 1])
    Xpp = fd_second_derivative(X, h)
    w = np.asarray(traj.omega_sq_at(tt), dtype=float)
    res = Xpp + w * X - traj.lam / X**3
    return float(np.max(np.abs(res[2:-2])))


def i2_scalar_residual(traj: Trajectory, fam: GammaFamily, model: Model | None = None) -> float:
    """max over samples of |I3^2/4 - r(I2)| with r built from the trajectory's lambda."""
    model = _model(fam, model)
    if isinstance(traj.trap, ClosureTrap) and (traj.trap.fam.kind is not fam.kind
                                               or traj.trap.model is not model):
        raise ValueError("trajectory closure does not match the requested family/model")
    fam_run = GammaFamily(fam.kind, fam.d, fam.alpha, traj.lam, fam.Lambda, fam.n,
                          gamma_value=fam.gamma_value)
    I2 = traj.states[:, 1]
    I3 = traj.states[:, 2]
    r = np.array([radicand(x, fam_run, model) for x in I2])
    return float(np.max(np.abs(0.25 * I3 * I3 - r)))


def closure_initial_state(fam: GammaFamily, I2_0: float, model: Model | None = None,
                          sign: int = 1, I1: float = 1.0, t0: float = 0.0) -> MomentState:
    """Initial moments consistent with a closure: I4 from the closure, I3 = sign 2 sqrt(r(I2_0)).

    fam.lam is the invariant the state will carry.
    """
    model = _model(fam, model)
    r = radicand(I2_0, fam, model)
    if r < 0.0:
        if r < -1e-12 * max(1.0, abs(fam.lam)):
            raise ValueError(f"no real I3 at I2_0={I2_0!r}: r = {r!r} < 0")
        r = 0.0
    return MomentState(t0, I1, I2_0, sign * 2.0 * math.sqrt(r), i4_closure(I2_0, fam, model))

