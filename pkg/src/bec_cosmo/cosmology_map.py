"""Moment trajectories read as FLRW or Bianchi I cosmologies.

FLRW:      a^2 = I2,  a H = I3 / 2,  rho = [(d-1)(d-2) I4 - Lambda] / K,
           p = [(d-2) w^2 I2 - (d-1)(d-2) I4 + Lambda] / K.
Bianchi I: R^(2(d-1)) = I2,  R^(d-1) H_R = I3 / (2(d-1)),
           rho = [((d-2)/(d-1)) I4 - Lambda] / K,
           p = [((d-2)/(d-1)) (w^2 I2 - I4) + Lambda] / K,
           lambda = -2 (d-1) K D / (d-2).

Both live in laboratory time t; cosmic time follows from dtau/dt = 1/sqrt(I2).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .closed_form.families import Model
from .moment_dynamics import Trajectory
from .ode_engine import fd_derivative, gauss_legendre

__all__ = [
    "CosmologyConfig",
    "CosmoSeries",
    "CosmicClock",
    "Anisotropy",
    "MappingWarning",
    "cosmic_time",
    "map_flrw",
    "map_bianchi",
    "flrw_residuals",
    "bianchi_residuals",
    "continuity_residual",
    "eos_residual",
    "table_identity_residual",
    "anisotropy_recover",
    "shear_D",
    "constancy_check",
]

CURVATURE_TOL = 1e-9
SHEAR_SUM_TOL = 1e-14
D_MATCH_RTOL = 1e-8
GL_NODES = 8


class MappingWarning(UserWarning):
    """A dictionary entry is inconsistent or unphysical for this trajectory."""


@dataclass(frozen=True)
class CosmologyConfig:
    """Gravitational-side constants.

    ``curvature_k`` None means "use the trajectory's lambda" (FLRW only).
    """

    model: Model = Model.FLRW
    d: int = 4
    Lambda: float = 0.0
    K: float = 1.0
    curvature_k: float | None = None
    gamma: float | None = None
    D_fluid: float = 0.0
    n_fluid: float = 0.0
    shear_constants: tuple[float, ...] | None = None

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 3:
            raise ValueError(f"d must be an integer >= 3, got {self.d!r}")
        if not self.K > 0.0:
            raise ValueError(f"K must be positive, got {self.K!r}")
        if self.curvature_k is not None and self.curvature_k not in (-1, 0, 1):
            raise ValueError(f"curvature_k must be -1, 0 or 1, got {self.curvature_k!r}")
        if self.gamma is not None and not self.gamma > 0.0:
            raise ValueError("gamma must be positive")
        if self.shear_constants is not None:
            c = tuple(float(v) for v in self.shear_constants)
            if len(c) != self.d - 1:
                raise ValueError(f"need d-1 = {self.d - 1} shear constants, got {len(c)}")
            if abs(sum(c)) > SHEAR_SUM_TOL * max(1.0, max(abs(v) for v in c)):
                raise ValueError(f"shear constants must sum to zero, sum = {sum(c)!r}")
            object.__setattr__(self, "shear_constants", c)


@dataclass
class CosmoSeries:
    """Rows on a uniform cosmic-time grid.

    ``scale`` is a (FLRW) or R (Bianchi I); ``H`` is H or H_R; ``H_sq`` is
    the third dictionary row I3^2/(4 I2) (FLRW) or I3^2/(4 (d-1)^2 I2),
    kept separately so the table identity can be checked.
    """

    model: Model
    tau: np.ndarray
    t: np.ndarray
    scale: np.ndarray
    H: np.ndarray
    H_sq: np.ndarray
    rho_phi: np.ndarray
    p_phi: np.ndarray
    I2: np.ndarray
    I3: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.tau)

    @property
    def h_tau(self) -> float:
        return float(self.tau[1] - self.tau[0])


@dataclass(frozen=True)
class CosmicClock:
    """tau(t) on the trajectory grid with Hermite interpolation both ways."""

    t: np.ndarray
    tau: np.ndarray
    Y: np.ndarray  # dt/dtau = sqrt(I2)

    def tau_of(self, t):
        return CubicHermiteSpline(self.t, self.tau, 1.0 / self.Y)(t)

    def t_of(self, tau):
        return CubicHermiteSpline(self.tau, self.t, self.Y)(tau)


@dataclass(frozen=True)
class Anisotropy:
    tau: np.ndarray
    alphas: np.ndarray  # (rows, d-1)
    X: np.ndarray  # (rows, d-1)
    D_shear: float
    D_lambda: float


def _cumulative(traj: Trajectory, fn, t: np.ndarray) -> np.ndarray:
    """Cumulative integral of fn(I2) over t, composite Gauss-Legendre on the interpolant."""
    x, w = gauss_legendre(GL_NODES)
    a, b = t[:-1], t[1:]
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    I2 = np.atleast_2d(traj.state(nodes))[:, 1]
    if np.any(I2 <= 0):
        raise ValueError("I2 must stay positive")
    vals = fn(I2).reshape(len(a), GL_NODES)
    pieces = half * (vals @ w)
    return np.concatenate([[0.0], np.cumsum(pieces)])


def cosmic_time(traj: Trajectory) -> CosmicClock:
    """tau(t) = integral from t0 of ds / sqrt(I2(s)), the same for both models."""
    Y = np.sqrt(traj.states[:, 1])
    if np.any(~(Y > 0)):
        raise ValueError("cosmic time needs I2 > 0")
    tau = _cumulative(traj, lambda I2: 1.0 / np.sqrt(I2), traj.t)
    return CosmicClock(traj.t, tau, Y)


def _uniform_rows(traj: Trajectory, samples: int | None):
    clock = cosmic_time(traj)
    n = samples or len(traj.t)
    if n < 5:
        raise ValueError("need at least 5 rows")
    tau = np.linspace(0.0, clock.tau[-1], n)
    t = clock.t_of(tau)
    t[0], t[-1] = traj.t0, traj.t_final
    y = np.atleast_2d(traj.state(t))
    w = np.asarray(traj.omega_sq_at(t), dtype=float)
    if np.any(y[:, 1] <= 0):
        raise ValueError("I2 must stay positive")
    return tau, t, y, w


def _warn(meta: dict, message: str) -> None:
    meta.setdefault("warnings", []).append(message)
    warnings.warn(message, MappingWarning, stacklevel=3)


def map_flrw(traj: Trajectory, cfg: CosmologyConfig, samples: int | None = None) -> CosmoSeries:
    """FLRW dictionary on a uniform cosmic-time grid."""
    if cfg.model is not Model.FLRW:
        raise ValueError("map_flrw needs an FLRW configuration")
    d, K, L = cfg.d, cfg.K, cfg.Lambda
    tau, t, y, w = _uniform_rows(traj, samples)
    I2, I3, I4 = y[:, 1], y[:, 2], y[:, 3]
    a = np.sqrt(I2)
    lam = traj.lam
    meta = {"model": "FLRW", "lambda": lam, "warnings": []}
    k = cfg.curvature_k
    if k is None:
        k = lam
        if min(abs(lam - v) for v in (-1, 0, 1)) > CURVATURE_TOL:
            _warn(meta, f"lambda = {lam!r} is not a curvature value in {{-1, 0, 1}}")
    elif abs(lam - k) > CURVATURE_TOL:
        _warn(meta, f"lambda = {lam!r} differs from curvature_k = {k!r}: Friedmann residual will not vanish")
    meta["curvature_k"] = k
    rho = ((d - 1) * (d - 2) * I4 - L) / K
    p = ((d - 2) * w * I2 - (d - 1) * (d - 2) * I4 + L) / K
    return CosmoSeries(Model.FLRW, tau, t, a, I3 / (2.0 * a), I3**2 / (4.0 * I2), rho, p, I2, I3, meta)


def map_bianchi(traj: Trajectory, cfg: CosmologyConfig, samples: int | None = None) -> CosmoSeries:
    """Bianchi I dictionary on a uniform cosmic-time grid; D is read off lambda."""
    if cfg.model is not Model.BIANCHI_I:
        raise ValueError("map_bianchi needs a Bianchi I configuration")
    d, K, L = cfg.d, cfg.K, cfg.Lambda
    tau, t, y, w = _uniform_rows(traj, samples)
    I2, I3, I4 = y[:, 1], y[:, 2], y[:, 3]
    R = I2 ** (1.0 / (2.0 * (d - 1)))
    lam = traj.lam
    D = -lam * (d - 2) / (2.0 * (d - 1) * K)
    meta = {"model": "BianchiI", "lambda": lam, "D": D, "warnings": []}
    if lam > 0.0:
        _warn(meta, f"lambda = {lam!r} > 0 gives D = {D!r} < 0, not a sum of squares")
    f = (d - 2) / (d - 1)
    rho = (f * I4 - L) / K
    p = (f * (w * I2 - I4) + L) / K
    H = I3 / (2.0 * (d - 1) * np.sqrt(I2))
    return CosmoSeries(Model.BIANCHI_I, tau, t, R, H, I3**2 / (4.0 * (d - 1) ** 2 * I2),
                       rho, p, I2, I3, meta)


def _check_rows(series: CosmoSeries) -> None:
    if len(series) < 5:
        raise ValueError("residuals need at least 5 rows")


def flrw_residuals(series: CosmoSeries, cfg: CosmologyConfig) -> tuple[float, float]:
    """(friedmann_max, continuity_max) over all rows."""
    _check_rows(series)
    d, K = cfg.d, cfg.K
    k = cfg.curvature_k if cfg.curvature_k is not None else series.metadata.get("curvature_k", 0.0)
    a, H = series.scale, series.H
    c = 2.0 / ((d - 1) * (d - 2))
    fluid = cfg.D_fluid / a**cfg.n_fluid if cfg.D_fluid else 0.0
    fried = H**2 + k / a**2 - c * cfg.Lambda - c * K * (series.rho_phi + fluid)
    return float(np.max(np.abs(fried))), continuity_residual(series, d)


def continuity_residual(series: CosmoSeries, d: int) -> float:
    """max |rho' + (d-1) H (rho + p)|; H is the mean expansion rate in both models."""
    _check_rows(series)
    drho = fd_derivative(series.rho_phi, series.h_tau)
    cont = drho + (d - 1) * series.H * (series.rho_phi + series.p_phi)
    return float(np.max(np.abs(cont)))


def bianchi_residuals(series: CosmoSeries, cfg: CosmologyConfig,
                      D: float | None = None) -> tuple[float, float]:
    """(eq10_max, eq11_max); D defaults to the value read off lambda."""
    _check_rows(series)
    d, K, L = cfg.d, cfg.K, cfg.Lambda
    D = series.metadata["D"] if D is None else D
    R2 = series.scale ** (2 * (d - 1))
    H = series.H
    dH = fd_derivative(H, series.h_tau)
    half = 0.5 * (d - 1) * (d - 2)
    eq10 = half * H**2 - D * K / R2 - K * series.rho_phi - L
    eq11 = (d - 2) * dH + half * H**2 + D * K / R2 + K * series.p_phi - L
    return float(np.max(np.abs(eq10))), float(np.max(np.abs(eq11)))


def eos_residual(series: CosmoSeries, gamma: float) -> float:
    """max |p - (gamma - 1) rho| / |rho| over rows."""
    rho = series.rho_phi
    scale = np.maximum(np.abs(rho), np.finfo(float).tiny)
    return float(np.max(np.abs(series.p_phi - (gamma - 1.0) * rho) / scale))


def table_identity_residual(series: CosmoSeries) -> float:
    """max relative gap between H^2 from the Hubble row and the tabulated H^2 row."""
    return float(np.max(np.abs(series.H**2 - series.H_sq) / np.maximum(series.H_sq, 1e-300)))


def shear_D(c, d: int, K: float) -> float:
    """D = sum over l < k of (c_l - c_k)^2 / (2 (d-1) K)."""
    c = np.asarray(c, dtype=float)
    diff = c[:, None] - c[None, :]
    return float(np.sum(np.triu(diff**2, 1)) / (2.0 * (d - 1) * K))


def anisotropy_recover(series: CosmoSeries, cfg: CosmologyConfig,
                       traj: Trajectory | None = None) -> Anisotropy:
    """Per-axis scale factors X_l = R exp(alpha_l), alpha_l = c_l integral dtau / R^(d-1).

    The integral equals integral dt / I2 in laboratory time; it is taken on
    the trajectory interpolant when ``traj`` is given, otherwise by the
    cumulative Simpson rule on the series rows.
    """
    if series.model is not Model.BIANCHI_I:
        raise ValueError("anisotropy needs a Bianchi I series")
    if cfg.shear_constants is None:
        raise ValueError("shear constants are required")
    c = np.asarray(cfg.shear_constants)
    d = cfg.d
    D_shear = shear_D(c, d, cfg.K)
    D_lam = series.metadata["D"]
    if abs(D_shear - D_lam) > D_MATCH_RTOL * max(abs(D_shear), abs(D_lam), 1e-300):
        raise ValueError(f"shear constants give D = {D_shear!r} but lambda gives D = {D_lam!r}")
    if traj is not None:
        t_nodes = np.unique(np.concatenate([series.t, [traj.t0]]))
        cum = _cumulative(traj, lambda I2: 1.0 / I2, t_nodes)
        integral = np.interp(series.t, t_nodes, cum)
    else:
        f = 1.0 / series.scale ** (d - 1)
        integral = _cumulative_rows(f, series.h_tau)
    alphas = integral[:, None] * c[None, :]
    X = series.scale[:, None] * np.exp(alphas)
    return Anisotropy(series.tau, alphas, X, D_shear, D_lam)


def _cumulative_rows(f: np.ndarray, h: float) -> np.ndarray:
    from scipy.integrate import cumulative_simpson

    return cumulative_simpson(f, dx=h, initial=0.0)


def constancy_check(g, R, M: float, tol: float = 1e-8) -> tuple[bool, float]:
    """Whether g R^M is constant: max relative deviation from its first value."""
    g = np.asarray(g, dtype=float)
    R = np.asarray(R, dtype=float)
    prod = g * R**M
    ref = prod[0]
    dev = float(np.max(np.abs(prod - ref)) / max(abs(ref), np.finfo(float).tiny))
    return dev <= tol, dev

