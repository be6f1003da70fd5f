import mpmath
import numpy as np
import pytest
from scipy import integrate

from bec_cosmo.closed_form import Window
from bec_cosmo.cubic_analysis import CubicInvariants, RootClass, classify_and_solve


def quad(f, a, b, **kw):
    """scipy QUADPACK oracle; independent of the package's own quadrature."""
    kw.setdefault("epsabs", 1e-14)
    kw.setdefault("epsrel", 1e-13)
    kw.setdefault("limit", 400)
    val, _ = integrate.quad(f, a, b, **kw)
    return val


def central_diff(f, x, h=1e-5):
    return (f(x + h) - f(x - h)) / (2.0 * h)


def rel_err(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def roots_for(p, q):
    return classify_and_solve(CubicInvariants(1.0, 0.0, -4 * p, -4 * q, p, q, -4 * p**3 - 27 * q * q))


def tanh_sinh_oracle(j, lo, hi, p, q):
    f = lambda x: x**j / mpmath.sqrt(x**3 + p * x + q)
    return float(mpmath.quad(f, [lo, hi], method="tanh-sinh"))


def sample_grid(rd, n=40, excl=1e-3):
    """Points in every valid region, away from roots, t1 and the double root."""
    if rd.cls is RootClass.ONE_REAL:
        lo = np.linspace(rd.r1 + excl, rd.t1 - excl, n)
        hi = np.linspace(rd.t1 + excl, rd.t1 + 5.0, n)
        return [(x, Window.LOWER) for x in lo] + [(x, Window.UPPER) for x in hi]
    if rd.cls is RootClass.THREE_REAL:
        return [(x, None) for x in np.linspace(rd.a + excl, rd.a + 6.0, n)]
    a, c = rd.a, rd.c
    if a == c:
        return [(x, None) for x in np.linspace(a + excl, a + 6.0, n)]
    pts = [x for x in np.linspace(c + excl, max(a, c) + 6.0, 2 * n) if abs(x - a) > excl]
    return [(x, None) for x in pts]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def cli_dir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


