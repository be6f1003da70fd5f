import math

import mpmath
import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from bec_cosmo.closed_form import RegionError, Window, appendix_integral, one_real_amplitude
from bec_cosmo.cubic_analysis import RootClass

from conftest import rel_err, roots_for, sample_grid, tanh_sinh_oracle

mpmath.mp.dps = 30

CASES = {
    "one_real": (0.0, 1.0),
    "one_real_b": (2.0, -3.0),
    "three_real": (-1.0, 0.0),
    "three_real_b": (-7.0, 6.0),  # (x-1)(x-2)(x+3)
    "double_above": (-3.0, 2.0),  # (x-1)^2 (x+2)
    "double_below": (-3.0, -2.0),  # (x+1)^2 (x-2)
    "triple": (0.0, 0.0),
}


class TestDerivatives:
    @pytest.mark.parametrize("case", sorted(CASES))
    def test_central_differences(self, case):
        p, q = CASES[case]
        rd = roots_for(p, q)
        worst = 0.0
        for x, win in sample_grid(rd):
            h = 1e-6 * max(1.0, abs(x))
            h = min(h, 0.25e-3)
            sqrt_x = math.sqrt(rd.X(x))
            for j in (0, 1):
                fd = (appendix_integral(j, x + h, rd, win) - appendix_integral(j, x - h, rd, win)) / (2 * h)
                exact = x**j / sqrt_x
                if j == 1 and abs(x) < 1e-3:
                    continue
                worst = max(worst, rel_err(fd, exact))
        assert worst <= 1e-6

    @settings(max_examples=60, deadline=None)
    @given(p=st.floats(-10, 10), q=st.floats(-10, 10), s=st.floats(0.05, 0.95), j=st.sampled_from([0, 1]))
    def test_one_real_property(self, p, q, s, j):
        assume(-4 * p**3 - 27 * q * q < -1e-3)
        rd = roots_for(p, q)
        x = rd.r1 + s * (rd.t1 - rd.r1)
        assume(abs(x) > 1e-2 or j == 0)
        h = 1e-6 * (rd.t1 - rd.r1)
        fd = (appendix_integral(j, x + h, rd) - appendix_integral(j, x - h, rd)) / (2 * h)
        assert rel_err(fd, x**j / math.sqrt(rd.X(x))) <= 1e-5


class TestDefiniteValues:
    def test_triple_root_elementary(self):
        rd = roots_for(0.0, 0.0)
        assert appendix_integral(0, 4.0, rd) - appendix_integral(0, 1.0, rd) == pytest.approx(1.0, abs=1e-15)

    @pytest.mark.parametrize("case", sorted(CASES))
    def test_against_tanh_sinh(self, case):
        p, q = CASES[case]
        rd = roots_for(p, q)
        if rd.cls is RootClass.ONE_REAL:
            intervals = [(rd.r1 + 0.01, rd.t1 - 0.01, Window.LOWER), (rd.t1 + 0.01, rd.t1 + 3.0, Window.UPPER),
                         (rd.r1, rd.t1, Window.LOWER)]
        elif rd.cls is RootClass.THREE_REAL:
            intervals = [(rd.a + 0.2, rd.a + 3.0, None), (rd.a, rd.a + 1.0, None)]
        elif rd.a == rd.c:
            intervals = [(rd.a + 0.5, rd.a + 4.0, None)]
        elif rd.a > rd.c:
            intervals = [(rd.c + 0.1, rd.a - 0.1, None), (rd.a + 0.1, rd.a + 3.0, None)]
        else:
            intervals = [(rd.c, rd.c + 3.0, None)]
        for lo, hi, win in intervals:
            for j in (0, 1):
                diff = appendix_integral(j, hi, rd, win) - appendix_integral(j, lo, rd, win)
                assert abs(diff - tanh_sinh_oracle(j, lo, hi, p, q)) <= 1e-8

    def test_three_real_known_value(self):
        # x^3 - x: integral from 1 to 2 of dx / sqrt(x^3 - x) by an independent route
        rd = roots_for(-1.0, 0.0)
        ref = float(mpmath.quad(lambda x: 1 / mpmath.sqrt(x**3 - x), [1, 2]))
        assert appendix_integral(0, 2.0, rd) - appendix_integral(0, 1.0, rd) == pytest.approx(ref, rel=1e-12)


class TestRegions:
    def test_one_real_t1_needs_window(self):
        rd = roots_for(0.0, 1.0)
        with pytest.raises(RegionError):
            appendix_integral(0, rd.t1, rd)
        assert math.isfinite(appendix_integral(1, rd.t1, rd, Window.LOWER))

    def test_one_real_window_mismatch(self):
        rd = roots_for(0.0, 1.0)
        with pytest.raises(RegionError):
            appendix_integral(0, rd.t1 + 1.0, rd, Window.LOWER)

    def test_below_root(self):
        with pytest.raises(RegionError):
            appendix_integral(0, -2.0, roots_for(0.0, 1.0))
        with pytest.raises(RegionError):
            appendix_integral(0, 0.5, roots_for(-1.0, 0.0))
        with pytest.raises(RegionError):
            appendix_integral(0, 1.0, roots_for(-3.0, 2.0))
        with pytest.raises(RegionError):
            appendix_integral(0, 0.0, roots_for(0.0, 0.0))

    def test_bad_index(self):
        with pytest.raises(ValueError):
            appendix_integral(2, 1.0, roots_for(0.0, 1.0))

    def test_amplitude_range(self):
        rd = roots_for(0.0, 1.0)
        assert one_real_amplitude(rd.t1, rd) == pytest.approx(math.pi / 2, abs=1e-15)
        assert one_real_amplitude(rd.r1, rd) == 0.0
        assert one_real_amplitude(1e8, rd) < 1e-3
