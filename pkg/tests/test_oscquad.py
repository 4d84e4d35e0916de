import math

import mpmath as mp
import numpy as np
import pytest

from memheat.errors import DomainError
from memheat.oscquad import gl_panel_rule, osc_power_tail, upper_gamma


def ref_upper_gamma(a, z):
    with mp.workdps(40):
        return mp.gammainc(mp.mpf(a), mp.mpc(z), mp.inf)


def test_gl_rule_integrates_polynomials():
    x, w = gl_panel_rule(8)
    # exact for degree <= 15 on [0, 1]
    for k in range(15):
        got = np.sum(w * x ** k)
        assert got == pytest.approx(1.0 / (k + 1), rel=1e-13)


@pytest.mark.parametrize("a", [1.0, 0.9, 0.5, 0.3, 0.0, -0.5, -1.0, -1.7, -3.0, -7.5, -12.0, -24.0])
def test_upper_gamma_on_imaginary_axis(a):
    ys = np.logspace(-3, 3, 25)
    z = -1j * ys
    got = upper_gamma(a, z)
    for y, g in zip(ys, got):
        ref = complex(ref_upper_gamma(a, -1j * y))
        scale = max(abs(ref), 1e-290)
        assert abs(g - ref) / scale < 5e-11, (a, y)


def test_upper_gamma_branch_overlap():
    # continued fraction and series must agree where both are healthy,
    # i.e. just above the switch radius
    for a in (0.4, -2.3, -9.0):
        for y in (1.0, 1.5, 2.0):
            z = np.array([-1j * y])
            from memheat.oscquad import _upper_gamma_cf, _upper_gamma_series

            cf = _upper_gamma_cf(a, z)[0]
            se = _upper_gamma_series(a, z)[0]
            assert abs(cf - se) / max(abs(cf), 1e-290) < 1e-12


def test_upper_gamma_scalar_and_domain():
    v = upper_gamma(0.5, -2j)
    assert isinstance(v, complex)
    with pytest.raises(DomainError):
        upper_gamma(1.5, -2j)
    with pytest.raises(DomainError):
        upper_gamma(0.5, 0.0)


@pytest.mark.parametrize(
    "s,r,A",
    [
        (1.6, 0.7, 15.0),
        (1.6, 3.0, 15.0),
        (2.6, 0.2, 25.0),
        (4.0, 1.0, 20.0),
        (7.4, 5.0, 30.0),
        (2.0, 0.05, 40.0),
    ],
)
def test_osc_power_tail_against_oscillatory_quadrature(s, r, A):
    got = osc_power_tail(s, r, A)
    with mp.workdps(30):
        period = 2 * mp.pi / r
        ref_c = mp.quadosc(
            lambda t: t ** (-mp.mpf(s)) * mp.cos(r * t), [A, mp.inf], period=period
        )
        ref_s = mp.quadosc(
            lambda t: t ** (-mp.mpf(s)) * mp.sin(r * t), [A, mp.inf], period=period
        )
    scale = max(abs(complex(ref_c, ref_s)), 1e-200)
    assert abs(got.real - float(ref_c)) / scale < 1e-9
    assert abs(got.imag - float(ref_s)) / scale < 1e-9


def test_osc_power_tail_vectorized():
    rs = np.array([0.3, 1.0, 4.0])
    vals = osc_power_tail(2.6, rs, 20.0)
    assert vals.shape == rs.shape
    single = osc_power_tail(2.6, 1.0, 20.0)
    assert vals[1] == single
    with pytest.raises(DomainError):
        osc_power_tail(2.6, 0.0, 20.0)
    with pytest.raises(DomainError):
        osc_power_tail(2.6, 1.0, 0.0)
