import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from memheat.errors import DomainError, UnsupportedOrderError
from memheat.special import (
    MlParams,
    SUPPORTED_BESSEL_ORDERS,
    backend_name,
    bessel_j,
    bessel_j0_zeros,
    gamma_fn,
    mittag_leffler,
)

import oracles


# ---------------------------------------------------------------------------
# Mittag-Leffler

def test_ml_exp_special_case():
    # E_{1,1}(x) is exp(x); this is the sanity anchor for the whole evaluator
    x = np.linspace(-30.0, 0.0, 121)
    got = mittag_leffler(MlParams(1.0, 1.0), x)
    ref = np.exp(x)
    assert np.max(np.abs(got - ref) / np.abs(ref)) < 1e-12


def test_ml_half_order_erfc_identity():
    # E_{1/2,1}(-x) equals exp(x^2) erfc(x); erfc comes from its own series
    xs = np.linspace(0.0, 5.0, 41)
    got = mittag_leffler(MlParams(0.5, 1.0), -xs)
    for x, g in zip(xs, got):
        ref = float(oracles.erfc_scaled_reference(x))
        assert abs(g - ref) / ref < 1e-11


@pytest.mark.parametrize("alpha", [0.25, 0.4, 0.5, 0.7, 0.9, 1.0])
@pytest.mark.parametrize("beta", [0.4, 1.0, 1.5])
def test_ml_reduction_identity(alpha, beta):
    # E_{a,b}(z) = 1/Gamma(b) + z E_{a,b+a}(z)
    z = -np.logspace(-2, 2, 25)
    lhs = mittag_leffler(MlParams(alpha, beta), z)
    rhs = 1.0 / gamma_fn(beta) + z * mittag_leffler(MlParams(alpha, beta + alpha), z)
    scale = np.maximum(np.abs(lhs), np.abs(z) * 1e-3 + 1e-3)
    assert np.max(np.abs(lhs - rhs) / scale) < 1e-9


@pytest.mark.parametrize("alpha", [0.1, 0.3, 0.5, 0.7, 0.8, 0.999])
def test_ml_against_reference(alpha):
    betas = sorted({alpha, 1.0, alpha + 1.0, 0.4})
    xs = np.concatenate([[0.0], np.logspace(-3, 8, 23)])
    for beta in betas:
        got = mittag_leffler(MlParams(alpha, beta), -xs)
        for x, g in zip(xs, got):
            ref = oracles.ml_reference(alpha, beta, -x)
            denom = max(abs(float(ref)), 1e-280)
            assert abs(g - float(ref)) / denom < 1e-10, (alpha, beta, x)


@pytest.mark.parametrize("alpha", [0.3, 0.5, 0.75])
def test_ml_large_argument_law(alpha):
    # x^2 E_{a,a}(-x) -> a / Gamma(1 - a); next term gives an O(1/x)
    # relative correction, ~1e-6 at this x
    x = 1e6
    got = x * x * mittag_leffler(MlParams(alpha, alpha), -x)
    want = alpha / gamma_fn(1.0 - alpha)
    assert abs(got - want) / want < 1e-5


def test_ml_complete_monotonicity_sample():
    # For beta >= alpha the function is completely monotone on the negative
    # axis: positive and decreasing in |x|
    xs = np.logspace(-3, 6, 200)
    for alpha, beta in [(0.3, 0.3), (0.5, 1.0), (0.8, 1.0), (0.6, 0.9)]:
        v = mittag_leffler(MlParams(alpha, beta), -xs)
        assert np.all(v > 0.0)
        assert np.all(np.diff(v) < 0.0)


def test_ml_at_zero():
    assert mittag_leffler(MlParams(0.7, 1.3), 0.0) == pytest.approx(
        1.0 / math.gamma(1.3), rel=1e-14
    )


def test_ml_scalar_array_consistency():
    p = MlParams(0.6, 0.6)
    xs = np.array([-0.5, -3.0, -40.0])
    arr = mittag_leffler(p, xs)
    for x, v in zip(xs, arr):
        assert mittag_leffler(p, float(x)) == v


def test_ml_rejects_bad_domains():
    with pytest.raises(DomainError):
        MlParams(1.2, 1.0)
    with pytest.raises(DomainError):
        MlParams(0.0, 1.0)
    with pytest.raises(DomainError):
        MlParams(0.5, 0.0)
    with pytest.raises(DomainError):
        mittag_leffler(MlParams(0.5, 1.0), 0.5)
    with pytest.raises(DomainError):
        mittag_leffler(MlParams(0.5, 1.0), np.array([-1.0, np.nan]))
    with pytest.raises(TypeError):
        mittag_leffler((0.5, 1.0), -1.0)


@settings(max_examples=60, deadline=None)
@given(
    alpha=st.floats(0.05, 1.0),
    beta=st.floats(0.1, 2.0),
    x=st.floats(0.0, 1e8),
)
def test_ml_reduction_property(alpha, beta, x):
    z = -x
    lhs = mittag_leffler(MlParams(alpha, beta), z)
    rhs = 1.0 / gamma_fn(beta) + z * mittag_leffler(MlParams(alpha, beta + alpha), z)
    scale = max(abs(lhs), abs(z) * 1e-3, 1e-3)
    assert abs(lhs - rhs) / scale < 1e-8


# ---------------------------------------------------------------------------
# Gamma

def test_gamma_matches_reference():
    xs = np.array([0.1, 0.5, 1.0, 1.7, 4.2, 9.5])
    got = gamma_fn(xs)
    for x, g in zip(xs, got):
        assert abs(g - float(oracles.gamma_reference(x))) / g < 1e-14


def test_gamma_rejects_nonpositive():
    with pytest.raises(DomainError):
        gamma_fn(0.0)
    with pytest.raises(DomainError):
        gamma_fn(np.array([1.0, -2.0]))


# ---------------------------------------------------------------------------
# Bessel

@pytest.mark.parametrize("order", SUPPORTED_BESSEL_ORDERS)
def test_bessel_matches_reference(order):
    xs = np.concatenate([np.linspace(0.05, 11.9, 40), np.linspace(12.1, 80.0, 40)])
    got = bessel_j(order, xs)
    for x, g in zip(xs, got):
        ref = float(oracles.bessel_j_reference(order, x))
        assert abs(g - ref) < 1e-11 * max(1.0, abs(ref) * 1e2), (order, x)


def test_bessel_small_argument_forms():
    # series guards near zero must stay smooth and finite
    xs = np.array([0.0, 1e-10, 1e-6, 1e-3])
    assert bessel_j(0.0, 0.0) == 1.0
    assert bessel_j(1.0, 0.0) == 0.0
    assert bessel_j(0.5, 0.0) == 0.0
    assert bessel_j(1.5, 0.0) == 0.0
    v = bessel_j(1.5, xs[1:])
    assert np.all(np.isfinite(v)) and np.all(v >= 0.0)


def test_bessel_rejects_unsupported_order():
    with pytest.raises(UnsupportedOrderError):
        bessel_j(2.0, 1.0)
    with pytest.raises(DomainError):
        bessel_j(0.0, -1.0)
    with pytest.raises(DomainError):
        bessel_j(-0.5, 0.0)


def test_j0_zeros_against_reference():
    zs = bessel_j0_zeros(20)
    for k, z in enumerate(zs, start=1):
        ref = float(oracles.bessel_j0_zero_reference(k))
        assert abs(z - ref) < 1e-10, k
    # frozen first zero, as an independent pin
    assert zs[0] == pytest.approx(2.404825557695773, abs=1e-12)


def test_backend_reports_name():
    assert backend_name() in ("compiled", "python")
