"""Rate fitting, verdict grading, the verification matrix, and the mass limit."""

import math

import numpy as np
import pytest

from memheat.errors import DomainError
from memheat.experiments import (
    FittedRate,
    _dominant,
    _effective_terms,
    _log_verdict,
    default_matrix,
    default_time_grid,
    fit_rate,
    ksz_limit_check,
    matrix_csv,
    matrix_summary,
    verify_rate,
)
from memheat.exponents import (
    CompactBall,
    FractionalParams,
    Intermediate,
    predicted_rate,
)
from memheat.kernel import build_profile
from memheat.solver import Forcing, norm_series

P_B1 = FractionalParams(dim_n=1, alpha=0.5, beta=1.0)
P_B12 = FractionalParams(dim_n=1, alpha=0.5, beta=0.5)


@pytest.fixture(scope="module")
def prof_b1():
    return build_profile(P_B1)


@pytest.fixture(scope="module")
def prof_b12():
    return build_profile(P_B12)


def _series(ts, vals):
    from memheat.solver import NormSeries

    return NormSeries(
        region=CompactBall(radius=1.0),
        p=2.0,
        ts=tuple(float(t) for t in ts),
        values=tuple(float(v) for v in vals),
        est_errors=(0.0,) * len(ts),
    )


# ---------------------------------------------------------------------------
# rate fitting on synthetic laws

def test_default_time_grid():
    ts = default_time_grid()
    assert ts.size == 16
    assert ts[0] == 100.0
    assert ts[-1] == pytest.approx(1e4, rel=1e-12)


def test_pure_power_recovered_exactly():
    ts = default_time_grid()
    fit = fit_rate(_series(ts, ts**-0.7))
    assert abs(fit.t_pow + 0.7) <= 1e-6
    assert not fit.log_detected
    assert fit.log_pow == 0
    assert fit.residual <= 1e-9


def test_exactness_across_powers_and_grids():
    ts = np.geomspace(50.0, 5.0e4, 24)
    for s in (-0.125, -0.5, -4.0 / 3.0, -2.0):
        fit = fit_rate(_series(ts, 4.2 * ts**s), allow_log=False)
        assert abs(fit.t_pow - s) <= 1e-6


def test_log_factor_detected():
    ts = default_time_grid()
    fit = fit_rate(_series(ts, ts**-1.0 * np.log(ts)))
    assert fit.log_detected
    assert fit.log_pow == 1
    assert abs(fit.t_pow + 1.0) <= 1e-6
    assert abs(fit.log_coeff - 1.0) <= 1e-6
    assert fit.drift >= 0.25
    assert fit.drift_monotone


def test_log_square_detected():
    ts = default_time_grid()
    fit = fit_rate(_series(ts, ts**-0.5 * np.log(ts) ** 2))
    assert fit.log_detected
    assert fit.log_pow == 2
    assert abs(fit.t_pow + 0.5) <= 1e-6


def test_fractional_log_power_drifts_but_not_detected():
    # log^0.4 drifts like a log yet rounds to no admissible integer
    ts = default_time_grid()
    fit = fit_rate(_series(ts, ts**-0.5 * np.log(ts) ** 0.4))
    assert not fit.log_detected
    assert abs(fit.log_coeff - 0.4) <= 1e-6
    assert abs(fit.t_pow + 0.5) <= 1e-6
    assert fit.drift >= 0.25
    assert fit.drift_monotone


def test_noisy_power_within_tolerance():
    rng = np.random.default_rng(7)
    ts = default_time_grid()
    vals = 3.0 * ts**-0.5 * (1.0 + 0.01 * rng.uniform(-1.0, 1.0, ts.size))
    fit = fit_rate(_series(ts, vals))
    assert abs(fit.t_pow + 0.5) <= 0.01


def test_decaying_transient_not_mistaken_for_log():
    ts = default_time_grid()
    fit = fit_rate(_series(ts, ts**-1.0 * (1.0 + 5.0 * ts**-0.5)))
    assert not fit.log_detected
    assert fit.log_coeff < 0.0


def test_allow_log_false_skips_augmented_fit():
    ts = default_time_grid()
    fit = fit_rate(_series(ts, ts**-1.0 * np.log(ts)), allow_log=False)
    assert not fit.log_detected
    assert fit.log_coeff == 0.0


def test_fitted_rate_validation():
    with pytest.raises(DomainError):
        FittedRate(t_pow=-1.0, log_detected=False, log_pow=0,
                   residual=-0.1, window=(1e2, 1e4))
    with pytest.raises(DomainError):
        FittedRate(t_pow=-1.0, log_detected=False, log_pow=0,
                   residual=0.0, window=(1e2, 5e3))


# ---------------------------------------------------------------------------
# verdict grading

def _fit(detected=False, n=0, drift=0.0, mono=False, c=0.0, t_pow=-1.0):
    return FittedRate(t_pow=t_pow, log_detected=detected, log_pow=n,
                      residual=0.0, window=(1e2, 1e4), drift=drift,
                      drift_monotone=mono, log_coeff=c)


def test_verdict_ambiguous_wins():
    assert _log_verdict(_fit(), 0, True, False, 1.0, 3.0) == "inconclusive"


def test_verdict_log_predicted():
    ok = _fit(detected=True, n=1)
    assert _log_verdict(ok, 1, False, False, 1.0, 3.0) == "match"
    assert _log_verdict(_fit(), 1, False, True, 1.0, 3.0) == "match"
    drifty = _fit(drift=0.5, mono=True)
    assert _log_verdict(drifty, 1, False, False, 1.2, 3.0) == "inconclusive"
    # decisive rejection needs the compensated envelope itself to fail
    assert _log_verdict(_fit(), 1, False, False, 10.0, 3.0) == "mismatch"
    assert _log_verdict(_fit(), 1, False, False, 1.2, 3.0) == "inconclusive"


def test_verdict_no_log_predicted():
    spurious = _fit(detected=True, n=1)
    assert _log_verdict(spurious, 0, False, False, 1.1, 3.0) == "inconclusive"
    assert _log_verdict(spurious, 0, False, False, 5.0, 3.0) == "mismatch"
    drifty = _fit(drift=0.5, mono=True)
    assert _log_verdict(drifty, 0, False, False, 1.0, 3.0) == "inconclusive"
    assert _log_verdict(_fit(), 0, False, False, 1.0, 3.0) == "match"


# ---------------------------------------------------------------------------
# verification on real measurements (cheap compact and annulus cells)

@pytest.fixture(scope="module")
def compact_log_report(prof_b12):
    return verify_rate(P_B12, 0.5, math.inf, CompactBall(radius=1.0),
                       profile=prof_b12)


def test_compact_log_cell_matches(compact_log_report):
    rep = compact_log_report
    assert rep.status == "ok"
    assert rep.passed
    assert rep.predicted_t_pow == -0.5
    assert rep.predicted_log_pow == 1
    assert rep.fitted.log_detected
    assert rep.fitted.log_pow == 1
    assert rep.log_verdict == "match"
    assert rep.slope_error <= 0.05
    assert rep.spread <= 3.0


def test_compact_plain_cell(prof_b12):
    rep = verify_rate(P_B12, 2.0, math.inf, CompactBall(radius=1.0),
                      profile=prof_b12)
    assert rep.passed
    assert rep.log_verdict == "match"
    assert rep.predicted_t_pow == -1.0
    assert rep.predicted_log_pow == 0
    assert abs(rep.fitted.t_pow + 1.0) <= 0.05


def test_intermediate_prefactor_divided_out(prof_b1):
    region = Intermediate(omega=float(P_B1.theta) / 2.0, nu=1.0, mu=2.0)
    rep = verify_rate(P_B1, 2.0, 2.0, region, profile=prof_b1)
    assert rep.passed
    assert rep.predicted_t_pow == -0.75
    # the raw annulus norm carries the exact g^{N/p} = t^{omega/2} factor
    raw = fit_rate(norm_series(default_time_grid(), 2.0, region,
                               Forcing(gamma=2.0), prof_b1))
    assert abs(raw.t_pow - (rep.fitted.t_pow + float(P_B1.theta) / 4.0)) <= 1e-9


def test_infeasible_cell_reported_not_raised(prof_b1):
    # nu t^omega < 1 at the window start, so the region is undefined there
    region = Intermediate(omega=float(P_B1.theta) / 2.0, nu=0.5, mu=2.0)
    rep = verify_rate(P_B1, 1.5, math.inf, region, profile=prof_b1)
    assert rep.status == "infeasible"
    assert not rep.passed
    assert rep.fitted is None
    assert rep.log_verdict == "inconclusive"
    assert math.isinf(rep.slope_error)
    assert "DomainError" in rep.detail


def test_reduction_coherence_all_cells():
    # local re-derivation of each cell's dominant effective power
    for cell in default_matrix():
        expr = predicted_rate(cell.params, cell.gamma, cell.p, cell.region)
        omega = cell.region.omega if isinstance(cell.region, Intermediate) else 0.0
        pairs = [(t.t_pow + omega * t.g_pow, t.logt_pow + t.loggap_pow)
                 for t in expr.terms]
        slope_loc, n_loc = max(pairs)
        (slope, n_pow), _, _ = _dominant(_effective_terms(expr, cell.region))
        assert abs(slope - slope_loc) <= 1e-12
        assert n_pow == n_loc


def test_default_matrix_layout():
    cells = default_matrix()
    labels = [c.label for c in cells]
    assert labels == [
        "exterior-beta1-p1-g0.5",
        "exterior-beta1-p1-g1.5",
        "exterior-beta1-p2-g0.5",
        "exterior-beta1-p2-g1.5",
        "compact-beta0.5-g0.5",
        "compact-beta0.5-g2",
        "compact-beta0.3-g0.5",
        "compact-beta0.3-g2",
        "compact-beta0.25-g2",
        "intermediate-beta1-g0.5",
        "intermediate-beta1-g1.5",
        "global-beta0.3-pcrit-g0.5",
        "global-beta0.3-p4-g0.5",
        "global-beta0.3-p4-g2",
    ]


# ---------------------------------------------------------------------------
# report serialization

def test_matrix_csv_layout_and_determinism(compact_log_report, prof_b12):
    rep2 = verify_rate(P_B12, 2.0, math.inf, CompactBall(radius=1.0),
                       profile=prof_b12)
    text = matrix_csv([compact_log_report, rep2])
    lines = text.strip().split("\n")
    assert lines[0] == (
        "N,alpha,beta,region,p,gamma,predicted,slope_pred,log_pred,"
        "slope_fit,log_detected,log_pow,slope_error,drift,spread,"
        "verdict,status,pass"
    )
    assert len(lines) == 3
    for row in lines[1:]:
        assert row.count(",") == 17
    rep2b = verify_rate(P_B12, 2.0, math.inf, CompactBall(radius=1.0),
                        profile=prof_b12)
    assert matrix_csv([compact_log_report, rep2b]) == text


def test_matrix_summary_lines(compact_log_report):
    text = matrix_summary([compact_log_report])
    assert text.startswith("PASS")
    assert "beta=0.5" in text
    assert "verdict match" in text


def test_report_helpers_reject_empty():
    with pytest.raises(DomainError):
        matrix_csv([])
    with pytest.raises(DomainError):
        matrix_summary([])


# ---------------------------------------------------------------------------
# long-time mass limit

def test_ksz_preconditions():
    with pytest.raises(DomainError):
        ksz_limit_check(P_B1, gamma=1.0, p=2.0)
    p03 = FractionalParams(dim_n=1, alpha=0.5, beta=0.3)
    with pytest.raises(DomainError):
        ksz_limit_check(p03, gamma=2.0, p=4.0)
    with pytest.raises(DomainError):
        ksz_limit_check(P_B1, gamma=2.0, p=2.0, forcing=Forcing(gamma=1.5))


def test_ksz_limit_reached(prof_b1):
    chk = ksz_limit_check(P_B1, gamma=2.0, p=2.0, profile=prof_b1)
    assert chk.m_infinity == 2.0
    assert all(d > 0.0 for d in chk.deviations)
    d = chk.deviations
    assert d[-3] > d[-2] > d[-1]
    assert chk.final_ratio <= 0.25
    assert chk.passed
