"""Rate-law measurement: fit decay slopes, compare with predictions.

The measurement problem is separating a log factor from a power over a
two-decade window where log t only grows by a factor 1.7.  fit_rate
therefore runs a dual detector: an augmented regression in log log t
plus a drift test on the compensated series, with "inconclusive" as an
honest third outcome when the two disagree.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, MemheatError, QuadratureError, TruncationError
from .exponents import (
    CompactBall,
    Criticality,
    Exterior,
    FractionalParams,
    Global,
    Intermediate,
    classify_p,
    predicted_rate,
)
from .kernel import _SURFACE, _panel_nodes, build_profile, check_kernel_bounds, eval_Y
from .solver import (
    Forcing,
    NormSeries,
    _ball_volume,
    _tail_budget,
    mild_solution,
    norm_series,
    region_label,
)

__all__ = [
    "FittedRate",
    "VerificationReport",
    "KszCheck",
    "MatrixCell",
    "fit_rate",
    "verify_rate",
    "ksz_limit_check",
    "default_matrix",
    "default_time_grid",
    "matrix_csv",
    "matrix_summary",
]


def default_time_grid():
    """Sixteen log-spaced times on [1e2, 1e4]."""
    return np.geomspace(1e2, 1e4, 16)


# ---------------------------------------------------------------------------
# slope fitting

@dataclass(frozen=True)
class FittedRate:
    """Measured rate law over a time window of at least two decades.

    t_pow is the slope the pipeline stands behind: the augmented fit's
    power when the data carry a log-like drift, the plain fit otherwise.
    drift is the monotone fractional change of the power-compensated
    series; log_coeff the raw log log t regression coefficient.
    """

    t_pow: float
    log_detected: bool
    log_pow: int
    residual: float
    window: tuple
    drift: float = 0.0
    drift_monotone: bool = False
    log_coeff: float = 0.0

    def __post_init__(self):
        if not self.residual >= 0.0:
            raise DomainError("residual must be nonnegative")
        lo, hi = self.window
        if not hi / lo >= 99.0:
            raise DomainError("fit window must span at least two decades")


def _lstsq_fit(columns, ly):
    a_mat = np.column_stack(columns)
    coef, _, _, _ = np.linalg.lstsq(a_mat, ly, rcond=None)
    resid = ly - a_mat @ coef
    return coef, float(np.sqrt(np.mean(resid**2)))


def fit_rate(series, allow_log=True):
    """Least-squares rate fit of a measured NormSeries.

    The plain model is log y = c0 + a log t.  With allow_log a second
    model adds b log log t; the log factor counts as detected only when
    b sits within 0.5 of an integer n >= 1 AND the plain-compensated
    series drifts monotonically by at least 25% across the window while
    the augmented-compensated one stays within a +-10% band.
    """
    ts = np.asarray(series.ts, dtype=np.float64)
    ys = np.asarray(series.values, dtype=np.float64)
    lt = np.log(ts)
    ly = np.log(ys)
    ones = np.ones_like(lt)
    window = (float(ts[0]), float(ts[-1]))

    (c0, slope_pure), rms_pure = _lstsq_fit((ones, lt), ly)
    if not allow_log:
        return FittedRate(
            t_pow=float(slope_pure),
            log_detected=False,
            log_pow=0,
            residual=rms_pure,
            window=window,
        )

    (a0, slope_aug, log_coeff), rms_aug = _lstsq_fit((ones, lt, np.log(lt)), ly)

    # strip only the power: a genuine log factor is left behind as a
    # slow monotone drift, which the plain fit's slope would hide by
    # averaging it into the power
    comp_power = ys * ts**-slope_aug
    diffs = np.diff(comp_power)
    monotone = bool(np.all(diffs > 0.0) or np.all(diffs < 0.0))
    drift = float(abs(comp_power[-1] / comp_power[0] - 1.0))

    comp_aug = comp_power * lt**-log_coeff
    mid = float(np.mean(comp_aug))
    flat = bool(np.max(np.abs(comp_aug - mid)) <= 0.10 * mid)

    nearest = max(1, int(math.floor(log_coeff + 0.5)))
    integer_like = abs(log_coeff - nearest) <= 0.5 and log_coeff >= 0.5
    # a negative coefficient is a decaying transient, never a rate log
    log_like = monotone and drift >= 0.25 and flat and log_coeff > 0.0
    detected = integer_like and log_like

    return FittedRate(
        t_pow=float(slope_aug if log_like else slope_pure),
        log_detected=detected,
        log_pow=nearest if detected else 0,
        residual=rms_aug if log_like else rms_pure,
        window=window,
        drift=drift,
        drift_monotone=monotone,
        log_coeff=float(log_coeff),
    )


# ---------------------------------------------------------------------------
# prediction reduction and verification

def _effective_terms(expr, region):
    """Collapse g(t) = t^omega factors so each term is t^a (log t)^n."""
    omega = region.omega if isinstance(region, Intermediate) else 0.0
    out = []
    for term in expr.terms:
        slope = term.t_pow + omega * term.g_pow
        out.append((slope, term.logt_pow + term.loggap_pow))
    return out


def _dominant(eff_terms, gap=0.05):
    """Leading term at t -> infinity, plus ambiguity within the gap."""
    top = max(s for s, _ in eff_terms)
    cands = [(s, n) for s, n in eff_terms if s >= top - gap]
    distinct = {round(s, 12) for s, _ in cands}
    lead = max(cands, key=lambda sn: (sn[0], sn[1]))
    return lead, cands, len(distinct) > 1


@dataclass(frozen=True)
class VerificationReport:
    """Outcome of one matrix cell: prediction vs measurement."""

    params: FractionalParams
    gamma: float
    p: float
    region: object
    predicted: object
    predicted_t_pow: float
    predicted_log_pow: int
    fitted: object
    slope_error: float
    log_verdict: str
    spread: float
    passed: bool
    status: str = "ok"
    detail: str = ""
    series: object = None


def _log_form_fit(ts, vals, n_log):
    """Slope estimate under the predicted shape t^s (A log^n t + B).

    The theorems assert two-sided bounds, so a lower-order additive
    constant B is admissible; at desk-scale windows it can dominate the
    log and hide it from the agnostic regressions.  Fitting the raw
    series is ill-posed there (the intercept opens a flat valley in s),
    but the log-slope curve d ln y / d ln t = s + n L^(n-1) / (L^n + q)
    with L = log t and q = B/A carries no intercept: q alone sets how
    fast the 1/L correction dies, and s follows in closed form.  Returns
    (s, rms, share) with rms in slope units and share the log term's
    weight at the window end, or None when the correction does not beat
    the constant-slope model by a clear margin.
    """
    lt = np.log(ts)
    ly = np.log(vals)
    d = np.diff(ly) / np.diff(lt)
    lm = 0.5 * (lt[:-1] + lt[1:])
    rms_flat = float(np.std(d))
    lo = lm[0] ** n_log
    hi = lm[-1] ** n_log
    best = None
    for share_end in np.linspace(0.05, 1.8, 800):
        q = hi * (1.0 - share_end) / share_end
        if q <= -0.99 * lo:
            # A log^n t + B would lose positivity inside the window
            continue
        corr = n_log * lm ** (n_log - 1) / (lm**n_log + q)
        s = float(np.mean(d - corr))
        rms = float(np.sqrt(np.mean((d - s - corr) ** 2)))
        if best is None or rms < best[1]:
            best = (s, rms, float(share_end))
    if best is None or best[1] > 0.6 * rms_flat:
        return None
    return best


def _log_verdict(fitted, n_pred, ambiguous, form_ok, env_spread, spread_tol):
    if ambiguous:
        return "inconclusive"
    if n_pred >= 1:
        if fitted.log_detected and fitted.log_pow == n_pred:
            return "match"
        if form_ok:
            return "match"
        if fitted.log_detected or (fitted.drift_monotone and fitted.drift >= 0.25):
            return "inconclusive"
    elif not fitted.log_detected:
        if fitted.drift_monotone and fitted.drift >= 0.25:
            return "inconclusive"
        return "match"
    # the envelope holds from both sides with unspecified constants, so
    # a mismatch is decisive only when the fully compensated series is
    # itself rejected at measurement scale
    return "mismatch" if env_spread > spread_tol else "inconclusive"


def verify_rate(
    params,
    gamma,
    p,
    region,
    t_grid=None,
    slope_tol=0.05,
    spread_tol=3.0,
    norm_tol=1e-3,
    profile=None,
):
    """Measure a region norm series and test it against the sharp rate.

    Intermediate regions have their exact g(t)^{N/p} prefactor divided
    out before fitting, and the prediction's g powers are collapsed to
    effective t powers.  Solver failures surface as status="infeasible"
    rather than exceptions so matrix runs always produce a full report.
    """
    expr = predicted_rate(params, gamma, p, region)
    eff = _effective_terms(expr, region)
    (pred_slope, pred_log), cands, ambiguous = _dominant(eff, gap=slope_tol)

    if t_grid is None:
        t_grid = default_time_grid()
    ts = np.asarray(t_grid, dtype=np.float64)
    if profile is None:
        profile = build_profile(params)
    forcing = Forcing(gamma=gamma)

    try:
        series = norm_series(ts, p, region, forcing, profile, tol=norm_tol)
    except (MemheatError, RuntimeError) as exc:
        return VerificationReport(
            params=params, gamma=gamma, p=p, region=region,
            predicted=expr, predicted_t_pow=pred_slope,
            predicted_log_pow=pred_log, fitted=None,
            slope_error=math.inf, log_verdict="inconclusive",
            spread=math.inf, passed=False,
            status="infeasible", detail=f"{type(exc).__name__}: {exc}",
        )

    vals = np.asarray(series.values)
    pref = region.omega * expr.prefactor_g_pow if isinstance(
        region, Intermediate) else 0.0
    if pref != 0.0:
        vals = vals * ts**-pref
    flat_series = NormSeries(
        region=region, p=float(p) if p != math.inf else math.inf,
        ts=tuple(float(t) for t in ts),
        values=tuple(float(v) for v in vals),
        est_errors=series.est_errors,
    )
    fitted = fit_rate(flat_series, allow_log=True)

    # window-rendered log correction: the plain least-squares slope of
    # t^s log^n t over this very grid exceeds s by n*r_log, shrinking
    # toward s as an admissible additive constant grows.  When the fit
    # did not resolve the log itself, a plain slope anywhere inside
    # that rendered interval is consistent with the candidate.
    lt = np.log(ts)
    (_, r_log), _ = _lstsq_fit((np.ones_like(lt), lt), np.log(lt))
    errs = []
    for s_c, n_c in cands:
        if n_c >= 1 and not (fitted.log_detected and fitted.log_pow == n_c):
            hi_s = s_c + n_c * r_log
            errs.append(max(0.0, s_c - fitted.t_pow, fitted.t_pow - hi_s))
        else:
            # a near-dominant competitor may legitimately carry the data
            errs.append(abs(fitted.t_pow - s_c))
    slope_error = min(errs)

    form_ok = False
    if pred_log >= 1:
        form = _log_form_fit(ts, vals, pred_log)
        if form is not None:
            form_s, form_rms, form_share = form
            # accept the predicted shape only when the log term carries
            # real weight and the slope curve is fit to within noise
            form_ok = form_share >= 0.25 and form_rms <= 0.02
            if form_ok:
                slope_error = min(slope_error, abs(form_s - pred_slope))

    comp_full = vals * ts**-pred_slope / np.log(ts)**pred_log
    env_spread = float(comp_full.max() / comp_full.min())
    verdict = _log_verdict(
        fitted, pred_log, ambiguous, form_ok, env_spread, spread_tol
    )

    # two-sidedness over the final decade: the theorem's envelope holds
    # from both sides, so the fully compensated series must stay bounded
    tail = ts >= ts[-1] / 10.0
    comp = comp_full[tail]
    spread = float(comp.max() / comp.min())

    passed = (
        slope_error <= slope_tol
        and verdict != "mismatch"
        and spread <= spread_tol
    )
    return VerificationReport(
        params=params, gamma=gamma, p=p, region=region,
        predicted=expr, predicted_t_pow=pred_slope, predicted_log_pow=pred_log,
        fitted=fitted, slope_error=float(slope_error), log_verdict=verdict,
        spread=spread, passed=passed, series=series,
    )


# ---------------------------------------------------------------------------
# default verification matrix

@dataclass(frozen=True)
class MatrixCell:
    label: str
    params: FractionalParams
    gamma: float
    p: float
    region: object


def default_matrix():
    """The fourteen-cell sharpness matrix covering all four rate tables."""
    from fractions import Fraction

    b1 = FractionalParams(1, 0.5, Fraction(1, 1))
    b12 = FractionalParams(1, 0.5, Fraction(1, 2))
    b03 = FractionalParams(1, 0.5, Fraction(3, 10))
    b14 = FractionalParams(1, 0.5, Fraction(1, 4))
    inf = math.inf
    cells = []
    for p in (1.0, 2.0):
        for gamma in (0.5, 1.5):
            cells.append(MatrixCell(
                f"exterior-beta1-p{p:g}-g{gamma:g}", b1, gamma, p, Exterior()))
    for gamma in (0.5, 2.0):
        cells.append(MatrixCell(
            f"compact-beta0.5-g{gamma:g}", b12, gamma, inf, CompactBall()))
    for gamma in (0.5, 2.0):
        cells.append(MatrixCell(
            f"compact-beta0.3-g{gamma:g}", b03, gamma, inf, CompactBall()))
    cells.append(MatrixCell("compact-beta0.25-g2", b14, 2.0, inf, CompactBall()))
    # nu = 1 keeps nu t^omega >= 1 over the whole default grid
    for gamma in (0.5, 1.5):
        cells.append(MatrixCell(
            f"intermediate-beta1-g{gamma:g}", b1, gamma, inf,
            Intermediate(omega=float(b1.theta) / 2.0, nu=1.0, mu=2.0)))
    cells.append(MatrixCell("global-beta0.3-pcrit-g0.5", b03, 0.5, 2.5, Global()))
    cells.append(MatrixCell("global-beta0.3-p4-g0.5", b03, 0.5, 4.0, Global()))
    cells.append(MatrixCell("global-beta0.3-p4-g2", b03, 2.0, 4.0, Global()))
    return tuple(cells)


def _fraction_str(beta):
    return f"{beta.numerator}/{beta.denominator}"


def _p_str(p):
    return "inf" if p == math.inf else repr(float(p))


_CSV_HEADER = (
    "N,alpha,beta,region,p,gamma,predicted,slope_pred,log_pred,"
    "slope_fit,log_detected,log_pow,slope_error,drift,spread,"
    "verdict,status,pass"
)


def matrix_csv(reports):
    """One deterministic CSV row per report, in the given order."""
    if not reports:
        raise DomainError("no reports to serialize")
    lines = [_CSV_HEADER]
    for rep in reports:
        pars = rep.params
        fit = rep.fitted
        lines.append(",".join([
            str(pars.dim_n),
            repr(float(pars.alpha)),
            _fraction_str(pars.beta),
            region_label(rep.region),
            _p_str(rep.p),
            repr(float(rep.gamma)),
            rep.predicted.render().replace(",", ";"),
            repr(float(rep.predicted_t_pow)),
            str(rep.predicted_log_pow),
            repr(float(fit.t_pow)) if fit else "",
            str(fit.log_detected).lower() if fit else "",
            str(fit.log_pow) if fit else "",
            repr(float(rep.slope_error)) if math.isfinite(rep.slope_error) else "inf",
            repr(float(fit.drift)) if fit else "",
            repr(float(rep.spread)) if math.isfinite(rep.spread) else "inf",
            rep.log_verdict,
            rep.status,
            str(rep.passed).lower(),
        ]))
    return "\n".join(lines) + "\n"


def matrix_summary(reports):
    """Human-readable pass/fail table, one line per cell."""
    if not reports:
        raise DomainError("no reports to summarize")
    lines = []
    for rep in reports:
        tag = "PASS" if rep.passed else (
            "SKIP" if rep.status == "infeasible" else "FAIL")
        fit_txt = (
            f"fitted {rep.fitted.t_pow:+.4f}" if rep.fitted else "no fit"
        )
        pars = rep.params
        lines.append(
            f"{tag}  N={pars.dim_n} alpha={float(pars.alpha):g} "
            f"beta={float(pars.beta):g} {region_label(rep.region)} "
            f"p={_p_str(rep.p)} gamma={rep.gamma:g}: "
            f"predicted {rep.predicted_t_pow:+.4f} "
            f"(log^{rep.predicted_log_pow}), {fit_txt}, "
            f"verdict {rep.log_verdict}"
        )
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# subcritical long-time limit

@dataclass(frozen=True)
class KszCheck:
    """Deviation of u from its mass-scaled kernel at large time.

    deviations holds t^{sigma(p)} ||u - M Y||_p; ratios divides that by
    the same compensation of ||u||_p, so the limit statement reads
    "ratios -> 0".
    """

    m_infinity: float
    p: float
    ts: tuple
    deviations: tuple
    ratios: tuple
    passed: bool

    @property
    def final_ratio(self):
        return self.ratios[-1]


def _y_tail_budget(profile, t, cut, p, c_nu):
    # int_cut^inf (t^-sigma* G(r t^-theta))^p r^(N-1) dr via the envelope
    pars = profile.params
    n_dim = pars.dim_n
    e = n_dim + 2.0 * float(pars.beta)
    if cut < t**pars.theta:
        return math.inf
    amp = t ** (-pars.sigma_star) * c_nu * t ** (pars.theta * e)
    q = p * e
    return amp**p * cut ** (n_dim - q) / (q - n_dim)


def _deviation_pair(profile, forcing, m_inf, t, p, tol):
    """(||u - m Y||_p, ||u||_p) over all of space at one time."""
    pars = profile.params
    n_dim = pars.dim_n
    inner_tol = min(max(tol * 0.2, 1e-7), 1e-3)
    cut = forcing.radius + 1.5 * t**pars.theta
    c_nu = check_kernel_bounds(profile, nu=1.0).c_nu

    prev = None
    worst = math.inf
    for level in range(3):
        per_dec = 6 * 2**level
        n_edge = max(2, int(math.ceil(3.0 * per_dec)) + 1)
        edges = np.concatenate(([0.0], np.geomspace(cut * 1e-3, cut, n_edge)))
        nodes, wts = _panel_nodes(edges, 8)
        u = mild_solution(nodes, t, forcing, profile, tol=inner_tol)
        y = eval_Y(nodes, t, profile)
        geom = nodes ** (n_dim - 1)
        acc_dev = float((np.abs(u - m_inf * y) ** p * geom) @ wts)
        acc_u = float((u**p * geom) @ wts)

        x_lo = cut
        for _ in range(60):
            x_hi = 2.0 * x_lo
            nodes, wts = _panel_nodes(np.geomspace(x_lo, x_hi, 7), 8)
            u = mild_solution(nodes, t, forcing, profile, tol=inner_tol)
            y = eval_Y(nodes, t, profile)
            geom = nodes ** (n_dim - 1)
            acc_dev += float((np.abs(u - m_inf * y) ** p * geom) @ wts)
            acc_u += float((u**p * geom) @ wts)
            tail = (
                _tail_budget(profile, forcing, t, x_hi, p) ** (1.0 / p)
                + m_inf * _y_tail_budget(profile, t, x_hi, p, c_nu) ** (1.0 / p)
            )
            scale = max(acc_dev, 1e-4 * acc_u) ** (1.0 / p)
            if tail <= 0.3 * tol * scale:
                break
            x_lo = x_hi
        else:
            raise TruncationError(
                "envelope cannot certify the deviation-norm tail"
            )
        dev = (_SURFACE[n_dim] * acc_dev) ** (1.0 / p)
        u_norm = (_SURFACE[n_dim] * acc_u) ** (1.0 / p)
        if prev is not None:
            worst = abs(dev - prev)
            if worst <= tol * dev + 1e-3 * tol * u_norm:
                return dev, u_norm
        prev = dev
    raise QuadratureError(
        f"deviation norm stalled at estimate {worst:.2e}", residual=worst
    )


def ksz_limit_check(params, gamma, p, t_grid=None, forcing=None, norm_tol=1e-3,
                    profile=None):
    """Check the compensated deviation t^sigma(p) ||u - M Y||_p shrinks.

    Requires gamma > 1 (finite forcing mass) and subcritical p.  Passes
    when the deviation series strictly decreases over its last three
    samples and its final value is at most a quarter of the compensated
    solution norm.
    """
    if not gamma > 1.0:
        raise DomainError("the limit needs gamma > 1 for finite total mass")
    kind, _ = classify_p(params, p)
    if kind is not Criticality.SUBCRITICAL:
        raise DomainError("the limit statement covers subcritical p only")
    if forcing is None:
        forcing = Forcing(gamma=gamma)
    if forcing.gamma != gamma:
        raise DomainError("forcing decay must match gamma")
    if t_grid is None:
        t_grid = np.geomspace(1e2, 1e4, 8)
    ts = np.asarray(t_grid, dtype=np.float64)

    m_inf = (
        forcing.amplitude
        * _ball_volume(params.dim_n, forcing.radius)
        / (gamma - 1.0)
    )
    if profile is None:
        profile = build_profile(params)
    sp = params.sigma_p(p)

    deviations = []
    ratios = []
    for t in ts:
        dev, u_norm = _deviation_pair(profile, forcing, m_inf, float(t), p,
                                      norm_tol)
        deviations.append(float(t) ** sp * dev)
        ratios.append(dev / u_norm)

    tail = deviations[-3:]
    passed = (
        len(deviations) >= 3
        and tail[0] > tail[1] > tail[2]
        and ratios[-1] <= 0.25
    )
    return KszCheck(
        m_infinity=m_inf,
        p=float(p),
        ts=tuple(float(t) for t in ts),
        deviations=tuple(deviations),
        ratios=tuple(ratios),
        passed=passed,
    )
