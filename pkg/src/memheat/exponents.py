"""Scaling exponents and the sharp-rate oracle.

Everything here is exact bookkeeping: the scaling exponents theta, sigma_*,
sigma(p), the critical integrabilities p_c and q_c, and the predicted
region-wise decay/growth rate of the mild solution under a forcing whose
L^1 norm decays like (1+t)^{-gamma}.  The dimension-vs-order regime is
decided on rationals, never by floating-point equality: the rows on the
boundaries N = 2*beta and N = 4*beta differ from their neighbours by
logarithmic factors, so a misclassification is not a small error.
"""
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

from .errors import DomainError, OutOfScopeError

__all__ = [
    "FractionalParams",
    "ExponentSet",
    "Exterior",
    "CompactBall",
    "Intermediate",
    "Global",
    "RateTerm",
    "RateExpr",
    "Criticality",
    "derive_exponents",
    "classify_p",
    "predicted_rate",
    "power_log_integral",
]

# Forcing hypotheses the rate statements lean on; attached to RateExpr as
# metadata, never validated symbolically.
HYP_L1_DECAY = "l1_decay"  # ||f(.,t)||_1 <= C (1+t)^-gamma
HYP_TAIL_DECAY = "pointwise_tail_decay"  # |f| <= C |x|^-N (1+t)^-gamma, |x| large
HYP_LQ_DECAY = "lq_decay_above_qc"  # ||f(.,t)||_q <= C (1+t)^-gamma, q > q_c(p)


def _as_fraction(beta):
    if isinstance(beta, Fraction):
        return beta
    if isinstance(beta, int):
        return Fraction(beta)
    if isinstance(beta, str):
        return Fraction(beta)
    if isinstance(beta, float):
        # exact for decimal literals; oddball floats still get a well
        # defined rational, just not a pretty one
        return Fraction(str(beta))
    raise TypeError(f"beta must be Fraction, str, int or float, got {type(beta)!r}")


class Regime(str, Enum):
    SMALL = "N<2b"
    CRITICAL_LOW = "N=2b"
    MIDDLE = "2b<N<4b"
    CRITICAL_HIGH = "N=4b"
    LARGE = "N>4b"


class Criticality(str, Enum):
    SUBCRITICAL = "subcritical"
    CRITICAL = "critical"
    SUPERCRITICAL = "supercritical"


@dataclass(frozen=True)
class FractionalParams:
    """Problem parameters: dimension, time order alpha, space order beta.

    beta is held as a Fraction so regime boundaries are decided exactly;
    floats are converted through their decimal representation.
    """

    dim_n: int
    alpha: float
    beta: Fraction

    def __post_init__(self):
        object.__setattr__(self, "beta", _as_fraction(self.beta))
        if not (isinstance(self.dim_n, int) and self.dim_n >= 1):
            raise DomainError(f"dim_n must be an integer >= 1, got {self.dim_n}")
        if not (0.0 < self.alpha < 1.0):
            raise DomainError(f"alpha must be in (0, 1), got {self.alpha}")
        if not (0 < self.beta <= 1):
            raise DomainError(f"beta must be in (0, 1], got {self.beta}")

    @property
    def beta_float(self):
        return float(self.beta)

    @property
    def theta(self):
        return self.alpha / (2.0 * self.beta_float)

    @property
    def sigma_star(self):
        return 1.0 - self.alpha + self.dim_n * self.theta

    @property
    def small_dimension(self):
        return Fraction(self.dim_n) <= 4 * self.beta

    def regime(self):
        n = Fraction(self.dim_n)
        if n < 2 * self.beta:
            return Regime.SMALL
        if n == 2 * self.beta:
            return Regime.CRITICAL_LOW
        if n < 4 * self.beta:
            return Regime.MIDDLE
        if n == 4 * self.beta:
            return Regime.CRITICAL_HIGH
        return Regime.LARGE

    def sigma_p(self, p):
        _check_p(p)
        if math.isinf(p):
            return self.sigma_star
        return self.sigma_star - self.dim_n * self.theta / p

    def p_critical(self):
        """p_c as float, math.inf at N = 2*beta, None when N < 2*beta."""
        n = Fraction(self.dim_n)
        if n < 2 * self.beta:
            return None
        if n == 2 * self.beta:
            return math.inf
        return float(n / (n - 2 * self.beta))

    def q_critical(self, p):
        _check_p(p)
        n = self.dim_n
        if math.isinf(p):
            return n / (2.0 * self.beta_float)
        return n / (2.0 * self.beta_float + n / p)


def _check_p(p):
    if not (p >= 1.0):
        raise DomainError(f"p must lie in [1, inf], got {p}")


@dataclass(frozen=True)
class ExponentSet:
    theta: float
    sigma_star: float
    sigma_p: float
    p_crit: object  # float, math.inf, or None when every p is subcritical
    q_crit: float


def derive_exponents(params, p):
    """All scaling exponents for (params, p) in one immutable record."""
    return ExponentSet(
        theta=params.theta,
        sigma_star=params.sigma_star,
        sigma_p=params.sigma_p(p),
        p_crit=params.p_critical(),
        q_crit=params.q_critical(p),
    )


def classify_p(params, p):
    """(Criticality, q_crit) for the pair; q_crit is None when subcritical."""
    _check_p(p)
    pc = params.p_critical()
    if pc is None or p < pc:
        return Criticality.SUBCRITICAL, None
    if p == pc:
        return Criticality.CRITICAL, params.q_critical(p)
    return Criticality.SUPERCRITICAL, params.q_critical(p)


# ---------------------------------------------------------------------------
# Regions

@dataclass(frozen=True)
class Exterior:
    """|x| >= nu * t^theta."""

    nu: float = 1.0

    def __post_init__(self):
        if not self.nu > 0.0:
            raise DomainError("nu must be positive")


@dataclass(frozen=True)
class CompactBall:
    """|x| <= radius, fixed in time."""

    radius: float = 1.0

    def __post_init__(self):
        if not self.radius > 0.0:
            raise DomainError("radius must be positive")


@dataclass(frozen=True)
class Intermediate:
    """nu < |x| / g(t) < mu with g(t) = t^omega, 0 < omega < theta."""

    omega: float
    nu: float = 0.5
    mu: float = 2.0

    def __post_init__(self):
        if not self.omega > 0.0:
            raise DomainError("omega must be positive")
        if not (0.0 < self.nu < self.mu):
            raise DomainError("need 0 < nu < mu")


@dataclass(frozen=True)
class Global:
    """All of R^N."""


# ---------------------------------------------------------------------------
# Rate expressions

@dataclass(frozen=True)
class RateTerm:
    """One envelope factor t^a (log t)^n g^c log(t^theta/g)^m."""

    t_pow: float
    logt_pow: int = 0
    g_pow: float = 0.0
    loggap_pow: int = 0

    def render(self):
        bits = []
        if self.g_pow != 0.0:
            bits.append("g^{%.3f}" % self.g_pow)
        bits.append("t^{%.3f}" % self.t_pow)
        if self.logt_pow > 0:
            bits.append("log(t)^%d" % self.logt_pow)
        if self.loggap_pow > 0:
            bits.append("log(t^th/g)^%d" % self.loggap_pow)
        return " * ".join(bits)


@dataclass(frozen=True)
class RateExpr:
    """max over terms, carried under a g(t)^{N/p} prefactor.

    required_hypotheses lists the forcing assumptions under which the rate
    is asserted; they are metadata, not validated against a concrete f.
    """

    prefactor_g_pow: float
    terms: tuple
    required_hypotheses: tuple = (HYP_L1_DECAY,)

    def __post_init__(self):
        if not self.terms:
            raise DomainError("RateExpr needs at least one term")

    def render(self):
        inner = " | ".join(term.render() for term in self.terms)
        return "g^{%.2f} * max[ %s ]" % (self.prefactor_g_pow, inner)


def _expr(terms, prefactor=0.0, hyps=(HYP_L1_DECAY,)):
    seen = []
    for term in terms:
        if term not in seen:
            seen.append(term)
    return RateExpr(prefactor, tuple(seen), tuple(hyps))


def _exterior_style_terms(sigma, gamma):
    if gamma < 1.0:
        return [RateTerm(-sigma + 1.0 - gamma)]
    if gamma == 1.0:
        return [RateTerm(-sigma, logt_pow=1)]
    return [RateTerm(-sigma)]


def predicted_rate(params, gamma, p, region):
    """Sharp decay/growth envelope for ||u(.,t)||_{L^p(region)}.

    The returned expression is the max of its terms times g^{N/p} (the g
    prefactor is zero except in intermediate regions).  Raises
    OutOfScopeError above the covered dimension range N <= 4*beta.
    """
    _check_p(p)
    regime = params.regime()
    if regime is Regime.LARGE:
        raise OutOfScopeError(
            "rates for N > 4*beta fall outside the covered regime"
        )
    st = params.sigma_star
    kind, _ = classify_p(params, p)
    subcritical = kind is Criticality.SUBCRITICAL

    if isinstance(region, Exterior):
        hyps = (HYP_L1_DECAY,) if subcritical else (HYP_L1_DECAY, HYP_TAIL_DECAY)
        return _expr(_exterior_style_terms(params.sigma_p(p), gamma), hyps=hyps)

    if isinstance(region, CompactBall):
        hyps = (HYP_L1_DECAY,) if subcritical else (HYP_L1_DECAY, HYP_LQ_DECAY)
        if regime is Regime.SMALL:
            terms = _exterior_style_terms(st, gamma)
        elif regime is Regime.CRITICAL_LOW:
            # sigma_* = 1 here
            if gamma <= 1.0:
                terms = [RateTerm(-gamma, logt_pow=1)]
            else:
                terms = [RateTerm(-st)]
        elif regime is Regime.MIDDLE:
            terms = [RateTerm(-gamma)] if gamma < st else [RateTerm(-st)]
        else:  # N = 4*beta, sigma_* = 1 + alpha
            if gamma < st:
                terms = [RateTerm(-gamma)]
            else:
                terms = [RateTerm(-st, logt_pow=1)]
        return _expr(terms, hyps=hyps)

    if isinstance(region, Intermediate):
        if not region.omega < params.theta:
            raise DomainError(
                "intermediate scale needs omega < theta so g(t) = o(t^theta)"
            )
        hyps = (HYP_L1_DECAY,) if subcritical else (HYP_L1_DECAY, HYP_TAIL_DECAY)
        pref = 0.0 if math.isinf(p) else params.dim_n / p
        # (1 - sigma_*)/theta = 2*beta - N, exactly
        c = float(2 * params.beta - params.dim_n)
        if regime is Regime.SMALL:
            terms = _exterior_style_terms(st, gamma)
        elif regime is Regime.CRITICAL_LOW:
            if gamma < 1.0:
                terms = [RateTerm(-gamma, loggap_pow=1)]
            elif gamma == 1.0:
                terms = [RateTerm(-st, logt_pow=1)]
            else:
                terms = [RateTerm(-st)]
        elif regime is Regime.MIDDLE:
            if gamma < 1.0:
                terms = [RateTerm(-gamma, g_pow=c)]
            elif gamma == 1.0:
                terms = [RateTerm(-1.0, g_pow=c), RateTerm(-st, logt_pow=1)]
            else:
                terms = [RateTerm(-gamma, g_pow=c), RateTerm(-st)]
        else:  # N = 4*beta
            if gamma < 1.0:
                terms = [
                    RateTerm(-gamma, g_pow=c),
                    RateTerm(-st + 1.0 - gamma, loggap_pow=1),
                ]
            elif gamma == 1.0:
                terms = [
                    RateTerm(-1.0, g_pow=c),
                    RateTerm(-st, logt_pow=1, loggap_pow=1),
                ]
            else:
                terms = [
                    RateTerm(-gamma, g_pow=c),
                    RateTerm(-st, loggap_pow=1),
                ]
        return _expr(terms, prefactor=pref, hyps=hyps)

    if isinstance(region, Global):
        hyps = (
            (HYP_L1_DECAY,)
            if subcritical
            else (HYP_L1_DECAY, HYP_TAIL_DECAY, HYP_LQ_DECAY)
        )
        if subcritical:
            terms = _exterior_style_terms(params.sigma_p(p), gamma)
        elif kind is Criticality.CRITICAL:
            if gamma <= 1.0:
                terms = [RateTerm(-gamma, logt_pow=1)]
            else:
                terms = [RateTerm(-1.0)]
        else:
            sp = params.sigma_p(p)
            if gamma < sp:
                terms = [RateTerm(-gamma)]
            elif math.isinf(p) and regime is Regime.CRITICAL_HIGH:
                # sigma(inf) = sigma_* = 1 + alpha
                terms = [RateTerm(-st, logt_pow=1)]
            else:
                terms = [RateTerm(-sp)]
        return _expr(terms, hyps=hyps)

    raise TypeError(f"unknown region {region!r}")


# ---------------------------------------------------------------------------
# Closed-form envelope integrals

def power_log_integral(gamma, t, window="head"):
    """Exact value and growth class of the two workhorse time integrals.

    window="head": integral of (1+s)^-gamma over s in [0, t/2].
    window="tail": integral of (t-s)^-gamma over s in [t/2, t-1].
    Returns (value, tag) with tag in {"power", "log", "bounded"}, the
    large-t class t^{1-gamma} / log t / O(1).
    """
    if not t >= 2.0:
        raise DomainError(f"t must be >= 2, got {t}")
    if window == "head":
        upper = 1.0 + 0.5 * t
        if gamma == 1.0:
            value = math.log(upper)
        else:
            value = (upper ** (1.0 - gamma) - 1.0) / (1.0 - gamma)
    elif window == "tail":
        # substitute u = t - s: integral of u^-gamma over [1, t/2]
        upper = 0.5 * t
        if gamma == 1.0:
            value = math.log(upper)
        else:
            value = (upper ** (1.0 - gamma) - 1.0) / (1.0 - gamma)
    else:
        raise DomainError(f"window must be 'head' or 'tail', got {window!r}")
    if gamma < 1.0:
        tag = "power"
    elif gamma == 1.0:
        tag = "log"
    else:
        tag = "bounded"
    return value, tag
