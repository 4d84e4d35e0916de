"""Mild solutions for separable forcings, and their region-wise norms.

The Duhamel integral factors through the spatial convolution
W(r, s) = (Y(., s) * chi_{B_R})(r).  Self-similarity reduces W to
s^{alpha-1} times a ball overlap of the profile G evaluated in the
similarity variable, which in dimension one is a difference of
cumulative masses and in dimensions two and three a one-dimensional
radial integral with a geometric overlap weight.
"""

import math
import weakref
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, QuadratureError, TruncationError
from .exponents import CompactBall, Exterior, Global, Intermediate
from .kernel import _SURFACE, ProfileTable, _panel_nodes, check_kernel_bounds

__all__ = [
    "Forcing",
    "NormSeries",
    "convolve_space",
    "mild_solution",
    "norm_series",
    "region_lp_norm",
]

# points whose value sits below this are exempt from the relative target
_ABS_FLOOR = 1e-14


def _ball_volume(n_dim, radius):
    if n_dim == 1:
        return 2.0 * radius
    if n_dim == 2:
        return math.pi * radius**2
    return 4.0 * math.pi * radius**3 / 3.0


@dataclass(frozen=True)
class Forcing:
    """Separable source a(t) chi_{B_R}(x) with a(t) = amplitude (1+t)^-gamma.

    gamma = 0 is allowed (no decay); the mass-law identities use it.
    """

    gamma: float
    amplitude: float = 1.0
    radius: float = 1.0

    def __post_init__(self):
        if not self.gamma >= 0.0:
            raise DomainError("gamma must be nonnegative")
        if not self.amplitude > 0.0:
            raise DomainError("amplitude must be positive")
        if not self.radius > 0.0:
            raise DomainError("radius must be positive")

    def a(self, s):
        return self.amplitude * np.power(1.0 + np.asarray(s, dtype=np.float64), -self.gamma)

    def l1_norm(self, n_dim, s):
        """||f(., s)||_1 = amplitude |B_R| (1+s)^-gamma."""
        return _ball_volume(n_dim, self.radius) * self.a(s)


# ---------------------------------------------------------------------------
# spatial convolution against the ball indicator, in similarity variables

def _overlap_line(profile, xi, half):
    # int over [xi-half, xi+half] of G(|u|), folded across the origin
    lo = xi - half
    hi = xi + half
    main = profile.interval_mass(np.maximum(lo, 0.0), hi)
    folded = profile.interval_mass(
        np.zeros_like(np.asarray(lo, dtype=np.float64)), np.maximum(-lo, 0.0)
    )
    return main + folded


# normalized panel edges reused across every (xi, ball) pair: geometric
# grading toward both ends where the overlap weight loses smoothness
_EDGE_GRADE = np.concatenate(
    (
        0.5 * 3.0 ** -np.arange(6, 0, -1.0),
        np.linspace(0.5, 1.0, 9)[1:],
    )
)
_PARTIAL_EDGES = np.concatenate((_EDGE_GRADE * 0.5, 1.0 - _EDGE_GRADE[-2::-1] * 0.5))
_PARTIAL_EDGES = np.concatenate(([0.0], _PARTIAL_EDGES, [1.0]))
_FULL_EDGES = np.concatenate(([0.0], np.geomspace(1e-6, 1.0, 16)))


def _overlap_ball(profile, xi, ball):
    """int_{B_ball} G(|xi e - v|) dv for dimensions two and three.

    xi and ball are broadcastable arrays of similarity radii.
    """
    n_dim = profile.params.dim_n
    xi_b, ball_b = np.broadcast_arrays(
        np.asarray(xi, dtype=np.float64), np.asarray(ball, dtype=np.float64)
    )
    shape = xi_b.shape
    xv = xi_b.ravel()
    bv = ball_b.ravel()
    out = np.zeros(xv.size)

    from .oscquad import gl_panel_rule

    x12, w12 = gl_panel_rule(12)

    # full-sphere zone: for xi < ball the shells with u < ball - xi lie
    # entirely inside the ball
    inner = np.maximum(bv - xv, 0.0)
    has_full = inner > 0.0
    if np.any(has_full):
        scale = inner[has_full][:, None]
        edges = scale * _FULL_EDGES[None, :]
        starts = edges[:, :-1]
        widths = np.diff(edges, axis=1)
        nodes = starts[:, :, None] + widths[:, :, None] * x12[None, None, :]
        wts = widths[:, :, None] * w12[None, None, :]
        g = profile.g_of(nodes.ravel()).reshape(nodes.shape)
        w_geom = _SURFACE[n_dim] * nodes ** (n_dim - 1)
        out[has_full] = (g * w_geom * wts).sum(axis=(1, 2))

    # partial zone: shells with |xi - ball| < u < xi + ball
    lo = np.abs(xv - bv)
    hi = xv + bv
    width = hi - lo
    has_part = (width > 0.0) & (xv > 1e-12 * np.maximum(bv, 1.0))
    if np.any(has_part):
        lo_p = lo[has_part][:, None]
        w_p = width[has_part][:, None]
        edges = lo_p + w_p * _PARTIAL_EDGES[None, :]
        starts = edges[:, :-1]
        widths = np.diff(edges, axis=1)
        nodes = starts[:, :, None] + widths[:, :, None] * x12[None, None, :]
        wts = widths[:, :, None] * w12[None, None, :]
        g = profile.g_of(nodes.ravel()).reshape(nodes.shape)
        xp = xv[has_part][:, None, None]
        bp = bv[has_part][:, None, None]
        with np.errstate(invalid="ignore", divide="ignore"):
            cosq = (xp**2 + nodes**2 - bp**2) / (2.0 * xp * nodes)
        cosq = np.clip(cosq, -1.0, 1.0)
        if n_dim == 2:
            w_geom = 2.0 * nodes * np.arccos(cosq)
        else:
            w_geom = 2.0 * math.pi * nodes**2 * (1.0 - cosq)
        out[has_part] += (g * w_geom * wts).sum(axis=(1, 2))
    return out.reshape(shape)


def _overlap(profile, xi, ball):
    if profile.params.dim_n == 1:
        return _overlap_line(profile, xi, ball)
    return _overlap_ball(profile, xi, ball)


def convolve_space(profile, s, forcing):
    """Radial function W(r, s) = (Y(., s) * chi_{B_R})(r) at fixed s.

    Returns a callable of the radial coordinate; W >= 0 and, by Fubini,
    integrates over space to |B_R| s^{alpha-1} / Gamma(alpha).
    """
    if not isinstance(profile, ProfileTable):
        raise TypeError("profile must be a ProfileTable")
    if not isinstance(forcing, Forcing):
        raise TypeError("forcing must be a Forcing")
    if not s > 0.0:
        raise DomainError("time must be positive")
    pars = profile.params
    sc = s ** (-pars.theta)
    pref = s ** (pars.alpha - 1.0)
    ball = forcing.radius * sc

    def w_of(r):
        rr = np.abs(np.asarray(r, dtype=np.float64))
        vals = pref * _overlap(profile, rr * sc, ball)
        return np.maximum(vals, 0.0)

    return w_of


# ---------------------------------------------------------------------------
# Duhamel time quadrature

def _duhamel_pass(profile, forcing, r, t, level):
    """One fixed-resolution evaluation of u(r, t), vectorized over r.

    Splits at tau = t - s: an eps = tau^alpha substitution flattens the
    tau^{alpha-1} mass concentration at tau -> 0 (the overlap is analytic
    in eps there), log-tau panels cover the middle, and log-(1+s) panels
    resolve the forcing decay toward s -> 0.
    """
    pars = profile.params
    alpha, theta = pars.alpha, pars.theta
    t_half = 0.5 * t
    tau0 = min(1.0, t_half)
    per_dec = 4 * 2**level
    n_eps = 8 + 6 * level

    taus = []
    base_wts = []  # weight including the tau^{alpha-1} factor

    e_top = tau0**alpha
    edges = e_top * np.concatenate(([0.0], np.geomspace(1e-6, 1.0, n_eps)))
    nodes_e, wts_e = _panel_nodes(edges, 12)
    taus.append(nodes_e ** (1.0 / alpha))
    base_wts.append(wts_e / alpha)

    if tau0 < t_half:
        decades = math.log10(t_half / tau0)
        n_edge = max(2, int(math.ceil(decades * per_dec)) + 1)
        edges = np.geomspace(tau0, t_half, n_edge)
        nodes_m, wts_m = _panel_nodes(edges, 12)
        taus.append(nodes_m)
        base_wts.append(wts_m * nodes_m ** (alpha - 1.0))

    decades = math.log10(1.0 + t_half)
    n_edge = max(2, int(math.ceil(decades * per_dec)) + 1)
    edges_w = np.geomspace(1.0, 1.0 + t_half, n_edge)
    s_nodes = edges_w - 1.0
    nodes_s, wts_s = _panel_nodes(s_nodes, 12)
    tau_s = t - nodes_s
    taus.append(tau_s)
    base_wts.append(wts_s * tau_s ** (alpha - 1.0))

    tau = np.concatenate(taus)
    wts = np.concatenate(base_wts) * forcing.a(t - tau)
    sc = tau ** (-theta)
    q = _overlap(profile, r[:, None] * sc[None, :], forcing.radius * sc[None, :])
    return q @ wts


def mild_solution(x, t, forcing, profile, tol=1e-5):
    """u(x, t) for the separable forcing, zero initial data.

    x is a radial coordinate, scalar or array.  The estimated relative
    error is held at or below tol wherever u exceeds 1e-14 absolute;
    failure to converge raises with the achieved estimate attached.
    """
    if not isinstance(profile, ProfileTable):
        raise TypeError("profile must be a ProfileTable")
    if not isinstance(forcing, Forcing):
        raise TypeError("forcing must be a Forcing")
    if not t > 0.0:
        raise DomainError("time must be positive")
    if not 1e-7 <= tol <= 1e-3:
        raise DomainError("tol must lie in [1e-7, 1e-3]")
    rr = np.abs(np.asarray(x, dtype=np.float64))
    scalar = rr.ndim == 0
    r = np.atleast_1d(rr).astype(np.float64)

    prev = None
    worst = math.inf
    for level in range(4):
        cur = _duhamel_pass(profile, forcing, r, t, level)
        if prev is not None:
            est = np.abs(cur - prev)
            live = np.abs(cur) > _ABS_FLOOR
            worst = float(np.max(est[live] / np.abs(cur[live]))) if np.any(live) else 0.0
            if worst <= tol:
                out = np.maximum(cur, 0.0)
                return float(out[0]) if scalar else out
        prev = cur
    raise QuadratureError(
        f"Duhamel quadrature stalled at estimate {worst:.2e} (target {tol:.2e})",
        residual=worst,
    )


# ---------------------------------------------------------------------------
# region norms

_CNU_CACHE = weakref.WeakKeyDictionary()


def _c_nu(profile):
    try:
        return _CNU_CACHE[profile]
    except KeyError:
        val = check_kernel_bounds(profile, nu=1.0).c_nu
        _CNU_CACHE[profile] = val
        return val


def _region_bounds(region, t, pars):
    if isinstance(region, Exterior):
        return region.nu * t**pars.theta, math.inf
    if isinstance(region, CompactBall):
        return 0.0, region.radius
    if isinstance(region, Intermediate):
        if not region.omega < pars.theta:
            raise DomainError("intermediate scale must grow slower than t^theta")
        g = t**region.omega
        if region.nu * g < 1.0:
            raise DomainError("intermediate region needs nu * t^omega >= 1")
        return region.nu * g, region.mu * g
    if isinstance(region, Global):
        return 0.0, math.inf
    raise TypeError(f"unknown region {region!r}")


def _tail_budget(profile, forcing, t, cut, p):
    """Closed-form bound on int_cut^inf u^p r^{N-1} dr from the envelope.

    Uses G(z) <= C_nu z^-(N+2 beta) for z >= 1, which turns the Duhamel
    integrand into amplitude |B_R| C_nu (r-R)^-(N+2 beta) tau^{2 alpha-1};
    valid once cut - R clears the similarity radius t^theta.
    """
    pars = profile.params
    n_dim = pars.dim_n
    expo = n_dim + 2.0 * float(pars.beta)
    alpha = pars.alpha
    big_r = forcing.radius
    if cut - big_r < t**pars.theta:
        return math.inf
    d_const = (
        forcing.amplitude
        * _ball_volume(n_dim, big_r)
        * _c_nu(profile)
        * t ** (2.0 * alpha)
        / (2.0 * alpha)
    )
    q = p * expo
    if q <= n_dim:
        return math.inf
    fold = (1.0 - big_r / cut) ** (-q)
    return d_const**p * fold * cut ** (n_dim - q) / (q - n_dim)


def _sup_norm(profile, forcing, t, lo, hi, tol):
    inner_tol = min(max(tol * 0.25, 1e-7), 1e-3)
    if math.isinf(hi):
        probes = lo * np.array([1.0, 1.05, 1.2, 1.5, 2.0, 3.0, 5.0])
    elif lo == 0.0:
        probes = np.concatenate(([0.0], np.geomspace(max(hi * 1e-4, 1e-8), hi, 48)))
    else:
        probes = np.geomspace(lo, hi, 48)
    u = mild_solution(probes, t, forcing, profile, tol=inner_tol)
    k = int(np.argmax(u))
    m0 = float(u[k])
    a = probes[max(k - 1, 0)]
    b = probes[min(k + 1, probes.size - 1)]
    if b > a:
        fine = np.linspace(a, b, 17)
        m1 = float(np.max(mild_solution(fine, t, forcing, profile, tol=inner_tol)))
    else:
        m1 = m0
    value = max(m0, m1)
    return value, abs(m1 - m0) + inner_tol * value


def _power_norm(profile, forcing, t, lo, hi, p, tol):
    pars = profile.params
    n_dim = pars.dim_n
    inner_tol = min(max(tol * 0.2, 1e-7), 1e-3)

    if math.isinf(hi):
        cut = max(2.0 * lo if lo > 0 else 0.0, forcing.radius + 1.5 * t**pars.theta)
    else:
        cut = hi

    prev = None
    worst = math.inf
    for level in range(3):
        per_dec = 6 * 2**level
        if lo == 0.0:
            head = cut * 1e-3
            n_edge = max(2, int(math.ceil(3.0 * per_dec)) + 1)
            edges = np.concatenate(([0.0], np.geomspace(head, cut, n_edge)))
        else:
            decades = max(math.log10(cut / lo), 0.05)
            n_edge = max(2, int(math.ceil(decades * per_dec)) + 1)
            edges = np.geomspace(lo, cut, n_edge)
        nodes, wts = _panel_nodes(edges, 8)
        u = mild_solution(nodes, t, forcing, profile, tol=inner_tol)
        acc = float((u**p * nodes ** (n_dim - 1)) @ wts)

        if math.isinf(hi):
            x_lo = cut
            for _ in range(60):
                x_hi = 2.0 * x_lo
                nodes, wts = _panel_nodes(np.geomspace(x_lo, x_hi, 7), 8)
                u = mild_solution(nodes, t, forcing, profile, tol=inner_tol)
                acc += float((u**p * nodes ** (n_dim - 1)) @ wts)
                budget = _tail_budget(profile, forcing, t, x_hi, p)
                if budget <= 0.3 * tol * acc:
                    break
                x_lo = x_hi
            else:
                raise TruncationError(
                    "envelope cannot certify the outer tail of the region norm"
                )
        value = (_SURFACE[n_dim] * acc) ** (1.0 / p)
        if prev is not None:
            worst = abs(value - prev)
            if worst <= tol * value:
                return value, worst + inner_tol * value
        prev = value
    raise QuadratureError(
        f"region norm stalled at estimate {worst:.2e}", residual=worst
    )


def region_lp_norm(t, p, region, forcing, profile, tol=1e-3):
    """L^p norm of u(., t) over one of the four region families."""
    value, _ = _region_norm_detail(t, p, region, forcing, profile, tol)
    return value


def _region_norm_detail(t, p, region, forcing, profile, tol):
    if not isinstance(profile, ProfileTable):
        raise TypeError("profile must be a ProfileTable")
    if not isinstance(forcing, Forcing):
        raise TypeError("forcing must be a Forcing")
    if not t > 0.0:
        raise DomainError("time must be positive")
    if p != math.inf and not p >= 1.0:
        raise DomainError("p must be >= 1 or inf")
    lo, hi = _region_bounds(region, t, profile.params)
    if p == math.inf:
        return _sup_norm(profile, forcing, t, lo, hi, tol)
    return _power_norm(profile, forcing, t, lo, hi, p, tol)


# ---------------------------------------------------------------------------
# measured decay series

def region_label(region):
    if isinstance(region, Exterior):
        return f"exterior(nu={float(region.nu)!r})"
    if isinstance(region, CompactBall):
        return f"compact(radius={float(region.radius)!r})"
    if isinstance(region, Intermediate):
        return (
            f"intermediate(omega={float(region.omega)!r};"
            f"nu={float(region.nu)!r};mu={float(region.mu)!r})"
        )
    if isinstance(region, Global):
        return "global"
    raise TypeError(f"unknown region {region!r}")


@dataclass(frozen=True)
class NormSeries:
    """Measured norm decay: at least 8 log-spaced times over >= 2 decades."""

    region: object
    p: float
    ts: tuple
    values: tuple
    est_errors: tuple

    def __post_init__(self):
        ts = np.asarray(self.ts, dtype=np.float64)
        vals = np.asarray(self.values, dtype=np.float64)
        if ts.size < 8:
            raise DomainError("need at least 8 samples")
        if not np.all(np.diff(ts) > 0.0):
            raise DomainError("times must be strictly increasing")
        if ts[-1] / ts[0] < 99.0:
            raise DomainError("times must span at least two decades")
        gaps = np.diff(np.log(ts))
        if gaps.max() > 4.0 * gaps.min():
            raise DomainError("times must be approximately log-spaced")
        if not np.all(np.isfinite(vals)) or not np.all(vals > 0.0):
            raise DomainError("norm values must be finite and positive")
        if len(self.est_errors) != ts.size:
            raise DomainError("one error estimate per sample required")

    def to_csv(self):
        label = region_label(self.region)
        p_str = "inf" if self.p == math.inf else repr(float(self.p))
        lines = ["t,value,est_error,region,p"]
        for t, v, e in zip(self.ts, self.values, self.est_errors):
            lines.append(f"{float(t)!r},{float(v)!r},{float(e)!r},{label},{p_str}")
        return "\n".join(lines) + "\n"


def norm_series(ts, p, region, forcing, profile, tol=1e-3):
    """Measure ||u(., t)||_p over the region at each time in ts."""
    values = []
    errors = []
    for t in ts:
        val, err = _region_norm_detail(float(t), p, region, forcing, profile, tol)
        values.append(val)
        errors.append(err)
    return NormSeries(
        region=region,
        p=float(p),
        ts=tuple(float(t) for t in ts),
        values=tuple(values),
        est_errors=tuple(errors),
    )
