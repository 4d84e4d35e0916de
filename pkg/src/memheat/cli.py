"""Command line front end.

Subcommands share one config file format: flat key = value lines under
[section] headers, parsed strictly (unknown sections, unknown keys and
malformed values are errors with file:line diagnostics, exit code 1).
Outputs are deterministic: CSVs render floats with repr, SVG plots format
coordinates to fixed precision, and cells are processed in config order
even when dispatched to a worker pool.
"""

import argparse
import hashlib
import math
import os
import pickle
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np

from .errors import ConfigError, DomainError, MemheatError
from .exponents import (
    CompactBall,
    Exterior,
    FractionalParams,
    Global,
    Intermediate,
    derive_exponents,
)
from .experiments import (
    ksz_limit_check,
    matrix_csv,
    matrix_summary,
    verify_rate,
)
from .kernel import build_profile, check_kernel_bounds
from .solver import Forcing, norm_series, region_label


@dataclass(frozen=True)
class ExperimentConfig:
    """Parsed and validated experiment description."""

    params: FractionalParams
    forcing: object
    regions: tuple
    p_list: tuple
    t_grid: tuple
    norm_tol: float
    slope_tol: float
    spread_tol: float
    profile_tol: float
    out_dir: str
    cache_dir: object


# ---------------------------------------------------------------------------
# config parsing

_ALLOWED_KEYS = {
    "params": {"N", "alpha", "beta"},
    "forcing": {"gamma", "radius", "amplitude"},
    "grid": {"t_min", "t_max", "points"},
    "tolerances": {"norm_tol", "slope_tol", "spread_tol", "profile_tol"},
    "regions": {"region"},
    "norms": {"p"},
    "output": {"out_dir", "cache_dir"},
}
_REPEATABLE = {("regions", "region"), ("norms", "p")}


def _scan_entries(path, text):
    section = None
    entries = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in _ALLOWED_KEYS:
                raise ConfigError(f"{path}:{lineno}: unknown section '[{section}]'")
            continue
        if section is None:
            raise ConfigError(f"{path}:{lineno}: key before any [section] header")
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key not in _ALLOWED_KEYS[section]:
            raise ConfigError(
                f"{path}:{lineno}: unknown key '{key}' in [{section}]"
            )
        slot = entries.setdefault((section, key), [])
        if slot and (section, key) not in _REPEATABLE:
            raise ConfigError(f"{path}:{lineno}: duplicate key '{key}'")
        slot.append((lineno, val))
    return entries


def _take(entries, section, key, default=None):
    slot = entries.get((section, key))
    if slot is None:
        return None, default
    return slot[0]


def _parse_float(path, lineno, key, val):
    try:
        return float(val)
    except ValueError:
        raise ConfigError(f"{path}:{lineno}: key '{key}' needs a number, got '{val}'")


def _parse_int(path, lineno, key, val):
    try:
        return int(val)
    except ValueError:
        raise ConfigError(
            f"{path}:{lineno}: key '{key}' needs an integer, got '{val}'"
        )


def _parse_p(path, lineno, val):
    if val.lower() in ("inf", "infinity"):
        return math.inf
    p = _parse_float(path, lineno, "p", val)
    if not p >= 1.0:
        raise ConfigError(f"{path}:{lineno}: key 'p' must be in [1, inf], got {val}")
    return p


def _parse_region(path, lineno, val):
    parts = val.split()
    if not parts:
        raise ConfigError(f"{path}:{lineno}: empty region specification")
    kind = parts[0].lower()
    opts = {}
    for part in parts[1:]:
        if "=" not in part:
            raise ConfigError(
                f"{path}:{lineno}: region option '{part}' must be name=value"
            )
        name, _, num = part.partition("=")
        opts[name] = _parse_float(path, lineno, f"region {name}", num)
    makers = {
        "compact": (CompactBall, {"radius"}),
        "exterior": (Exterior, {"nu"}),
        "intermediate": (Intermediate, {"omega", "nu", "mu"}),
        "global": (Global, set()),
    }
    if kind not in makers:
        raise ConfigError(
            f"{path}:{lineno}: unknown region kind '{kind}' "
            f"(expected compact, exterior, intermediate or global)"
        )
    cls, allowed = makers[kind]
    bad = set(opts) - allowed
    if bad:
        raise ConfigError(
            f"{path}:{lineno}: region '{kind}' does not take "
            f"option '{sorted(bad)[0]}'"
        )
    try:
        return cls(**opts)
    except DomainError as exc:
        raise ConfigError(f"{path}:{lineno}: invalid region: {exc}")


def parse_config(path):
    """Read and validate a config file into an ExperimentConfig."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config '{path}': {exc}")
    entries = _scan_entries(path, text)

    for key in ("N", "alpha", "beta"):
        if ("params", key) not in entries:
            raise ConfigError(f"{path}: missing required key '{key}' in [params]")

    lineno, val = _take(entries, "params", "N")
    dim_n = _parse_int(path, lineno, "N", val)
    lineno, val = _take(entries, "params", "alpha")
    alpha = _parse_float(path, lineno, "alpha", val)
    if not 0.0 < alpha < 1.0:
        raise ConfigError(
            f"{path}:{lineno}: key 'alpha' must be in (0, 1), got {val}"
        )
    lineno, val = _take(entries, "params", "beta")
    try:
        beta = Fraction(val)
    except (ValueError, ZeroDivisionError):
        raise ConfigError(
            f"{path}:{lineno}: key 'beta' needs a rational like '1/2', got '{val}'"
        )
    try:
        params = FractionalParams(dim_n=dim_n, alpha=alpha, beta=beta)
    except DomainError as exc:
        raise ConfigError(f"{path}:{lineno}: {exc}")

    forcing = None
    if ("forcing", "gamma") in entries:
        lineno, val = _take(entries, "forcing", "gamma")
        gamma = _parse_float(path, lineno, "gamma", val)
        lineno, val = _take(entries, "forcing", "radius", "1.0")
        radius = _parse_float(path, lineno or 0, "radius", val)
        lineno, val = _take(entries, "forcing", "amplitude", "1.0")
        amplitude = _parse_float(path, lineno or 0, "amplitude", val)
        try:
            forcing = Forcing(gamma=gamma, radius=radius, amplitude=amplitude)
        except DomainError as exc:
            raise ConfigError(f"{path}: invalid [forcing]: {exc}")
    elif any(sec == "forcing" for sec, _ in entries):
        raise ConfigError(f"{path}: [forcing] section needs a 'gamma' key")

    regions = tuple(
        _parse_region(path, lineno, val)
        for lineno, val in entries.get(("regions", "region"), [])
    )
    p_list = tuple(
        _parse_p(path, lineno, val)
        for lineno, val in entries.get(("norms", "p"), [])
    ) or (1.0, 2.0, math.inf)

    lineno, val = _take(entries, "grid", "t_min", "1e2")
    t_min = _parse_float(path, lineno or 0, "t_min", val)
    lineno, val = _take(entries, "grid", "t_max", "1e4")
    t_max = _parse_float(path, lineno or 0, "t_max", val)
    lineno, val = _take(entries, "grid", "points", "16")
    points = _parse_int(path, lineno or 0, "points", val)
    if not (t_min > 0.0 and t_max > t_min and points >= 8):
        raise ConfigError(
            f"{path}: [grid] needs 0 < t_min < t_max and points >= 8"
        )
    t_grid = tuple(float(t) for t in np.geomspace(t_min, t_max, points))

    tols = {}
    for key, default, lo, hi in (
        ("norm_tol", 1e-3, 1e-7, 1e-1),
        ("slope_tol", 0.05, 1e-4, 1.0),
        ("spread_tol", 3.0, 1.0, 100.0),
        ("profile_tol", 1e-6, 1e-8, 1e-4),
    ):
        lineno, val = _take(entries, "tolerances", key, None)
        if val is None:
            tols[key] = default
            continue
        num = _parse_float(path, lineno, key, val)
        if not lo <= num <= hi:
            raise ConfigError(
                f"{path}:{lineno}: key '{key}' must be in [{lo:g}, {hi:g}]"
            )
        tols[key] = num

    _, out_val = _take(entries, "output", "out_dir", None)
    _, cache_val = _take(entries, "output", "cache_dir", None)

    return ExperimentConfig(
        params=params,
        forcing=forcing,
        regions=regions,
        p_list=p_list,
        t_grid=t_grid,
        norm_tol=tols["norm_tol"],
        slope_tol=tols["slope_tol"],
        spread_tol=tols["spread_tol"],
        profile_tol=tols["profile_tol"],
        out_dir=out_val if out_val is not None else "out",
        cache_dir=cache_val,
    )


# ---------------------------------------------------------------------------
# profile cache

def _profile_cache_key(params, tol):
    text = (
        f"profile-v1|N={params.dim_n}|alpha={params.alpha!r}"
        f"|beta={params.beta}|grid=default|tol={tol!r}"
    )
    return hashlib.sha256(text.encode("ascii")).hexdigest()[:24]


def load_profile(params, cache_dir=None, tol=1e-6):
    """build_profile with an optional on-disk pickle cache."""
    if cache_dir is None:
        return build_profile(params, tol=tol)
    os.makedirs(cache_dir, exist_ok=True)
    path = os.path.join(cache_dir, _profile_cache_key(params, tol) + ".pkl")
    if os.path.exists(path):
        with open(path, "rb") as fh:
            return pickle.load(fh)
    profile = build_profile(params, tol=tol)
    tmp = f"{path}.tmp{os.getpid()}"
    with open(tmp, "wb") as fh:
        pickle.dump(profile, fh)
    os.replace(tmp, path)
    return profile


# ---------------------------------------------------------------------------
# SVG rendering

_SVG_W, _SVG_H = 720, 480
_ML, _MR, _MT, _MB = 72, 24, 44, 58


def _ticks(lo, hi):
    first = math.ceil(lo - 1e-9)
    return [k for k in range(first, math.floor(hi + 1e-9) + 1)]


def _svg_loglog(title, curves, x_label="log10 t", y_label="log10 norm"):
    """Deterministic log-log SVG plot.

    curves: list of (name, color, dash, points) with points in data space
    (positive x, positive y); rendering happens in log10 coordinates.
    """
    logged = []
    for name, color, dash, pts in curves:
        lp = [(math.log10(x), math.log10(y)) for x, y in pts if y > 0.0]
        if lp:
            logged.append((name, color, dash, lp))
    if not logged:
        raise DomainError("nothing to plot")
    xs = [x for _, _, _, lp in logged for x, _ in lp]
    ys = [y for _, _, _, lp in logged for _, y in lp]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    x_pad = 0.05 * (x_hi - x_lo or 1.0)
    y_pad = 0.08 * (y_hi - y_lo or 1.0)
    x_lo -= x_pad
    x_hi += x_pad
    y_lo -= y_pad
    y_hi += y_pad

    def px(x):
        return _ML + (x - x_lo) / (x_hi - x_lo) * (_SVG_W - _ML - _MR)

    def py(y):
        return _SVG_H - _MB - (y - y_lo) / (y_hi - y_lo) * (_SVG_H - _MT - _MB)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_SVG_W}" '
        f'height="{_SVG_H}" viewBox="0 0 {_SVG_W} {_SVG_H}">',
        f'<rect width="{_SVG_W}" height="{_SVG_H}" fill="white"/>',
        f'<text x="{_SVG_W / 2:.2f}" y="24" text-anchor="middle" '
        f'font-family="sans-serif" font-size="15">{title}</text>',
    ]
    axis = 'stroke="black" stroke-width="1"'
    out.append(
        f'<line x1="{_ML}" y1="{_SVG_H - _MB}" x2="{_SVG_W - _MR}" '
        f'y2="{_SVG_H - _MB}" {axis}/>'
    )
    out.append(f'<line x1="{_ML}" y1="{_MT}" x2="{_ML}" y2="{_SVG_H - _MB}" {axis}/>')
    for k in _ticks(x_lo, x_hi):
        x = px(k)
        out.append(
            f'<line x1="{x:.2f}" y1="{_SVG_H - _MB}" x2="{x:.2f}" '
            f'y2="{_SVG_H - _MB + 6}" {axis}/>'
        )
        out.append(
            f'<text x="{x:.2f}" y="{_SVG_H - _MB + 22}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="12">{k}</text>'
        )
    for k in _ticks(y_lo, y_hi):
        y = py(k)
        out.append(f'<line x1="{_ML - 6}" y1="{y:.2f}" x2="{_ML}" y2="{y:.2f}" {axis}/>')
        out.append(
            f'<text x="{_ML - 10}" y="{y + 4:.2f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="12">{k}</text>'
        )
    out.append(
        f'<text x="{(_ML + _SVG_W - _MR) / 2:.2f}" y="{_SVG_H - 14}" '
        f'text-anchor="middle" font-family="sans-serif" font-size="13">'
        f"{x_label}</text>"
    )
    out.append(
        f'<text x="20" y="{(_MT + _SVG_H - _MB) / 2:.2f}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="13" '
        f'transform="rotate(-90 20 {(_MT + _SVG_H - _MB) / 2:.2f})">{y_label}</text>'
    )
    for name, color, dash, lp in logged:
        pts = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in lp)
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        out.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" '
            f'stroke-width="1.5"{dash_attr}/>'
        )
    ly = _MT + 14
    for name, color, dash, _ in logged:
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        out.append(
            f'<line x1="{_SVG_W - _MR - 190}" y1="{ly}" '
            f'x2="{_SVG_W - _MR - 160}" y2="{ly}" stroke="{color}" '
            f'stroke-width="1.5"{dash_attr}/>'
        )
        out.append(
            f'<text x="{_SVG_W - _MR - 152}" y="{ly + 4}" '
            f'font-family="sans-serif" font-size="12">{name}</text>'
        )
        ly += 18
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _escape(text):
    return (
        text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
    )


# ---------------------------------------------------------------------------
# output plumbing

def _write_text(path, text):
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    print(path)


def _p_name(p):
    return "inf" if math.isinf(p) else f"{p:g}"


def _region_name(region):
    return region_label(region).partition("(")[0]


# ---------------------------------------------------------------------------
# subcommands

def _cmd_exponents(cfg, jobs):
    lines = ["N,alpha,beta,p,theta,sigma_star,sigma_p,p_c,q_c"]
    for p in cfg.p_list:
        es = derive_exponents(cfg.params, p)
        if es.p_crit is None:
            pc = ""
        elif math.isinf(es.p_crit):
            pc = "inf"
        else:
            pc = repr(float(es.p_crit))
        lines.append(",".join([
            str(cfg.params.dim_n),
            repr(float(cfg.params.alpha)),
            str(cfg.params.beta),
            _p_name(p),
            repr(float(es.theta)),
            repr(float(es.sigma_star)),
            repr(float(es.sigma_p)),
            pc,
            repr(float(es.q_crit)),
        ]))
    _write_text(os.path.join(cfg.out_dir, "exponents.csv"), "\n".join(lines) + "\n")
    return 0


def _cmd_profile(cfg, jobs):
    profile = load_profile(cfg.params, cfg.cache_dir, cfg.profile_tol)
    lines = ["r,G"]
    for r, g in zip(profile.radii, profile.values):
        lines.append(f"{float(r)!r},{float(g)!r}")
    _write_text(os.path.join(cfg.out_dir, "profile.csv"), "\n".join(lines) + "\n")
    pts = [
        (float(r), float(g))
        for r, g in zip(profile.radii, profile.values)
        if g > 0.0
    ]
    svg = _svg_loglog(
        _escape(f"radial profile N={cfg.params.dim_n} alpha={cfg.params.alpha:g} "
                f"beta={cfg.params.beta}"),
        [("G(r)", "steelblue", "", pts)],
        x_label="log10 r",
        y_label="log10 G",
    )
    _write_text(os.path.join(cfg.out_dir, "profile.svg"), svg)
    return 0


def _cmd_kernel_check(cfg, jobs):
    profile = load_profile(cfg.params, cfg.cache_dir, cfg.profile_tol)
    nu = 1.0
    for region in cfg.regions:
        if isinstance(region, Exterior):
            nu = region.nu
            break
    rep = check_kernel_bounds(profile, nu=nu)
    header = ("nu,near_kind,near_lo,near_hi,far_kind,far_lo,far_hi,"
              "c_nu,sigma_exp,positive,r_mono")
    row = ",".join([
        repr(float(rep.nu)), rep.near_kind, repr(float(rep.near_lo)),
        repr(float(rep.near_hi)), rep.far_kind, repr(float(rep.far_lo)),
        repr(float(rep.far_hi)), repr(float(rep.c_nu)),
        repr(float(rep.sigma_exp)), str(rep.positive).lower(),
        repr(float(rep.r_mono)),
    ])
    _write_text(os.path.join(cfg.out_dir, "kernel-check.csv"),
                header + "\n" + row + "\n")
    ok = rep.positive and rep.near_lo > 0.0 and rep.far_lo > 0.0
    print(f"kernel-check: {'ok' if ok else 'FAIL'} "
          f"(near [{rep.near_lo:.4g}, {rep.near_hi:.4g}], "
          f"far [{rep.far_lo:.4g}, {rep.far_hi:.4g}], c_nu {rep.c_nu:.4g})")
    return 0 if ok else 2


def _require(cfg, forcing=False, regions=False):
    if forcing and cfg.forcing is None:
        raise ConfigError("this subcommand needs a [forcing] section with gamma")
    if regions and not cfg.regions:
        raise ConfigError("this subcommand needs at least one region "
                          "in a [regions] section")


def _cmd_simulate(cfg, jobs):
    _require(cfg, forcing=True, regions=True)
    profile = load_profile(cfg.params, cfg.cache_dir, cfg.profile_tol)
    failed = 0
    idx = 0
    for region in cfg.regions:
        for p in cfg.p_list:
            idx += 1
            stem = f"simulate-{idx:02d}-{_region_name(region)}-p{_p_name(p)}"
            try:
                series = norm_series(np.asarray(cfg.t_grid), p, region,
                                     cfg.forcing, profile, tol=cfg.norm_tol)
            except MemheatError as exc:
                failed += 1
                print(f"FAIL {stem}: {type(exc).__name__}: {exc}")
                continue
            _write_text(os.path.join(cfg.out_dir, stem + ".csv"),
                        series.to_csv())
            svg = _svg_loglog(
                _escape(f"{region_label(region)} p={_p_name(p)} "
                        f"gamma={cfg.forcing.gamma:g}"),
                [("measured norm", "steelblue", "",
                  list(zip(series.ts, series.values)))],
            )
            _write_text(os.path.join(cfg.out_dir, stem + ".svg"), svg)
    return 2 if failed else 0


def _verify_cell(task):
    (params, gamma, p, region, t_grid, slope_tol, spread_tol, norm_tol,
     cache_dir, profile_tol) = task
    profile = load_profile(params, cache_dir, profile_tol)
    return verify_rate(
        params, gamma, p, region, t_grid=np.asarray(t_grid),
        slope_tol=slope_tol, spread_tol=spread_tol, norm_tol=norm_tol,
        profile=profile,
    )


def _guide_curve(rep):
    """Predicted rate rendered over the measured window, anchored at its end."""
    ts = np.asarray(rep.series.ts)
    vals = np.asarray(rep.series.values)
    slope = rep.predicted_t_pow
    if isinstance(rep.region, Intermediate):
        slope += rep.region.omega * rep.predicted.prefactor_g_pow
    guide = (
        vals[-1]
        * (ts / ts[-1]) ** slope
        * (np.log(ts) / np.log(ts[-1])) ** rep.predicted_log_pow
    )
    return list(zip(ts.tolist(), guide.tolist()))


def _cmd_verify(cfg, jobs):
    _require(cfg, forcing=True, regions=True)
    tasks = [
        (cfg.params, cfg.forcing.gamma, p, region, cfg.t_grid,
         cfg.slope_tol, cfg.spread_tol, cfg.norm_tol, cfg.cache_dir,
         cfg.profile_tol)
        for region in cfg.regions
        for p in cfg.p_list
    ]
    if jobs > 1:
        # warm the cache so workers do not race on the build
        load_profile(cfg.params, cfg.cache_dir, cfg.profile_tol)
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(_verify_cell, tasks))
    else:
        profile = load_profile(cfg.params, cfg.cache_dir, cfg.profile_tol)
        reports = [
            verify_rate(t[0], t[1], t[2], t[3], t_grid=np.asarray(t[4]),
                        slope_tol=t[5], spread_tol=t[6], norm_tol=t[7],
                        profile=profile)
            for t in tasks
        ]

    _write_text(os.path.join(cfg.out_dir, "matrix.csv"), matrix_csv(reports))
    summary = matrix_summary(reports)
    _write_text(os.path.join(cfg.out_dir, "summary.txt"), summary)
    sys.stdout.write(summary)

    for idx, rep in enumerate(reports, start=1):
        if rep.series is None:
            continue
        stem = f"cell-{idx:02d}-{_region_name(rep.region)}-p{_p_name(rep.p)}"
        curves = [
            ("measured norm", "steelblue", "",
             list(zip(rep.series.ts, rep.series.values))),
            (_escape(f"predicted {rep.predicted.render()}"),
             "darkorange", "6,4", _guide_curve(rep)),
        ]
        svg = _svg_loglog(
            _escape(f"{region_label(rep.region)} p={_p_name(rep.p)} "
                    f"gamma={rep.gamma:g}: {rep.log_verdict}"),
            curves,
        )
        _write_text(os.path.join(cfg.out_dir, stem + ".svg"), svg)

    if any(r.status == "ok" and not r.passed for r in reports):
        return 2
    infeasible = any(r.status == "infeasible" for r in reports)
    matched = any(r.passed and r.log_verdict == "match" for r in reports)
    if infeasible or not matched:
        return 3
    return 0


def _cmd_ksz(cfg, jobs):
    _require(cfg, forcing=True)
    profile = load_profile(cfg.params, cfg.cache_dir, cfg.profile_tol)
    all_pass = True
    for p in cfg.p_list:
        chk = ksz_limit_check(
            cfg.params, cfg.forcing.gamma, p, t_grid=np.asarray(cfg.t_grid),
            forcing=cfg.forcing, norm_tol=cfg.norm_tol, profile=profile,
        )
        lines = ["t,deviation,ratio"]
        for t, d, r in zip(chk.ts, chk.deviations, chk.ratios):
            lines.append(f"{float(t)!r},{float(d)!r},{float(r)!r}")
        _write_text(os.path.join(cfg.out_dir, f"ksz-p{_p_name(p)}.csv"),
                    "\n".join(lines) + "\n")
        print(f"ksz p={_p_name(p)}: m_infinity={chk.m_infinity:g} "
              f"final_ratio={chk.final_ratio:.3g} "
              f"{'ok' if chk.passed else 'FAIL'}")
        all_pass = all_pass and chk.passed
    return 0 if all_pass else 2


_DISPATCH = {
    "exponents": _cmd_exponents,
    "profile": _cmd_profile,
    "kernel-check": _cmd_kernel_check,
    "simulate": _cmd_simulate,
    "verify": _cmd_verify,
    "ksz": _cmd_ksz,
}


# ---------------------------------------------------------------------------
# entry point

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _build_parser():
    parser = _Parser(
        prog="memheat",
        description="decay-rate experiments for heat equations with memory",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("exponents", "write the scaling-exponent table"),
        ("profile", "build (or load) the radial profile and dump it"),
        ("kernel-check", "check the profile against its envelope bounds"),
        ("simulate", "measure region norm series"),
        ("verify", "verify measured rates against predicted ones"),
        ("ksz", "check the long-time mass limit"),
    ):
        sp = sub.add_parser(name, help=text)
        sp.add_argument("--config", required=True, help="config file path")
        sp.add_argument("--out", default=None, help="output directory")
        sp.add_argument("--jobs", type=int, default=1,
                        help="worker processes for independent cells")
        sp.add_argument("--cache", default=None, help="profile cache directory")
    return parser


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = parse_config(args.config)
        if args.out is not None:
            cfg = replace(cfg, out_dir=args.out)
        if args.cache is not None:
            cfg = replace(cfg, cache_dir=args.cache)
        if args.jobs < 1:
            raise ConfigError("--jobs must be at least 1")
        return _DISPATCH[args.command](cfg, args.jobs)
    except ConfigError as exc:
        print(f"memheat: error: {exc}", file=sys.stderr)
        return 1
    except MemheatError as exc:
        print(f"memheat: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
