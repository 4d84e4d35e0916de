"""Special functions underlying the kernel: Mittag-Leffler on the negative
axis, the gamma function, and Bessel J of the low orders used by the radial
Fourier inversions.
"""
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _backend
from .errors import DomainError, UnsupportedOrderError

__all__ = ["MlParams", "mittag_leffler", "gamma_fn", "bessel_j", "bessel_j0_zeros"]

SUPPORTED_BESSEL_ORDERS = (-0.5, 0.0, 0.5, 1.0, 1.5)


@dataclass(frozen=True)
class MlParams:
    """Order pair for the two-parameter Mittag-Leffler function.

    alpha_ml must lie in (0, 1], beta_ml must be positive.
    """

    alpha_ml: float
    beta_ml: float

    def __post_init__(self):
        if not (0.0 < self.alpha_ml <= 1.0):
            raise DomainError(f"alpha_ml must be in (0, 1], got {self.alpha_ml}")
        if not self.beta_ml > 0.0:
            raise DomainError(f"beta_ml must be positive, got {self.beta_ml}")


def mittag_leffler(params, x):
    """E_{alpha,beta}(x) for x <= 0 (scalar or array).

    Raises DomainError for arguments on the positive axis; the growth regime
    there is deliberately unsupported.
    """
    if not isinstance(params, MlParams):
        raise TypeError("params must be MlParams")
    arr = np.asarray(x, dtype=np.float64)
    if arr.size and np.max(arr) > 0.0:
        raise DomainError("mittag_leffler is restricted to arguments x <= 0")
    if arr.size and not np.all(np.isfinite(arr)):
        raise DomainError("mittag_leffler requires finite arguments")
    vals = _backend.ml_neg(params.alpha_ml, params.beta_ml, -arr)
    if np.isscalar(x) or arr.ndim == 0:
        return float(vals)
    return vals


def ml_recip_gamma(w):
    """1/Gamma(w) on the real line, exactly zero at the poles.

    The sine factor in the reflection formula is computed after argument
    reduction so values within rounding of a nonpositive integer give 0
    rather than ~1e-16 residue.
    """
    if w > 0.5:
        return math.exp(-math.lgamma(w))
    n = round(w)
    frac = w - n
    if frac == 0.0:
        return 0.0
    s = math.sin(math.pi * frac) * (-1.0 if n % 2 else 1.0)
    return s / math.pi * math.exp(math.lgamma(1.0 - w))


def ml_asym_coefficients(params, kmax):
    """Coefficients a_k of the large-argument expansion.

    E_{alpha,beta}(-x) ~ sum_{k>=1} a_k x^{-k} with
    a_k = (-1)^{k+1} / Gamma(beta - alpha k); a_0 is set to zero.
    """
    if not isinstance(params, MlParams):
        raise TypeError("params must be MlParams")
    out = np.zeros(kmax + 1)
    for k in range(1, kmax + 1):
        out[k] = (-1.0) ** (k + 1) * ml_recip_gamma(
            params.beta_ml - params.alpha_ml * k
        )
    return out


def gamma_fn(x):
    """Gamma function on the positive real axis (scalar or array)."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.size and (np.min(arr) <= 0.0 or not np.all(np.isfinite(arr))):
        raise DomainError("gamma_fn requires finite x > 0")
    vec = np.vectorize(math.gamma, otypes=[np.float64])
    vals = vec(arr) if arr.size else arr
    if np.isscalar(x) or arr.ndim == 0:
        return float(vals)
    return vals


# ---------------------------------------------------------------------------
# Bessel J for orders {-1/2, 0, 1/2, 1, 3/2}

_BESSEL_SERIES_MAX = 12.0
_HANKEL_KMAX = 14


def _j_series(nu, x):
    # ascending series sum_m (-1)^m (x/2)^{2m+nu} / (m! Gamma(m+nu+1))
    half = 0.5 * x
    out = np.zeros_like(x)
    term = np.power(half, nu) / math.gamma(nu + 1.0)
    m = 0
    out += term
    h2 = half * half
    while m < 60:
        m += 1
        term = term * (-h2) / (m * (m + nu))
        out += term
        if np.all(np.abs(term) <= 1e-18 * (np.abs(out) + 1e-30)):
            break
    return out


def _j_asym(nu, x):
    # Hankel expansion with adaptive (min-term) truncation
    mu = 4.0 * nu * nu
    inv8x = 1.0 / (8.0 * x)
    p = np.ones_like(x)
    q = np.zeros_like(x)
    term = np.ones_like(x)
    prev_mag = np.full_like(x, np.inf)
    active = np.ones(x.shape, dtype=bool)
    for k in range(1, _HANKEL_KMAX + 1):
        term = term * (mu - (2.0 * k - 1.0) ** 2) / k * inv8x
        mag = np.abs(term)
        stop = active & (mag >= prev_mag)
        active &= ~stop
        if k % 4 == 1:
            q = np.where(active, q + term, q)
        elif k % 4 == 2:
            p = np.where(active, p - term, p)
        elif k % 4 == 3:
            q = np.where(active, q - term, q)
        else:
            p = np.where(active, p + term, p)
        prev_mag = np.where(active, mag, prev_mag)
    chi = x - (0.5 * nu + 0.25) * math.pi
    amp = np.sqrt(2.0 / (math.pi * x))
    return amp * (p * np.cos(chi) - q * np.sin(chi))


def _j_halfint(nu, x):
    # closed forms via sin/cos; guard the removable singularity at 0
    tiny = x < 1e-8
    safe = np.where(tiny, 1.0, x)
    amp = np.sqrt(2.0 / (math.pi * safe))
    if nu == -0.5:
        vals = amp * np.cos(safe)
        return np.where(tiny, np.sqrt(2.0 / (math.pi * np.maximum(x, 1e-300))), vals)
    if nu == 0.5:
        vals = amp * np.sin(safe)
        series = np.sqrt(2.0 / math.pi) * np.sqrt(np.maximum(x, 0.0)) * (1.0 - x * x / 6.0)
        return np.where(x < 1e-4, series, vals)
    # nu == 1.5
    vals = amp * (np.sin(safe) / safe - np.cos(safe))
    series = (
        np.sqrt(2.0 / math.pi)
        * np.power(np.maximum(x, 0.0), 1.5)
        / 3.0
        * (1.0 - x * x / 10.0)
    )
    return np.where(x < 1e-3, series, vals)


def bessel_j(order, x):
    """Bessel function of the first kind for the supported low orders.

    Orders outside {-1/2, 0, 1/2, 1, 3/2} raise UnsupportedOrderError.
    Arguments must satisfy x >= 0 (x > 0 for order -1/2).
    """
    nu = float(order)
    if nu not in SUPPORTED_BESSEL_ORDERS:
        raise UnsupportedOrderError(
            f"order {order} not in supported set {SUPPORTED_BESSEL_ORDERS}"
        )
    arr = np.asarray(x, dtype=np.float64)
    if arr.size and (np.min(arr) < 0.0 or not np.all(np.isfinite(arr))):
        raise DomainError("bessel_j requires finite x >= 0")
    if nu == -0.5 and arr.size and np.min(arr) <= 0.0:
        raise DomainError("order -1/2 requires x > 0")

    flat = arr.ravel()
    if nu in (-0.5, 0.5, 1.5):
        vals = _j_halfint(nu, flat)
    else:
        vals = np.empty_like(flat)
        small = flat <= _BESSEL_SERIES_MAX
        if np.any(small):
            vals[small] = _j_series(nu, flat[small])
        if np.any(~small):
            vals[~small] = _j_asym(nu, flat[~small])
    vals = vals.reshape(arr.shape)
    if np.isscalar(x) or arr.ndim == 0:
        return float(vals)
    return vals


@lru_cache(maxsize=32)
def bessel_j0_zeros(count):
    """First `count` positive zeros of J_0, via McMahon plus Newton steps."""
    zeros = []
    for k in range(1, count + 1):
        a = (k - 0.25) * math.pi
        z = a + 1.0 / (8.0 * a) - 31.0 / (384.0 * a ** 3)
        for _ in range(4):
            f = bessel_j(0.0, z)
            fp = -bessel_j(1.0, z)
            step = f / fp
            z -= step
            if abs(step) < 1e-14 * z:
                break
        zeros.append(z)
    return tuple(zeros)


def backend_name():
    """Which evaluation core is active ('compiled' or 'python')."""
    return _backend.backend_name()
