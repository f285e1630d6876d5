"""Special functions and adaptive quadrature.

One adaptive Gauss-Kronrod routine serves every integral in the package;
infinite upper limits are mapped to [0, 1) with the substitution
``y = u / (1 - u)``.  The routine is vectorized: the integrand may return
one row per component (e.g. per population), and all components share the
same subdivision of the integration interval.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy import special as _sp

from .core import DataError, QuadratureError

__all__ = [
    "QuadratureConfig",
    "QuadResult",
    "integrate_adaptive",
    "log_gamma",
    "std_normal_cdf",
    "log_normal_cdf_diff",
    "owen_q",
    "scaled_inv_chi_sq_logpdf",
]


@dataclass(frozen=True)
class QuadratureConfig:
    """Tolerances and budget for adaptive quadrature.

    ``max_subdivisions`` caps the number of interval bisections; exceeding
    it raises :class:`~mpme.core.QuadratureError` carrying the best
    estimate and its error bound.
    """

    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    max_subdivisions: int = 200

    def __post_init__(self):
        if not (math.isfinite(self.rel_tol) and self.rel_tol > 0):
            raise DataError(f"rel_tol = {self.rel_tol!r}, need > 0")
        if not (math.isfinite(self.abs_tol) and self.abs_tol >= 0):
            raise DataError(f"abs_tol = {self.abs_tol!r}, need >= 0")
        if not isinstance(self.max_subdivisions, int) or self.max_subdivisions < 1:
            raise DataError(
                f"max_subdivisions = {self.max_subdivisions!r}, need integer >= 1"
            )


class QuadResult(NamedTuple):
    value: float
    error: float


# 15-point Kronrod extension of 7-point Gauss (nodes on [-1, 1], symmetric).
_XGK_HALF = (
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
)
_WGK_HALF = (
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
)
_WG_HALF = (
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
)

_XGK = np.array([-x for x in _XGK_HALF] + [x for x in reversed(_XGK_HALF[:-1])])
_WGK = np.array(list(_WGK_HALF) + list(reversed(_WGK_HALF[:-1])))
# Gauss nodes are the odd-indexed Kronrod nodes.
_GAUSS_IDX = np.arange(1, 15, 2)
_WG = np.array(list(_WG_HALF) + list(reversed(_WG_HALF[:-1])))

_DEFAULT_QUAD = QuadratureConfig()

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


def _gk15(f: Callable, a: np.ndarray, b: np.ndarray):
    """Evaluate the G7/K15 pair on a batch of intervals.

    Returns per-interval Kronrod estimates and |K15 - G7| error estimates,
    each of shape ``(components, intervals)``.
    """
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    x = mid[:, None] + half[:, None] * _XGK[None, :]
    y = np.asarray(f(x.reshape(-1)), dtype=float)
    if y.ndim == 1:
        y = y[None, :]
    y = y.reshape(y.shape[0], len(a), 15)
    if not np.all(np.isfinite(y)):
        raise QuadratureError("integrand returned a non-finite value")
    k15 = (y @ _WGK) * half
    g7 = (y[:, :, _GAUSS_IDX] @ _WG) * half
    return k15, np.abs(k15 - g7)


def integrate_adaptive(
    f: Callable,
    lo: float,
    hi: float,
    cfg: QuadratureConfig | None = None,
):
    """Adaptively integrate a vector-valued function over [lo, hi].

    Parameters
    ----------
    f : callable
        Maps a 1-d array of abscissae to integrand values, either shape
        ``(k,)`` for a scalar integrand or ``(components, k)``.  Every
        component is integrated over one shared, adaptively refined
        subdivision.
    lo, hi : float
        Finite integration limits, ``lo < hi``.
    cfg : QuadratureConfig, optional

    Returns
    -------
    value, error : ndarray of shape ``(components,)``
        Integral estimates and error bounds.  Convergence requires every
        component to satisfy ``error <= max(abs_tol, rel_tol * |value|)``.

    Raises
    ------
    QuadratureError
        If the subdivision budget is exhausted first; the exception
        carries the best estimate and its error bound.
    """
    cfg = cfg or _DEFAULT_QUAD
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
        raise DataError(f"invalid integration interval [{lo!r}, {hi!r}]")
    a = np.array([lo])
    b = np.array([hi])
    est, err = _gk15(f, a, b)
    splits_left = cfg.max_subdivisions
    width = hi - lo
    while True:
        total = est.sum(axis=1)
        total_err = err.sum(axis=1)
        tol = np.maximum(cfg.abs_tol, cfg.rel_tol * np.abs(total))
        pending = total_err > tol
        if not pending.any():
            return total, total_err
        # Split every interval whose error exceeds its width-proportional
        # share of the tolerance for some still-unconverged component.
        share = (b - a) / width
        split = (err[pending] > tol[pending, None] * share[None, :]).any(axis=0)
        if not split.any():
            split[np.argmax(err[pending].max(axis=0))] = True
        n_split = int(split.sum())
        if n_split > splits_left:
            raise QuadratureError(
                f"quadrature did not converge within "
                f"{cfg.max_subdivisions} subdivisions",
                estimate=total,
                error_bound=total_err,
            )
        splits_left -= n_split
        keep = ~split
        mid = 0.5 * (a[split] + b[split])
        new_a = np.concatenate([a[keep], a[split], mid])
        new_b = np.concatenate([b[keep], mid, b[split]])
        new_est, new_err = _gk15(f, new_a[len(a[keep]):], new_b[len(b[keep]):])
        est = np.concatenate([est[:, keep], new_est], axis=1)
        err = np.concatenate([err[:, keep], new_err], axis=1)
        a, b = new_a, new_b


def log_gamma(x: float) -> float:
    """Natural log of the gamma function for x > 0.

    Raises
    ------
    DataError
        If ``x`` is not a positive finite real (domain error).
    """
    if not (isinstance(x, (int, float)) and math.isfinite(x) and x > 0):
        raise DataError(f"domain error: log_gamma requires finite x > 0, got {x!r}")
    return math.lgamma(x)


def std_normal_cdf(x: float) -> float:
    """Standard normal CDF, accurate to ~1e-16 absolute over the real line."""
    return float(_sp.ndtr(x))


def log_normal_cdf_diff(lo, hi, width=None):
    """log(Phi(hi) - Phi(lo)) without cancellation, elementwise.

    Pairs lying in the upper tail are reflected to the lower tail where
    ``log_ndtr`` is accurate; the difference is then formed in log space.
    Returns -inf where ``hi <= lo``.

    Narrow intervals switch to a midpoint expansion,

        Phi(z + h/2) - Phi(z - h/2)
            = h phi(z) (1 + h^2 (z^2 - 1) / 24
                          + h^4 (z^4 - 6 z^2 + 3) / 1920 + ...),

    whenever h^2 (z^2 + 1) < 2.4e-7, where the truncation error is below
    1e-16.  The log-space difference degrades there: its inputs carry one
    ulp of absolute error each, so the relative error of the difference
    grows like 1e-16 / (h |z|), which for h ~ 1e-9 is loud enough that
    adaptive quadrature over these values never settles.

    ``width``, when given, is used as ``hi - lo`` in the expansion.  For
    interval endpoints formed as q*x - s and q*y - s the subtraction
    ``hi - lo`` inherits the independent rounding of both endpoints, a
    relative error of order 1e-16 / (hi - lo); a caller that knows
    ``x - y`` exactly can supply q*(x - y) and keep the expansion fully
    accurate however narrow the interval.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    flip = (lo + hi) > 0
    low = np.where(flip, -hi, lo)
    high = np.where(flip, -lo, hi)
    log_hi = _sp.log_ndtr(high)
    log_lo = _sp.log_ndtr(low)
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        out = log_hi + np.log1p(-np.exp(np.minimum(log_lo - log_hi, 0.0)))
        out = np.where(high <= low, -np.inf, out)
        h = high - low if width is None else np.broadcast_to(
            np.asarray(width, dtype=float), high.shape
        )
        zm = 0.5 * (high + low)
        zm_sq = zm * zm
        narrow = (h > 0) & (h * h * (zm_sq + 1.0) < 2.4e-7)
        series = h * h * (zm_sq - 1.0) / 24.0 + h**4 * (
            zm_sq * (zm_sq - 6.0) + 3.0
        ) / 1920.0
        taylor = -0.5 * zm_sq - _LOG_SQRT_2PI + np.log(h) + np.log1p(series)
        out = np.where(narrow, taylor, out)
        # log_ndtr(high) = -inf means even the larger CDF is an exact zero,
        # so the difference is too; the log-space subtraction above would
        # produce nan for these.
        out = np.where(np.isneginf(log_hi), -np.inf, out)
    if out.ndim == 0:
        return float(out)
    return out


def owen_q(f: int, t: float, delta: float, r: float, cfg: QuadratureConfig | None = None) -> QuadResult:
    """Integral of the normalized chi density against a shifted normal CDF.

    Computes

    .. math::

        Q_f(t, \\delta; 0, R) = \\int_0^R
            \\frac{\\sqrt{2\\pi}\\, y^{f-1} \\varphi(y)}
                 {\\Gamma(f/2)\\, 2^{(f-2)/2}}
            \\, \\Phi\\!\\left(\\frac{t y}{\\sqrt{f}} - \\delta\\right) dy,

    where the y-density integrates to one over (0, inf).  ``t`` may be
    +/-inf (the CDF factor saturates); ``r`` may be +inf, handled by the
    substitution ``y = u / (1 - u)``.

    Returns
    -------
    QuadResult
        The value together with the quadrature error estimate.
    """
    if not isinstance(f, (int, np.integer)) or f < 1:
        raise DataError(f"degrees of freedom f = {f!r}, need integer >= 1")
    if not (isinstance(delta, (int, float)) and math.isfinite(delta)):
        raise DataError(f"delta = {delta!r}, need finite real")
    if math.isnan(t):
        raise DataError("t must not be NaN")
    if not (r > 0):
        raise DataError(f"upper limit r = {r!r}, need > 0")
    log_norm = -_sp.gammaln(f / 2) - (f - 2) / 2 * math.log(2.0)
    sqrt_f = math.sqrt(f)

    def chi_part(y):
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            ll = np.where(y > 0, (f - 1) * np.log(y), -np.inf if f > 1 else 0.0)
            return ll - 0.5 * y * y + log_norm

    def cdf_part(y):
        with np.errstate(invalid="ignore", over="ignore"):
            arg = t * y / sqrt_f - delta
            # t = +/-inf saturates the CDF for every y > 0
            arg = np.where(np.isnan(arg), math.copysign(1, t) * np.inf, arg)
        return _sp.ndtr(arg)

    if math.isinf(r):
        def integrand(u):
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                y = u / (1.0 - u)
                ll = chi_part(y) - 2.0 * np.log1p(-u)
                return np.exp(ll) * cdf_part(y)
        lo, hi = 0.0, 1.0
    else:
        def integrand(y):
            return np.exp(chi_part(y)) * cdf_part(y)
        lo, hi = 0.0, float(r)

    value, err = integrate_adaptive(integrand, lo, hi, cfg)
    return QuadResult(float(value[0]), float(err[0]))


def scaled_inv_chi_sq_logpdf(sigma_sq, nu: float, sigma0_sq: float):
    """Log density of the scaled inverse chi-squared distribution.

    Parameters
    ----------
    sigma_sq : float or ndarray
        Evaluation points, all > 0.
    nu : float
        Degrees of freedom, > 0.
    sigma0_sq : float
        Scale, > 0.

    Notes
    -----
    The density is

    .. math::

        p(\\sigma^2) = \\frac{(\\nu \\sigma_0^2 / 2)^{\\nu/2}}{\\Gamma(\\nu/2)}
            \\, (\\sigma^2)^{-(1 + \\nu/2)}
            \\, e^{-\\nu \\sigma_0^2 / (2 \\sigma^2)},

    with mode at ``nu * sigma0_sq / (nu + 2)``.
    """
    if not (nu > 0 and math.isfinite(nu)):
        raise DataError(f"nu = {nu!r}, need finite > 0")
    if not (sigma0_sq > 0 and math.isfinite(sigma0_sq)):
        raise DataError(f"sigma0_sq = {sigma0_sq!r}, need finite > 0")
    x = np.asarray(sigma_sq, dtype=float)
    if not np.all(x > 0):
        raise DataError("sigma_sq must be > 0 everywhere")
    half_nu = 0.5 * nu
    out = (
        half_nu * math.log(half_nu * sigma0_sq)
        - _sp.gammaln(half_nu)
        - (half_nu + 1.0) * np.log(x)
        - half_nu * sigma0_sq / x
    )
    if out.ndim == 0:
        return float(out)
    return out
