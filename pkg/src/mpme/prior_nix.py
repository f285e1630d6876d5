"""Normal-inverse-chi-squared (NIX) prior: update, marginal likelihood,
learning, and MAP estimation.

The NIX prior on one population,

.. math::

    \\mu \\mid \\sigma^2 \\sim \\mathcal{N}(\\mu_0, \\sigma^2/\\kappa_0),
    \\qquad
    \\sigma^2 \\sim \\chi^{-2}(\\nu_0, \\sigma_0^2),

is conjugate to Gaussian sampling, so both the posterior and the marginal
likelihood of the sufficient statistics are available in closed form.
``kappa0`` and ``nu0`` act as effective pseudo-sample counts added to each
population's mean and variance information.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np
from scipy import special as _sp

from .core import (
    DataError,
    Method,
    MomentEstimate,
    OptimizationError,
    SufficientStats,
)
from .optim import OptimConfig, OptimResult, maximize

__all__ = [
    "NixHyperparams",
    "NixPosterior",
    "VarianceMode",
    "nix_posterior_update",
    "nix_log_marginal_likelihood",
    "learn_nix",
    "nix_map",
]

_LOG_PI = math.log(math.pi)


@dataclass(frozen=True)
class NixHyperparams:
    """Prior hyperparameters (mu0, kappa0, nu0, sigma0_sq)."""

    mu0: float
    kappa0: float
    nu0: float
    sigma0_sq: float

    def __post_init__(self):
        if not math.isfinite(self.mu0):
            raise DataError(f"mu0 = {self.mu0!r}, need finite")
        for name in ("kappa0", "nu0", "sigma0_sq"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise DataError(f"{name} = {v!r}, need finite > 0")


@dataclass(frozen=True)
class NixPosterior:
    """Posterior NIX parameters after absorbing one population's data."""

    kappa_n: float
    mu_n: float
    nu_n: float
    sigma_n_sq: float


class VarianceMode(Enum):
    BIASED = "biased"
    UNBIASED = "unbiased"


def nix_posterior_update(stats: SufficientStats, hyper: NixHyperparams) -> NixPosterior:
    """Conjugate update of the NIX prior with one population's statistics.

    The posterior mean interpolates the prior mean and the sample mean
    with weights kappa0 and n; the posterior sum of squares collects the
    prior pseudo-scatter, the within-sample scatter, and a between term
    from the prior-mean/sample-mean discrepancy.
    """
    n, xbar, s = stats.n, stats.mean, stats.var_unbiased
    kappa_n = hyper.kappa0 + n
    mu_n = (hyper.kappa0 * hyper.mu0 + n * xbar) / kappa_n
    nu_n = hyper.nu0 + n
    scatter = (
        hyper.nu0 * hyper.sigma0_sq
        + (n - 1) * s
        + hyper.kappa0 * n * (hyper.mu0 - xbar) ** 2 / kappa_n
    )
    return NixPosterior(kappa_n=kappa_n, mu_n=mu_n, nu_n=nu_n, sigma_n_sq=scatter / nu_n)


def _stats_arrays(stats_list: Sequence[SufficientStats]):
    if len(stats_list) == 0:
        raise DataError("need at least one population")
    n = np.array([s.n for s in stats_list], dtype=float)
    xbar = np.array([s.mean for s in stats_list])
    var = np.array([s.var_unbiased for s in stats_list])
    return n, xbar, var


def _nix_log_marginal(n, xbar, var, mu0, kappa0, nu0, sigma0_sq) -> float:
    """Sum over populations of the closed-form log marginal likelihood.

    Algebraically equal to

        lgamma(nu_n/2) - lgamma(nu0/2) + (1/2) log(kappa0/kappa_n)
        + (nu0/2) log(nu0 sigma0_sq) - (nu_n/2) log(nu_n sigma_n_sq)
        - (n/2) log pi,

    but arranged so that no term multiplies a large hyperparameter by a
    near-cancelling logarithm: the lgamma difference goes through betaln
    and the (nu0/2) log ratio through log1p.  This keeps the value exact
    in the flat large-kappa0 / large-nu0 regime the optimizer explores.
    """
    prior_ss = nu0 * sigma0_sq
    half_n = 0.5 * n
    between = n * (mu0 - xbar) ** 2 / (1.0 + n / kappa0)
    a = (n - 1.0) * var + between
    # prior_ss can underflow to 0 while the optimizer probes the
    # sigma0_sq -> 0 corner; the resulting -inf (or NaN at a = 0) is the
    # honest value there and is handled by the caller.
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = (
            _sp.gammaln(half_n)
            - _sp.betaln(0.5 * nu0, half_n)
            - 0.5 * np.log1p(n / kappa0)
            - 0.5 * nu0 * np.log1p(a / prior_ss)
            - half_n * np.log(prior_ss + a)
            - half_n * _LOG_PI
        )
    return float(np.sum(terms))


def nix_log_marginal_likelihood(
    stats_list: Sequence[SufficientStats], hyper: NixHyperparams
) -> float:
    """Log marginal likelihood of all populations under a NIX prior.

    Factorizes over populations; each term integrates the Gaussian
    likelihood against the prior in closed form.
    """
    n, xbar, var = _stats_arrays(stats_list)
    return _nix_log_marginal(
        n, xbar, var, hyper.mu0, hyper.kappa0, hyper.nu0, hyper.sigma0_sq
    )


_LOG_CLIP = 700.0


def _hyper_from_point(z) -> NixHyperparams:
    return NixHyperparams(
        mu0=float(z[0]),
        kappa0=float(np.exp(np.clip(z[1], -_LOG_CLIP, _LOG_CLIP))),
        nu0=float(np.exp(np.clip(z[2], -_LOG_CLIP, _LOG_CLIP))),
        sigma0_sq=float(np.exp(np.clip(z[3], -_LOG_CLIP, _LOG_CLIP))),
    )


def learn_nix(
    stats_list: Sequence[SufficientStats],
    optim_cfg: OptimConfig | None = None,
) -> NixHyperparams:
    """Learn NIX hyperparameters by type-II maximum likelihood.

    Maximizes the marginal likelihood over (mu0, log kappa0, log nu0,
    log sigma0_sq); the log transforms enforce positivity.  Starts from
    mu0 = mean of sample means, sigma0_sq = mean of sample variances,
    kappa0 = nu0 = 1.

    Raises
    ------
    OptimizationError
        If the optimizer fails to converge; carries the best point found
        and the objective trace.
    """
    if len(stats_list) < 2:
        raise DataError("learn_nix needs at least 2 populations")
    n, xbar, var = _stats_arrays(stats_list)

    def objective(z):
        kappa0 = math.exp(min(max(z[1], -_LOG_CLIP), _LOG_CLIP))
        nu0 = math.exp(min(max(z[2], -_LOG_CLIP), _LOG_CLIP))
        sigma0_sq = math.exp(min(max(z[3], -_LOG_CLIP), _LOG_CLIP))
        return _nix_log_marginal(n, xbar, var, z[0], kappa0, nu0, sigma0_sq)

    mu0_init = float(np.mean(xbar))
    s0_init = float(np.mean(var))
    if s0_init <= 0.0:
        # All-constant data carries no variance information; start from a
        # scale-appropriate floor instead of log(0).
        s0_init = 1e-12 * max(1.0, mu0_init * mu0_init)
    init = [mu0_init, 0.0, 0.0, math.log(s0_init)]
    result = maximize(objective, init, optim_cfg or OptimConfig())
    if not result.converged:
        raise OptimizationError(
            "learn_nix did not converge",
            best_point=result.point,
            best_objective=result.objective,
            trace=result.trace,
        )
    return _hyper_from_point(result.point)


def nix_map(
    stats: SufficientStats,
    hyper: NixHyperparams,
    variance_mode: VarianceMode = VarianceMode.BIASED,
) -> MomentEstimate:
    """MAP estimate of one population's moments under a NIX prior.

    The mean estimate is the posterior mean ``mu_n``.  The variance
    estimate divides the posterior scatter ``nu_n * sigma_n_sq`` by
    ``nu_n + 3`` (joint posterior mode) or, for the unbiased variant, by
    ``nu_n - 1``.

    Raises
    ------
    DataError
        For the unbiased variant when ``nu_n <= 1`` (cannot occur for
        valid stats with n >= 2, but guarded regardless).
    """
    post = nix_posterior_update(stats, hyper)
    scatter = post.nu_n * post.sigma_n_sq
    if variance_mode is VarianceMode.BIASED:
        return MomentEstimate(
            mu=post.mu_n, sigma_sq=scatter / (post.nu_n + 3.0), method=Method.MPME_NIX
        )
    if variance_mode is VarianceMode.UNBIASED:
        if post.nu_n <= 1.0:
            raise DataError(
                f"unbiased variance needs nu_n > 1, got nu_n = {post.nu_n}"
            )
        return MomentEstimate(
            mu=post.mu_n,
            sigma_sq=scatter / (post.nu_n - 1.0),
            method=Method.MPME_NIX_UNBIASED,
        )
    raise DataError(f"unknown variance mode {variance_mode!r}")
