"""Core value types and sufficient statistics.

Every quantity the estimators consume is reduced to per-population
sufficient statistics ``(n, mean, var_unbiased)``; raw samples are only
needed once, at ingestion time.  All value types are immutable and
validate their invariants on construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence


class MpmeError(Exception):
    """Base class for all errors raised by this package."""


class DataError(MpmeError, ValueError):
    """Invalid input data or parameters."""


class NumericalError(MpmeError):
    """A numerical routine failed to produce a trustworthy result."""


class QuadratureError(NumericalError):
    """Adaptive quadrature did not converge within its subdivision budget.

    Carries the best estimate and its error bound so callers can decide
    whether the partial result is still useful.
    """

    def __init__(self, message: str, estimate=None, error_bound=None):
        super().__init__(message)
        self.estimate = estimate
        self.error_bound = error_bound


class OptimizationError(NumericalError):
    """The optimizer failed; carries the best point found and the trace."""

    def __init__(self, message: str, best_point=None, best_objective=None, trace=None):
        super().__init__(message)
        self.best_point = best_point
        self.best_objective = best_objective
        self.trace = trace


class DegeneratePriorError(OptimizationError):
    """Prior learning collapsed onto a degenerate (zero-width) prior."""


class Method(Enum):
    """Identifies which estimator produced a :class:`MomentEstimate`."""

    SAMPLE_EST = "sample"
    POOLED_MEAN = "pooled-mean"
    POOLED_VAR = "pooled-var"
    MPME_NIX = "mpme-nix"
    MPME_NIX_UNBIASED = "mpme-nix-unbiased"
    MPME_UNI = "mpme-uni"


def _check_finite(values: Iterable[float], what: str) -> None:
    for i, v in enumerate(values):
        if not math.isfinite(v):
            raise DataError(f"invalid datum: {what}[{i}] = {v!r} is not finite")


@dataclass(frozen=True)
class PopulationSample:
    """Raw measurements from one population.

    Parameters
    ----------
    id : str
        Caller-chosen identifier, unique within a dataset.
    values : tuple of float
        At least one finite measurement.
    """

    id: str
    values: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if not self.id:
            raise DataError("population id must be non-empty")
        if len(self.values) == 0:
            raise DataError(f"population {self.id!r} has no values")
        _check_finite(self.values, f"population {self.id!r}")


@dataclass(frozen=True)
class SufficientStats:
    """Sufficient statistics of one population: size, mean, unbiased variance."""

    n: int
    mean: float
    var_unbiased: float

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 2:
            raise DataError(f"insufficient sample: n = {self.n!r}, need n >= 2")
        if not math.isfinite(self.mean):
            raise DataError(f"invalid datum: mean = {self.mean!r}")
        if not (math.isfinite(self.var_unbiased) and self.var_unbiased >= 0.0):
            raise DataError(
                f"invalid datum: var_unbiased = {self.var_unbiased!r}, need >= 0"
            )


def sufficient_stats(sample: PopulationSample) -> SufficientStats:
    """Reduce a sample to its sufficient statistics.

    Uses two passes with exact (compensated) summation: the mean first,
    then squared deviations from it.  This keeps the variance accurate
    even when the spread is many orders of magnitude below the mean.

    Raises
    ------
    DataError
        If the sample has fewer than two values.
    """
    n = len(sample.values)
    if n < 2:
        raise DataError(
            f"insufficient sample: population {sample.id!r} has n = {n}, need n >= 2"
        )
    mean = math.fsum(sample.values) / n
    ss = math.fsum((v - mean) ** 2 for v in sample.values)
    return SufficientStats(n=n, mean=mean, var_unbiased=ss / (n - 1))


@dataclass(frozen=True)
class MomentEstimate:
    """An estimate of one population's mean and variance."""

    mu: float
    sigma_sq: float
    method: Method

    def __post_init__(self):
        if not math.isfinite(self.mu):
            raise DataError(f"invalid estimate: mu = {self.mu!r}")
        if not (math.isfinite(self.sigma_sq) and self.sigma_sq >= 0.0):
            raise DataError(f"invalid estimate: sigma_sq = {self.sigma_sq!r}, need >= 0")
        if not isinstance(self.method, Method):
            raise DataError(f"invalid estimate: method = {self.method!r}")


def _mean(xs: Sequence[float]) -> float:
    return math.fsum(xs) / len(xs)


@dataclass(frozen=True)
class ErrorReport:
    """Benchmark errors: mean-over-populations RMSE for mu and sigma^2.

    ``eps_mu`` and ``eps_sigma_sq`` must equal the mean of the
    corresponding per-population RMSE lists; this is validated to one
    part in 1e12 on construction.
    """

    eps_mu: float
    eps_sigma_sq: float
    per_population_mu_rmse: tuple[float, ...]
    per_population_var_rmse: tuple[float, ...]
    trials: int

    def __post_init__(self):
        object.__setattr__(
            self, "per_population_mu_rmse", tuple(self.per_population_mu_rmse)
        )
        object.__setattr__(
            self, "per_population_var_rmse", tuple(self.per_population_var_rmse)
        )
        if self.trials < 1:
            raise DataError(f"trials = {self.trials}, need >= 1")
        if len(self.per_population_mu_rmse) == 0 or len(
            self.per_population_mu_rmse
        ) != len(self.per_population_var_rmse):
            raise DataError("per-population RMSE lists must be non-empty, equal length")
        for name, eps, pp in (
            ("eps_mu", self.eps_mu, self.per_population_mu_rmse),
            ("eps_sigma_sq", self.eps_sigma_sq, self.per_population_var_rmse),
        ):
            _check_finite(pp, name)
            if any(v < 0 for v in pp):
                raise DataError(f"{name} per-population RMSE must be >= 0")
            m = _mean(pp)
            if abs(eps - m) > 1e-12 * max(abs(eps), abs(m), 1e-300):
                raise DataError(
                    f"{name} = {eps!r} does not equal the mean {m!r} of its "
                    f"per-population RMSE list"
                )

    @classmethod
    def from_per_population(
        cls,
        mu_rmse: Sequence[float],
        var_rmse: Sequence[float],
        trials: int,
    ) -> "ErrorReport":
        """Build a report, deriving the aggregate eps values from the lists."""
        return cls(
            eps_mu=_mean(mu_rmse),
            eps_sigma_sq=_mean(var_rmse),
            per_population_mu_rmse=tuple(mu_rmse),
            per_population_var_rmse=tuple(var_rmse),
            trials=trials,
        )
