import math

import numpy as np
import pytest

from mpme.core import DataError, NumericalError, SufficientStats
from mpme.prior_nix import NixHyperparams, nix_log_marginal_likelihood
from mpme.prior_uni import UniHyperparams, uni_log_marginal_likelihood
from mpme.verify import (
    SUITES,
    SuiteResult,
    grid_map_argmax,
    likelihood_windows,
    nix_posterior_windows,
    nix_prior_density,
    numeric_marginal,
    run_suite,
    suite_correlation,
    suite_map_argmax,
    suite_nix_likelihood,
    suite_uni_likelihood,
    uni_log_marginal_via_q,
)


def _stats(n, mean, var):
    return SufficientStats(n=n, mean=mean, var_unbiased=var)


def test_numeric_marginal_matches_nix_closed_form():
    stats = _stats(5, 1.0, 0.8)
    hyper = NixHyperparams(mu0=0.5, kappa0=2.0, nu0=3.0, sigma0_sq=1.5)
    closed = math.exp(nix_log_marginal_likelihood([stats], hyper))
    mu_w, s_w = nix_posterior_windows(stats, hyper)
    oracle = numeric_marginal(stats, nix_prior_density(hyper), mu_w, s_w, 2000)
    assert oracle == pytest.approx(closed, rel=1e-7)


def test_numeric_marginal_converges_with_nodes():
    stats = _stats(5, 1.0, 0.8)
    hyper = NixHyperparams(mu0=0.5, kappa0=2.0, nu0=3.0, sigma0_sq=1.5)
    closed = math.exp(nix_log_marginal_likelihood([stats], hyper))
    mu_w, s_w = nix_posterior_windows(stats, hyper)
    coarse = abs(numeric_marginal(stats, nix_prior_density(hyper), mu_w, s_w, 250) - closed)
    fine = abs(numeric_marginal(stats, nix_prior_density(hyper), mu_w, s_w, 2000) - closed)
    assert fine < coarse


def test_numeric_marginal_validation():
    stats = _stats(5, 1.0, 0.8)
    flat = lambda mu, s2: np.ones_like(mu + s2)
    with pytest.raises(DataError):
        numeric_marginal(stats, flat, (0.0, 1.0), (0.5, 1.5), nodes=1)
    with pytest.raises(DataError):
        numeric_marginal(stats, flat, (1.0, 0.0), (0.5, 1.5))
    with pytest.raises(DataError):
        numeric_marginal(stats, flat, (0.0, 1.0), (-0.5, 1.5))
    with pytest.raises(NumericalError):
        numeric_marginal(
            stats, lambda mu, s2: np.full_like(mu + s2, np.inf), (0.0, 1.0), (0.5, 1.5)
        )


def test_grid_map_argmax_finds_interior_peak():
    stats = _stats(5, 1.0, 0.8)

    def log_post(mu, s2):
        return -((mu - 0.7) ** 2) - (np.log(s2) - math.log(1.3)) ** 2

    mu_g, s2_g = grid_map_argmax(stats, log_post, (0.0, 2.0), (0.5, 3.0), nodes=2000)
    assert mu_g == pytest.approx(0.7, abs=2.0 / 1999)
    assert s2_g == pytest.approx(1.3, rel=2.0 * math.log(6.0) / 1999)


def test_grid_map_argmax_flat_tie_breaks_to_first_point():
    stats = _stats(5, 1.0, 0.8)
    mu_g, s2_g = grid_map_argmax(
        stats, lambda mu, s2: np.zeros(np.broadcast(mu, s2).shape), (0.0, 2.0), (0.5, 3.0), nodes=101
    )
    assert mu_g == 0.0
    assert s2_g == 0.5


def test_grid_map_argmax_boundary_max_rejected():
    stats = _stats(5, 1.0, 0.8)
    with pytest.raises(NumericalError, match="window too small"):
        grid_map_argmax(
            stats, lambda mu, s2: mu + 0.0 * s2, (0.0, 2.0), (0.5, 3.0), nodes=101
        )


def test_grid_map_argmax_rejects_nan_and_bad_nodes():
    stats = _stats(5, 1.0, 0.8)
    with pytest.raises(NumericalError):
        grid_map_argmax(
            stats,
            lambda mu, s2: np.full(np.broadcast(mu, s2).shape, np.nan),
            (0.0, 2.0),
            (0.5, 3.0),
        )
    with pytest.raises(DataError):
        grid_map_argmax(stats, lambda mu, s2: mu, (0.0, 2.0), (0.5, 3.0), nodes=2)


def test_likelihood_windows_hand_computed():
    (m_lo, m_hi), (v_lo, v_hi) = likelihood_windows(_stats(5, 2.0, 1.0), k=10.0)
    se = math.sqrt(1.0 / 5.0)
    g = math.exp(10.0 * math.sqrt(0.5))
    assert m_lo == pytest.approx(2.0 - 10 * se, rel=1e-14)
    assert m_hi == pytest.approx(2.0 + 10 * se, rel=1e-14)
    assert v_lo == pytest.approx(1.0 / g, rel=1e-14)
    assert v_hi == pytest.approx(g, rel=1e-14)
    with pytest.raises(DataError):
        likelihood_windows(_stats(5, 2.0, 0.0))


def test_nix_posterior_windows_cover_posterior_center():
    stats = _stats(5, 1.0, 0.8)
    hyper = NixHyperparams(mu0=0.5, kappa0=2.0, nu0=3.0, sigma0_sq=1.5)
    (m_lo, m_hi), (v_lo, v_hi) = nix_posterior_windows(stats, hyper)
    from mpme.prior_nix import nix_posterior_update

    post = nix_posterior_update(stats, hyper)
    assert m_lo < post.mu_n < m_hi
    assert v_lo < post.sigma_n_sq < v_hi


def test_q_decomposition_agrees_with_production_quadrature():
    stats = [_stats(5, 10.1, 1.2)]
    hyper = UniHyperparams(a=9.5, b=10.5, c=0.95, d=1.05)
    ll = uni_log_marginal_likelihood(stats, hyper)
    ll_q = uni_log_marginal_via_q(stats, hyper)
    assert ll == pytest.approx(ll_q, abs=1e-7)


def test_q_decomposition_validation():
    hyper = UniHyperparams(a=9.5, b=10.5, c=0.95, d=1.05)
    with pytest.raises(DataError, match="n >= 4"):
        uni_log_marginal_via_q([_stats(3, 10.0, 1.0)], hyper)
    with pytest.raises(DataError, match="positive sample variance"):
        uni_log_marginal_via_q([_stats(5, 10.0, 0.0)], hyper)


def test_suite_nix_likelihood_reduced():
    res = suite_nix_likelihood(cases=3)
    assert isinstance(res, SuiteResult)
    assert res.passed and res.cases == 3
    assert res.worst <= res.tolerance == 1e-6
    assert len(res.lines) == 3


def test_suite_uni_likelihood_reduced():
    res = suite_uni_likelihood(cases=2)
    assert res.passed and res.cases == 2
    assert res.worst <= res.tolerance == 1e-5


def test_suite_map_argmax_reduced():
    res = suite_map_argmax(cases=2)
    # Each case checks both prior families.
    assert res.passed and res.cases == 4
    assert res.worst <= res.tolerance == 1.0


def test_suite_correlation_reduced():
    res = suite_correlation(draws=200_000, tol=2e-2)
    assert res.passed and res.cases == 3


def test_run_suite_dispatch():
    assert set(SUITES) == {"nix-likelihood", "uni-likelihood", "map-argmax", "correlation"}
    res = run_suite("nix-likelihood", cases=2)
    assert res.name == "nix-likelihood" and res.cases == 2
    res = run_suite("correlation", cases=100_000)
    assert res.name == "correlation" and res.cases == 3
    with pytest.raises(DataError, match="unknown verification suite"):
        run_suite("nope")
