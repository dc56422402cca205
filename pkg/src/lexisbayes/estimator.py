"""Scikit-learn style front end."""
from __future__ import annotations

import numpy as np
from scipy.special import gammaln
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .diagnostics import convergence_report
from .lattice import MortalityData
from .model import Hyperparameters, baseline_rate
from .sampler import SamplerConfig, posterior_means, run_chains
from .surfaces import ClusterThresholds, decompose, precision_ratio
from .validation import check_lexis_arrays, check_mortality_data, check_seed


class LexisMortalitySmoother(BaseEstimator):
    """Bayesian smooth + shock decomposition of a Lexis mortality surface.

    ``fit(X, y)`` takes exposures ``X`` and death counts ``y``, both
    ``n_years x n_ages``. After fitting, ``surfaces_`` holds the empirical,
    total, smooth and shock log-rate surfaces and ``precision_`` the
    precision ratio with its cluster label.

    Parameters
    ----------
    n_iter, burn_in, thin : int
        Chain length, discarded prefix and thinning of the retained part.
    n_chains : int
        Independent chains with seeds ``seed + chain_index``. Two or more
        enable the PSRF in ``convergence_``.
    random_state : int, Generator or None
        Master seed. ``None`` draws one from OS entropy (kept in ``seed_``).
    alpha_x, beta_x, alpha_z, beta_z : float
        Gamma hyperprior shape/rate of the two precisions.
    proposal_sd : float
        Initial random-walk scale for every knot.
    adapt : bool
        Tune per-knot scales during burn-in.
    parallel_sweeps : bool
        Use the four-colour parallel sweep (not bit-reproducible).
    year_origin, age_origin : int
        Calendar year / age of the first row / column.
    n_jobs : int or None
        Threads used for chains.
    """

    def __init__(self, n_iter=100_000, burn_in=70_000, thin=1, n_chains=1, random_state=None,
                 alpha_x=0.01, beta_x=0.01, alpha_z=0.01, beta_z=0.01, proposal_sd=0.1,
                 target_acceptance=(0.2, 0.3), adapt=True, parallel_sweeps=False, probe_knots=(),
                 year_origin=0, age_origin=0, cluster_thresholds=None, n_jobs=None):
        self.n_iter = n_iter
        self.burn_in = burn_in
        self.thin = thin
        self.n_chains = n_chains
        self.random_state = random_state
        self.alpha_x = alpha_x
        self.beta_x = beta_x
        self.alpha_z = alpha_z
        self.beta_z = beta_z
        self.proposal_sd = proposal_sd
        self.target_acceptance = target_acceptance
        self.adapt = adapt
        self.parallel_sweeps = parallel_sweeps
        self.probe_knots = probe_knots
        self.year_origin = year_origin
        self.age_origin = age_origin
        self.cluster_thresholds = cluster_thresholds
        self.n_jobs = n_jobs

    def _sampler_config(self, seed):
        return SamplerConfig(
            total_iterations=self.n_iter, burn_in=self.burn_in, thin=self.thin, seed=seed,
            hyper=Hyperparameters(self.alpha_x, self.beta_x, self.alpha_z, self.beta_z),
            proposal_sd_x=self.proposal_sd, proposal_sd_z=self.proposal_sd,
            target_acceptance=tuple(self.target_acceptance), adapt_during_burn_in=self.adapt,
            n_chains=self.n_chains, parallel_sweeps=self.parallel_sweeps,
            probe_knots=tuple(self.probe_knots),
        )

    def _as_data(self, X, y):
        if isinstance(X, MortalityData):
            if y is not None:
                raise TypeError("pass deaths inside MortalityData or as y, not both")
            return check_mortality_data(X)
        if y is None:
            raise TypeError("deaths (y) are required when X is an exposure array")
        return check_lexis_arrays(X, y, year_origin=self.year_origin, age_origin=self.age_origin)

    def fit(self, X, y=None):
        """Run the sampler.

        Parameters
        ----------
        X : array of shape (n_years, n_ages) or MortalityData
            Exposures (person-years), or a complete dataset.
        y : array of shape (n_years, n_ages), optional
            Death counts; omit when ``X`` is a :class:`MortalityData`.
        """
        data = self._as_data(X, y)
        self.seed_ = check_seed(self.random_state)
        config = self._sampler_config(self.seed_)
        self.data_ = data
        self.offset_ = baseline_rate(data)
        self.chains_ = run_chains(data, config, offset=self.offset_, max_workers=self.n_jobs)
        self.estimates_ = posterior_means(self.chains_, self.offset_)
        self.surfaces_ = decompose(self.estimates_, data)
        thresholds = self.cluster_thresholds or ClusterThresholds()
        self.precision_ = precision_ratio(self.estimates_.gamma_x_hat, self.estimates_.gamma_z_hat,
                                          thresholds)
        self.convergence_ = convergence_report(self.chains_)
        self.x_ = self.estimates_.x_hat
        self.z_ = self.estimates_.z_hat
        self.gamma_x_ = self.estimates_.gamma_x_hat
        self.gamma_z_ = self.estimates_.gamma_z_hat
        self.n_features_in_ = data.shape[1]
        return self

    def predict_rate(self):
        """Estimated force of mortality on the fitted lattice."""
        check_is_fitted(self, "estimates_")
        return self.estimates_.intensity

    def predict(self, X=None):
        """Expected deaths for exposures ``X`` (default: the training exposures)."""
        rate = self.predict_rate()
        if X is None:
            return rate * self.data_.exposures
        X = np.asarray(X, dtype=np.float64)
        if X.shape != rate.shape:
            raise ValueError(f"X has shape {X.shape}, expected {rate.shape}")
        return rate * X

    def transform(self, X=None):
        """Stacked log-scale surfaces ``[s_b, s_1, s_2]`` of shape (3, n_years, n_ages).

        Surfaces only exist on the fitted lattice, so ``X`` must be ``None``
        or the training exposures.
        """
        check_is_fitted(self, "surfaces_")
        if X is not None and np.asarray(X).shape != self.data_.shape:
            raise ValueError("transform is only defined on the fitted lattice")
        s = self.surfaces_
        return np.stack([s.s_b, s.s_1, s.s_2])

    def score(self, X, y):
        """Mean Poisson log-likelihood per knot of deaths ``y`` given exposures ``X``."""
        mean = self.predict(X)
        y = np.asarray(y, dtype=np.float64)
        live = mean > 0
        ll = np.where(live, y * np.log(np.where(live, mean, 1.0)) - mean - gammaln(y + 1), 0.0)
        return float(np.mean(ll))
