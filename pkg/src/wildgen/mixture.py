"""Gaussian mixture model over latent codes, fitted by EM.

Full covariances, log-space responsibilities, and a floor on covariance
eigenvalues keep the 15-component fit stable on a few dozen code
vectors.  The floor only touches a covariance when it is actually
thinner than reg_covar, so for healthy components the M-step stays the
exact maximizer and the log-likelihood never decreases.  Components are
seeded from a k-means partition of the codes so runs are reproducible.
"""

import numpy as np
from scipy.linalg import cholesky, solve_triangular
from scipy.special import logsumexp
from sklearn.base import BaseEstimator

from .metrics import KMeans
from .validation import as_float_array, check_random_state

_LOG_2PI = np.log(2.0 * np.pi)


def _floor_eigenvalues(cov, floor):
    """Clip covariance eigenvalues from below, keeping the matrix symmetric.

    A weighted sample covariance can be arbitrarily thin or exactly
    singular; raising its smallest eigenvalues to the floor keeps every
    component safely positive-definite.  When nothing is clipped the
    matrix is returned as computed, so the M-step remains the exact
    likelihood maximizer.
    """
    sym = 0.5 * (cov + cov.T)
    vals, vecs = np.linalg.eigh(sym)
    if vals[0] >= floor:
        return sym
    out = (vecs * np.maximum(vals, floor)) @ vecs.T
    return 0.5 * (out + out.T)


def _component_log_density(X, mean, cov):
    """log N(x; mean, cov) for all rows of X, via the Cholesky factor."""
    try:
        chol = cholesky(cov, lower=True)
    except np.linalg.LinAlgError as exc:
        raise ValueError(f"covariance is not positive definite: {exc}") from None
    dev = solve_triangular(chol, (X - mean).T, lower=True)
    maha = (dev**2).sum(axis=0)
    log_det = 2.0 * np.log(np.diag(chol)).sum()
    return -0.5 * (X.shape[1] * _LOG_2PI + log_det + maha)


class GaussianMixture(BaseEstimator):
    """Expectation-maximization fit of a full-covariance mixture.

    Parameters
    ----------
    n_components : number of Gaussians.
    reg_covar : smallest eigenvalue a component covariance may have;
        thinner covariances are clipped up to it after each M-step.
    tol : stop once the per-fit log-likelihood improves by less than this.
    max_iter : EM iteration cap.
    random_state : seed for the k-means initialisation.
    """

    def __init__(self, n_components=15, reg_covar=1e-4, tol=1e-7, max_iter=500,
                 random_state=0):
        self.n_components = n_components
        self.reg_covar = reg_covar
        self.tol = tol
        self.max_iter = max_iter
        self.random_state = random_state

    def _initialize(self, X):
        n, d = X.shape
        km = KMeans(n_clusters=self.n_components, random_state=self.random_state).fit(X)
        labels = km.labels_
        weights = np.empty(self.n_components)
        means = np.empty((self.n_components, d))
        covs = np.empty((self.n_components, d, d))
        global_cov = np.cov(X.T, bias=True).reshape(d, d)
        for j in range(self.n_components):
            members = X[labels == j]
            weights[j] = max(len(members), 1) / n
            if len(members):
                means[j] = members.mean(axis=0)
                raw = np.cov(members.T, bias=True).reshape(d, d)
            else:
                means[j] = X.mean(axis=0)
                raw = global_cov
            covs[j] = _floor_eigenvalues(raw, self.reg_covar)
        weights /= weights.sum()
        return weights, means, covs

    def _log_prob(self, X, weights, means, covs):
        """Weighted log densities, shape (n, k)."""
        lp = np.empty((len(X), self.n_components))
        for j in range(self.n_components):
            lp[:, j] = _component_log_density(X, means[j], covs[j])
        with np.errstate(divide="ignore"):
            return lp + np.log(weights)[None, :]

    def _e_step(self, X, weights, means, covs):
        lp = self._log_prob(X, weights, means, covs)
        norm = logsumexp(lp, axis=1)
        log_resp = lp - norm[:, None]
        if not np.all(np.isfinite(log_resp)):
            raise ValueError("non-finite responsibility during EM")
        return log_resp, float(norm.sum())

    def _m_step(self, X, log_resp):
        n, d = X.shape
        resp = np.exp(log_resp)
        nk = resp.sum(axis=0)
        weights = nk / n
        safe_nk = nk + 1e-12
        means = (resp.T @ X) / safe_nk[:, None]
        covs = np.empty((self.n_components, d, d))
        for j in range(self.n_components):
            dev = X - means[j]
            raw = (resp[:, j][:, None] * dev).T @ dev / safe_nk[j]
            covs[j] = _floor_eigenvalues(raw, self.reg_covar)
        return weights, means, covs

    def fit(self, X, y=None):
        X = as_float_array(X, "X")
        if X.ndim != 2:
            raise ValueError(f"X must be 2-d, got shape {X.shape}")
        n = len(X)
        if self.n_components < 1:
            raise ValueError(f"n_components must be positive, got {self.n_components}")
        if n < self.n_components:
            raise ValueError(
                f"n_components {self.n_components} exceeds number of samples {n}"
            )
        if self.reg_covar < 0 or not np.isfinite(self.reg_covar):
            raise ValueError(f"reg_covar must be non-negative, got {self.reg_covar}")
        weights, means, covs = self._initialize(X)
        history = []
        prev = None
        converged = False
        for _ in range(self.max_iter):
            log_resp, ll = self._e_step(X, weights, means, covs)
            history.append(ll)
            if prev is not None and ll - prev < self.tol:
                converged = True
                break
            prev = ll
            weights, means, covs = self._m_step(X, log_resp)
        self.weights_ = weights
        self.means_ = means
        self.covariances_ = covs
        self.log_likelihood_ = history[-1]
        self.ll_history_ = np.array(history)
        self.converged_ = converged
        self.n_iter_ = len(history)
        return self

    def _check_fitted(self):
        if not hasattr(self, "weights_"):
            raise ValueError("GaussianMixture is not fitted; call fit() first")

    def log_likelihood(self, X):
        """Total log-likelihood of X under the fitted mixture."""
        self._check_fitted()
        X = as_float_array(X, "X")
        lp = self._log_prob(X, self.weights_, self.means_, self.covariances_)
        return float(logsumexp(lp, axis=1).sum())

    def predict_proba(self, X):
        """Responsibilities, one row per sample summing to one."""
        self._check_fitted()
        X = as_float_array(X, "X")
        log_resp, _ = self._e_step(X, self.weights_, self.means_, self.covariances_)
        return np.exp(log_resp)

    def sample(self, n_samples, random_state=None):
        """Draw rows from the fitted mixture.

        Components are chosen by weight, then displaced samples come from
        each component's Cholesky factor.  Deterministic given the rng.
        """
        self._check_fitted()
        if n_samples < 1:
            raise ValueError(f"n_samples must be positive, got {n_samples}")
        rng = check_random_state(random_state)
        weights = self.weights_ / self.weights_.sum()
        comps = rng.choice(self.n_components, size=n_samples, p=weights)
        d = self.means_.shape[1]
        chols = np.empty((self.n_components, d, d))
        for j in range(self.n_components):
            try:
                chols[j] = cholesky(self.covariances_[j], lower=True)
            except np.linalg.LinAlgError as exc:
                raise ValueError(
                    f"covariance of component {j} is not positive definite: {exc}"
                ) from None
        eps = rng.standard_normal((n_samples, d))
        return self.means_[comps] + np.einsum("nij,nj->ni", chols[comps], eps)
