"""Marginal distribution models.

Parametric families used by the simulation designs (normal, uniform,
beta, the Gumbel form ``F(x) = 1 - exp(-exp(x))``), the kernel-smoothed
empirical CDF used to build pseudo-observations, and the score helpers
for the beta-distributed latent success probability.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import betainc, betaincinv, betaln, digamma, ndtr, ndtri

from .exceptions import DegenerateDataError, DomainError, InsufficientDataError, ParameterError

LOG_PARAM_BOX = 10.0  # optimizer box for |log alpha|, |log beta|


def _check_prob(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if not np.all(np.isfinite(p)) or np.any(p <= 0.0) or np.any(p >= 1.0):
        raise DomainError("probability must lie strictly inside (0, 1)")
    return p


class Normal:
    """Normal(mu, sigma) margin."""

    def __init__(self, mu: float = 0.0, sigma: float = 1.0):
        if not np.isfinite(mu) or not np.isfinite(sigma) or sigma <= 0:
            raise ParameterError("Normal requires finite mu and sigma > 0")
        self.mu = float(mu)
        self.sigma = float(sigma)

    def cdf(self, x):
        return ndtr((np.asarray(x, dtype=float) - self.mu) / self.sigma)

    def pdf(self, x):
        z = (np.asarray(x, dtype=float) - self.mu) / self.sigma
        return np.exp(-0.5 * z * z) / (self.sigma * np.sqrt(2.0 * np.pi))

    def quantile(self, p):
        return self.mu + self.sigma * ndtri(_check_prob(p))


class Uniform01:
    """Standard uniform margin on (0, 1)."""

    def cdf(self, x):
        return np.clip(np.asarray(x, dtype=float), 0.0, 1.0)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where((x >= 0.0) & (x <= 1.0), 1.0, 0.0)

    def quantile(self, p):
        return np.asarray(_check_prob(p))


class Beta:
    """Beta(alpha, beta) margin on (0, 1)."""

    def __init__(self, alpha: float, beta: float):
        if not (np.isfinite(alpha) and np.isfinite(beta)) or alpha <= 0 or beta <= 0:
            raise ParameterError("Beta requires alpha > 0 and beta > 0")
        self.alpha = float(alpha)
        self.beta = float(beta)

    def cdf(self, x):
        return betainc(self.alpha, self.beta, np.clip(np.asarray(x, dtype=float), 0.0, 1.0))

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x > 0.0) & (x < 1.0)
        xs = np.where(inside, x, 0.5)
        lp = (
            (self.alpha - 1.0) * np.log(xs)
            + (self.beta - 1.0) * np.log1p(-xs)
            - betaln(self.alpha, self.beta)
        )
        return np.where(inside, np.exp(lp), 0.0)

    def quantile(self, p):
        return betaincinv(self.alpha, self.beta, _check_prob(p))


class Gumbel:
    """Location-free Gumbel form F(x) = 1 - exp(-exp(x))."""

    def cdf(self, x):
        return -np.expm1(-np.exp(np.asarray(x, dtype=float)))

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.exp(x - np.exp(x))

    def quantile(self, p):
        return np.log(-np.log1p(-_check_prob(p)))


class Empirical:
    """Kernel-smoothed empirical CDF with a Gaussian smoothing kernel.

    ``cdf(x)`` averages the standard normal CDF of ``(x - X_i) / h``;
    the quantile is found by bisection.  ``pseudo_observations``
    rescales CDF evaluations by ``n / (n + 1)`` to keep them off the
    upper boundary, the usual pseudo-MLE convention.
    """

    def __init__(self, sample, bandwidth: float | None = None):
        sample = np.sort(np.asarray(sample, dtype=float))
        if sample.size == 0 or not np.all(np.isfinite(sample)):
            raise ParameterError("empirical sample must be non-empty and finite")
        if bandwidth is None:
            scale = np.std(sample, ddof=1)
            if scale == 0.0:
                raise DegenerateDataError("sample has zero scale; bandwidth undefined")
            bandwidth = 1.06 * scale * sample.size ** (-1.0 / 3.0)
        if bandwidth <= 0:
            raise ParameterError("bandwidth must be > 0")
        self.sample = sample
        self.h = float(bandwidth)
        self.n = sample.size

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        flat = np.atleast_1d(x)
        out = ndtr((flat[:, None] - self.sample[None, :]) / self.h).mean(axis=1)
        return out.reshape(x.shape) if x.ndim else float(out[0])

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        flat = np.atleast_1d(x)
        z = (flat[:, None] - self.sample[None, :]) / self.h
        out = (np.exp(-0.5 * z * z) / np.sqrt(2.0 * np.pi)).mean(axis=1) / self.h
        return out.reshape(x.shape) if x.ndim else float(out[0])

    def quantile(self, p):
        p = _check_prob(p)
        flat = np.atleast_1d(p)
        lo = np.full(flat.shape, self.sample[0] - 40.0 * self.h)
        hi = np.full(flat.shape, self.sample[-1] + 40.0 * self.h)
        for _ in range(90):
            mid = 0.5 * (lo + hi)
            below = self.cdf(mid) < flat
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        out = 0.5 * (lo + hi)
        return out.reshape(p.shape) if p.ndim else float(out[0])

    def pseudo_observations(self, x):
        u = self.cdf(x) * (self.n / (self.n + 1.0))
        return np.clip(u, 1e-12, 1.0 - 1e-12)


def fit_empirical(sample) -> Empirical:
    """Kernel-smoothed margin with bandwidth 1.06 * sd * n^(-1/3)."""
    sample = np.asarray(sample, dtype=float)
    if sample.size < 10:
        raise InsufficientDataError(f"need at least 10 observations, got {sample.size}")
    return Empirical(sample)


@dataclass(frozen=True)
class LatentParams:
    """Unconstrained log-parametrisation of the Beta latent margin."""

    log_alpha: float = 0.0
    log_beta: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.log_alpha) and np.isfinite(self.log_beta)):
            raise ParameterError("latent log-parameters must be finite")
        if abs(self.log_alpha) > LOG_PARAM_BOX or abs(self.log_beta) > LOG_PARAM_BOX:
            raise ParameterError(f"latent log-parameters must lie in [-{LOG_PARAM_BOX}, {LOG_PARAM_BOX}]")

    @property
    def alpha(self) -> float:
        return float(np.exp(self.log_alpha))

    @property
    def beta(self) -> float:
        return float(np.exp(self.log_beta))

    def margin(self) -> Beta:
        return Beta(self.alpha, self.beta)


_FD_STEP = 1e-6


def beta_score(phi: LatentParams, z):
    """Score pieces of the beta latent density at ``z``.

    Returns ``(dlogf, dF)`` where ``dlogf`` is the analytic gradient of
    log f_phi(z) in (log alpha, log beta) (digamma identity, chain-ruled
    through the exponential) and ``dF`` is the gradient of the CDF,
    obtained by central finite differences on the regularised incomplete
    beta function (no closed form exists).  Arrays broadcast along the
    last axis: for ``z`` of shape ``s`` the results have shape ``s + (2,)``.
    """
    z = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(z)) or np.any(z <= 0.0) or np.any(z >= 1.0):
        raise DomainError("z must lie strictly inside (0, 1)")
    a, b = phi.alpha, phi.beta
    la, lb = phi.log_alpha, phi.log_beta
    dlogf = np.stack(
        [
            a * (np.log(z) + digamma(a + b) - digamma(a)),
            b * (np.log1p(-z) + digamma(a + b) - digamma(b)),
        ],
        axis=-1,
    )
    h = _FD_STEP
    dF = np.stack(
        [
            (betainc(np.exp(la + h), b, z) - betainc(np.exp(la - h), b, z)) / (2.0 * h),
            (betainc(a, np.exp(lb + h), z) - betainc(a, np.exp(lb - h), z)) / (2.0 * h),
        ],
        axis=-1,
    )
    return dlogf, dF
