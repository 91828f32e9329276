"""Parametric copula families.

Densities, log-density gradients with respect to the free parameters,
partial derivatives in one argument, samplers and a feasibility
projection for the four families used throughout the package:

* ``gaussian``  -- correlation matrix ``sigma`` (unit diagonal), any dim
* ``studentt``  -- correlation matrix plus degrees of freedom ``df`` (fixed)
* ``clayton``   -- exchangeable Archimedean with ``delta > 0``, any dim
* ``fgm``       -- Farlie-Gumbel-Morgenstern with ``theta`` in [-1, 1], dim 2

Coordinate convention: the response (or latent) variable occupies the
*last* coordinate; the first ``dim - 1`` coordinates are covariates.

Everything is computed in log space internally and exponentiated on the
way out, so extreme pseudo-observations survive.  All evaluation
functions are vectorised: ``u`` may be a single point of shape ``(dim,)``
or a batch of shape ``(m, dim)``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.special import gammaln, ndtr, ndtri, stdtr, stdtrit

from .exceptions import ConditioningError, DomainError, ParameterError

FAMILIES = ("gaussian", "clayton", "fgm", "studentt")

# Feasible boxes used by project_params.
DELTA_MIN, DELTA_MAX = 1e-4, 50.0
THETA_MAX = 0.999
EIG_FLOOR = 1e-6
_EIG_VALID = 1e-8  # weaker floor accepted at construction time
_COND_LIMIT = 1e10


@dataclass(frozen=True, eq=False)
class CopulaSpec:
    """Immutable value object holding a copula family and its parameters.

    Use the classmethod constructors (:meth:`gaussian`, :meth:`clayton`,
    :meth:`fgm`, :meth:`student_t`), which validate; the raw constructor
    does not, so the fitting loops can hold transiently infeasible
    iterates before projection.
    """

    family: str
    dim: int
    delta: float | None = None
    theta: float | None = None
    sigma: np.ndarray | None = None
    df: float | None = None

    @classmethod
    def gaussian(cls, sigma) -> "CopulaSpec":
        sigma = _as_corr_matrix(sigma)
        return cls(family="gaussian", dim=sigma.shape[0], sigma=sigma)

    @classmethod
    def student_t(cls, sigma, df: float) -> "CopulaSpec":
        sigma = _as_corr_matrix(sigma)
        if not np.isfinite(df) or df <= 2:
            raise ParameterError(f"Student-t df must be > 2, got {df}")
        return cls(family="studentt", dim=sigma.shape[0], sigma=sigma, df=float(df))

    @classmethod
    def clayton(cls, delta: float, dim: int = 2) -> "CopulaSpec":
        if not np.isfinite(delta) or delta <= 0:
            raise ParameterError(f"Clayton delta must be > 0, got {delta}")
        if dim < 2:
            raise ParameterError("copula dimension must be >= 2")
        return cls(family="clayton", dim=int(dim), delta=float(delta))

    @classmethod
    def fgm(cls, theta: float) -> "CopulaSpec":
        if not np.isfinite(theta) or abs(theta) > 1:
            raise ParameterError(f"FGM theta must lie in [-1, 1], got {theta}")
        return cls(family="fgm", dim=2, theta=float(theta))


def _as_corr_matrix(sigma) -> np.ndarray:
    sigma = np.array(sigma, dtype=float)
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1] or sigma.shape[0] < 2:
        raise ParameterError("sigma must be a square matrix of size >= 2")
    if not np.all(np.isfinite(sigma)):
        raise ParameterError("sigma contains non-finite entries")
    if not np.allclose(sigma, sigma.T, atol=1e-12, rtol=0):
        raise ParameterError("sigma must be symmetric")
    if not np.allclose(np.diag(sigma), 1.0, atol=1e-12, rtol=0):
        raise ParameterError("sigma must have unit diagonal")
    if np.linalg.eigvalsh(sigma).min() < _EIG_VALID:
        raise ParameterError(f"sigma eigenvalues must be >= {_EIG_VALID}")
    sigma.setflags(write=False)
    return sigma


def _check_params(spec: CopulaSpec) -> None:
    if spec.family not in FAMILIES:
        raise ParameterError(f"unknown copula family {spec.family!r}")
    if spec.family == "clayton":
        if spec.delta is None or not np.isfinite(spec.delta) or spec.delta <= 0:
            raise ParameterError("Clayton delta must be > 0")
    elif spec.family == "fgm":
        if spec.theta is None or not np.isfinite(spec.theta) or abs(spec.theta) > 1:
            raise ParameterError("FGM theta must lie in [-1, 1]")
    else:
        s = spec.sigma
        if s is None or s.shape != (spec.dim, spec.dim):
            raise ParameterError("sigma has the wrong shape")
        if not np.all(np.isfinite(s)):
            raise ParameterError("sigma contains non-finite entries")
        if spec.family == "studentt" and (spec.df is None or spec.df <= 2):
            raise ParameterError("Student-t df must be > 2")


def _check_u(u, dim: int, name: str = "u") -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.shape[-1] != dim:
        raise DomainError(f"{name} must have {dim} coordinates, got shape {u.shape}")
    if not np.all(np.isfinite(u)) or np.any(u <= 0.0) or np.any(u >= 1.0):
        raise DomainError(f"{name} must lie strictly inside (0, 1)")
    return u


def _inv_with_guard(sigma: np.ndarray):
    w = np.linalg.eigvalsh(sigma)
    if w.min() <= 0 or w.max() / w.min() > _COND_LIMIT:
        raise ConditioningError(
            f"correlation matrix is near-singular (condition {w.max() / max(w.min(), 0.0):.2e})"
        )
    return np.linalg.inv(sigma)


# ---------------------------------------------------------------------------
# score-space internals
#
# For the elliptical families the expensive transform u -> quantile score is
# separated out so callers evaluating many points against a *changing*
# parameter matrix (the Monte-Carlo fitting loop) can cache scores of the
# fixed coordinates.  For Clayton and FGM the "scores" are the u themselves.
# ---------------------------------------------------------------------------


def scores(spec: CopulaSpec, u: np.ndarray) -> np.ndarray:
    """Family-specific coordinate transform feeding the *_from_scores kernels."""
    if spec.family == "gaussian":
        return ndtri(u)
    if spec.family == "studentt":
        return stdtrit(spec.df, u)
    return np.asarray(u, dtype=float)


def log_density_from_scores(spec: CopulaSpec, t: np.ndarray) -> np.ndarray:
    if spec.family == "gaussian":
        return _gauss_logdens(t, spec.sigma)
    if spec.family == "studentt":
        return _t_logdens(t, spec.sigma, spec.df)
    if spec.family == "clayton":
        return _clayton_logdens(t, spec.delta)
    return np.log(_fgm_dens(t, spec.theta))


def grad_from_scores(spec: CopulaSpec, t: np.ndarray) -> np.ndarray:
    """Gradient of log density w.r.t. the free-parameter vector, batched."""
    if spec.family == "gaussian":
        return _offdiag_grad(_gauss_grad_matrix(t, spec.sigma), spec.dim)
    if spec.family == "studentt":
        return _offdiag_grad(_t_grad_matrix(t, spec.sigma, spec.df), spec.dim)
    if spec.family == "clayton":
        return _clayton_dlog_ddelta(t, spec.delta)[..., None]
    g = (1.0 - 2.0 * t[..., 0]) * (1.0 - 2.0 * t[..., 1])
    return (g / (1.0 + spec.theta * g))[..., None]


def dlog_darg_from_scores(spec: CopulaSpec, t: np.ndarray, which: int) -> np.ndarray:
    """d log c / d u_which, evaluated from precomputed scores."""
    if spec.family == "gaussian":
        si = _inv_with_guard(spec.sigma)
        dt = -(t @ (si - np.eye(spec.dim)))[..., which]
        dens = np.exp(-0.5 * t[..., which] ** 2) / np.sqrt(2.0 * np.pi)
        return dt / dens
    if spec.family == "studentt":
        nu, p = spec.df, spec.dim
        si = _inv_with_guard(spec.sigma)
        q = np.einsum("...j,jk,...k->...", t, si, t)
        tw = t[..., which]
        dt = -(nu + p) * (t @ si)[..., which] / (nu + q) + (nu + 1) * tw / (nu + tw**2)
        return dt / _t_pdf(tw, nu)
    if spec.family == "clayton":
        d, p = spec.delta, spec.dim
        s = (t**-d).sum(axis=-1) - (p - 1.0)
        uw = t[..., which]
        return -(d + 1.0) / uw + (1.0 / d + p) * d * uw ** (-d - 1.0) / s
    other = t[..., 1 - which]
    c = _fgm_dens(t, spec.theta)
    return -2.0 * spec.theta * (1.0 - 2.0 * other) / c


def _gauss_logdens(t, sigma):
    sign, logdet = np.linalg.slogdet(sigma)
    if sign <= 0:
        raise ParameterError("sigma is not positive definite")
    si = np.linalg.inv(sigma)
    quad = np.einsum("...j,jk,...k->...", t, si - np.eye(sigma.shape[0]), t)
    return -0.5 * logdet - 0.5 * quad


def _gauss_grad_matrix(t, sigma):
    # Matrix derivative of log c w.r.t. sigma: .5 Si t t' Si - .5 Si.
    si = _inv_with_guard(sigma)
    st = t @ si
    return 0.5 * np.einsum("...i,...j->...ij", st, st) - 0.5 * si


def _t_const(nu, p):
    return (
        gammaln((nu + p) / 2.0)
        + (p - 1.0) * gammaln(nu / 2.0)
        - p * gammaln((nu + 1.0) / 2.0)
    )


def _t_pdf(x, nu):
    logc = gammaln((nu + 1.0) / 2.0) - gammaln(nu / 2.0) - 0.5 * np.log(nu * np.pi)
    return np.exp(logc - 0.5 * (nu + 1.0) * np.log1p(x**2 / nu))


def _t_logdens(t, sigma, nu):
    p = sigma.shape[0]
    sign, logdet = np.linalg.slogdet(sigma)
    if sign <= 0:
        raise ParameterError("sigma is not positive definite")
    si = np.linalg.inv(sigma)
    q = np.einsum("...j,jk,...k->...", t, si, t)
    return (
        _t_const(nu, p)
        - 0.5 * logdet
        - 0.5 * (nu + p) * np.log1p(q / nu)
        + 0.5 * (nu + 1.0) * np.log1p(t**2 / nu).sum(axis=-1)
    )


def _t_grad_matrix(t, sigma, nu):
    p = sigma.shape[0]
    si = _inv_with_guard(sigma)
    st = t @ si
    q = np.einsum("...j,...j->...", st, t)
    scale = (nu + p) / (2.0 * (nu + q))
    return scale[..., None, None] * np.einsum("...i,...j->...ij", st, st) - 0.5 * si


def _clayton_logdens(u, d):
    p = u.shape[-1]
    s = (u**-d).sum(axis=-1) - (p - 1.0)
    k = np.arange(1, p)
    return (
        np.log1p(k * d).sum()
        - (d + 1.0) * np.log(u).sum(axis=-1)
        - (1.0 / d + p) * np.log(s)
    )


def _clayton_dlog_ddelta(u, d):
    p = u.shape[-1]
    lu = np.log(u)
    s = (u**-d).sum(axis=-1) - (p - 1.0)
    ds = -(u**-d * lu).sum(axis=-1)
    k = np.arange(1, p)
    return (
        (k / (1.0 + k * d)).sum()
        - lu.sum(axis=-1)
        + np.log(s) / d**2
        - (1.0 / d + p) * ds / s
    )


def _fgm_dens(u, theta):
    return 1.0 + theta * (1.0 - 2.0 * u[..., 0]) * (1.0 - 2.0 * u[..., 1])


def _offdiag_grad(gmat, dim):
    # Free parameters are the strictly-lower-triangle entries; moving one
    # moves its symmetric twin, hence the factor 2.
    i, j = np.tril_indices(dim, -1)
    return 2.0 * gmat[..., i, j]


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------


def log_density(spec: CopulaSpec, u) -> np.ndarray | float:
    """Natural log of the copula density at interior pseudo-observations."""
    _check_params(spec)
    u = _check_u(u, spec.dim)
    out = log_density_from_scores(spec, scores(spec, u))
    return float(out) if u.ndim == 1 else out


def density(spec: CopulaSpec, u) -> np.ndarray | float:
    """Copula density c(u); strictly positive on the open cube."""
    out = np.exp(log_density(spec, u))
    return float(out) if np.ndim(out) == 0 else out


def log_density_grad(spec: CopulaSpec, u) -> np.ndarray:
    """Gradient of log c(u) w.r.t. the free parameters.

    Free parameters are: Clayton delta, FGM theta, or the strictly-lower
    off-diagonal entries of sigma in ``np.tril_indices`` order (each tied
    to its symmetric twin; the diagonal is pinned at one).
    """
    _check_params(spec)
    u = _check_u(u, spec.dim)
    return grad_from_scores(spec, scores(spec, u))


def density_partial_arg(spec: CopulaSpec, u, which: int) -> np.ndarray | float:
    """Partial derivative of the density in coordinate ``which``."""
    _check_params(spec)
    u = _check_u(u, spec.dim)
    if not 0 <= which < spec.dim:
        raise DomainError(f"coordinate index {which} out of range for dim {spec.dim}")
    t = scores(spec, u)
    out = np.exp(log_density_from_scores(spec, t)) * dlog_darg_from_scores(spec, t, which)
    return float(out) if u.ndim == 1 else out


def covariate_margin_density(spec: CopulaSpec, u_x) -> np.ndarray | float:
    """Copula density of the covariate block, response coordinate integrated out.

    Equal to the mixed partial of C(u_x, 1) in the covariate coordinates;
    for a single covariate the margin is uniform and the density is one.
    """
    _check_params(spec)
    d = spec.dim - 1
    u_x = _check_u(u_x, d, name="u_x")
    if d == 1:
        out = np.ones(u_x.shape[:-1])
        return float(out) if u_x.ndim == 1 else out
    if spec.family == "gaussian":
        sub = CopulaSpec.gaussian(spec.sigma[:d, :d])
    elif spec.family == "studentt":
        sub = CopulaSpec.student_t(spec.sigma[:d, :d], spec.df)
    elif spec.family == "clayton":
        sub = CopulaSpec.clayton(spec.delta, dim=d)
    else:  # fgm is bivariate, handled by the d == 1 branch
        raise ParameterError("FGM copula has a single covariate")
    return density(sub, u_x)


def sample(spec: CopulaSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n`` i.i.d. pseudo-observations with copula ``spec``.

    Deterministic given the generator state.  Gaussian/Student-t via
    correlated scores, Clayton via gamma frailty, FGM via conditional
    inversion.
    """
    _check_params(spec)
    if n < 1:
        raise ParameterError("sample size must be >= 1")
    p = spec.dim
    if spec.family in ("gaussian", "studentt"):
        w, v = np.linalg.eigh(spec.sigma)
        if w.min() < 0:
            raise ParameterError("sigma is not positive semi-definite")
        root = v * np.sqrt(np.maximum(w, 0.0))
        z = rng.standard_normal((n, p)) @ root.T
        if spec.family == "gaussian":
            return ndtr(z)
        chi = rng.chisquare(spec.df, size=n)
        return stdtr(spec.df, z / np.sqrt(chi / spec.df)[:, None])
    if spec.family == "clayton":
        frailty = rng.gamma(1.0 / spec.delta, 1.0, size=n)
        e = rng.exponential(size=(n, p))
        return (1.0 + e / frailty[:, None]) ** (-1.0 / spec.delta)
    # FGM: invert the conditional CDF of v given u, a quadratic in v.
    u = rng.uniform(size=n)
    q = rng.uniform(size=n)
    a = spec.theta * (1.0 - 2.0 * u)
    disc = np.sqrt((1.0 + a) ** 2 - 4.0 * a * q)
    v = np.where(np.abs(a) < 1e-12, q, 2.0 * q / ((1.0 + a) + disc))
    return np.column_stack([u, v])


def project_params(spec: CopulaSpec) -> CopulaSpec:
    """Nearest feasible parameters after an unconstrained gradient step.

    Scalars are clamped to their boxes.  Correlation matrices are
    symmetrised, eigenvalue-clipped and rescaled back to unit diagonal
    until feasible.  Feasible input is returned unchanged, which makes
    the projection exactly idempotent.
    """
    if spec.family == "clayton":
        clipped = float(np.clip(spec.delta, DELTA_MIN, DELTA_MAX))
        return spec if clipped == spec.delta else replace(spec, delta=clipped)
    if spec.family == "fgm":
        clipped = float(np.clip(spec.theta, -THETA_MAX, THETA_MAX))
        return spec if clipped == spec.theta else replace(spec, theta=clipped)
    s = np.array(spec.sigma, dtype=float)
    if _matrix_feasible(s):
        return spec
    s = np.clip(s, -1.0, 1.0)
    s = 0.5 * (s + s.T)
    np.fill_diagonal(s, 1.0)
    for _ in range(100):
        if _matrix_feasible(s):
            break
        w, v = np.linalg.eigh(s)
        w = np.maximum(w, 2.0 * EIG_FLOOR)
        s = (v * w) @ v.T
        diag = np.sqrt(np.diag(s))
        s = s / np.outer(diag, diag)
        s = 0.5 * (s + s.T)
        np.fill_diagonal(s, 1.0)
    s.setflags(write=False)
    return replace(spec, sigma=s)


def _matrix_feasible(s: np.ndarray) -> bool:
    return (
        bool(np.all(np.isfinite(s)))
        and np.array_equal(s, s.T)
        and bool(np.all(np.diag(s) == 1.0))
        and np.linalg.eigvalsh(s).min() >= EIG_FLOOR
    )


def free_params(spec: CopulaSpec) -> np.ndarray:
    """Free-parameter vector in the order used by log_density_grad."""
    if spec.family == "clayton":
        return np.array([spec.delta])
    if spec.family == "fgm":
        return np.array([spec.theta])
    i, j = np.tril_indices(spec.dim, -1)
    return np.array(spec.sigma[i, j])


def replace_free_params(spec: CopulaSpec, vec: np.ndarray) -> CopulaSpec:
    """New spec with the free parameters replaced (no feasibility check)."""
    vec = np.asarray(vec, dtype=float)
    if spec.family == "clayton":
        return replace(spec, delta=float(vec[0]))
    if spec.family == "fgm":
        return replace(spec, theta=float(vec[0]))
    s = np.array(spec.sigma, dtype=float)
    i, j = np.tril_indices(spec.dim, -1)
    s[i, j] = vec
    s[j, i] = vec
    s.setflags(write=False)
    return replace(spec, sigma=s)


def analytic_kendall_tau(spec: CopulaSpec) -> float:
    """Closed-form Kendall tau of a bivariate member of the family."""
    if spec.family == "clayton":
        return spec.delta / (spec.delta + 2.0)
    if spec.family == "fgm":
        return 2.0 * spec.theta / 9.0
    if spec.dim != 2:
        raise ParameterError("analytic tau is defined for bivariate specs")
    return 2.0 * np.arcsin(spec.sigma[0, 1]) / np.pi
