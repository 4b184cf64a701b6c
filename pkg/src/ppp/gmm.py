"""Gaussian mixtures fit by expectation-maximization.

Everything runs in log space: per-component log densities are combined with a
max-shifted log-sum, so likelihoods and responsibilities stay finite far past
the range where raw densities underflow. Mixtures are value objects; every
update builds a new one.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import logsumexp

from .data import as_matrix
from .errors import ConfigError, DegenerateModel, DimensionError, SingularCovariance

log = logging.getLogger(__name__)

_LOG_2PI = float(np.log(2.0 * np.pi))

# responsibility mass below which a component is considered dead
_DROP_MASS = 1e-12

COVARIANCE_MODES = ("full", "diagonal")


@dataclass(frozen=True, eq=False)
class GaussianComponent:
    """One mixture component.

    ``covariance`` is a (dim, dim) matrix in full mode or a (dim,) vector of
    per-coordinate variances in diagonal mode.
    """

    weight: float
    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mean", np.asarray(self.mean, dtype=float))
        object.__setattr__(self, "covariance", np.asarray(self.covariance, dtype=float))
        if self.covariance.ndim not in (1, 2):
            raise ConfigError("covariance must be a matrix or a variance vector")

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


@dataclass(frozen=True, eq=False)
class GaussianMixture:
    """A weighted set of Gaussian components sharing one covariance mode.

    Weights are positive and sum to one within 1e-12. ``ll_trace`` is filled by
    :func:`fit_em` with the per-iteration log-likelihood (first entry is the
    likelihood of the starting mixture).
    """

    components: tuple[GaussianComponent, ...]
    covariance_mode: str
    reg_epsilon: float
    ll_trace: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.covariance_mode not in COVARIANCE_MODES:
            raise ConfigError(f"covariance_mode must be one of {COVARIANCE_MODES}")
        if not self.components:
            raise DegenerateModel("mixture needs at least one component")
        object.__setattr__(self, "components", tuple(self.components))
        total = sum(c.weight for c in self.components)
        if abs(total - 1.0) > 1e-12:
            raise ConfigError(f"component weights must sum to 1, got {total!r}")
        if any(c.weight <= 0 for c in self.components):
            raise ConfigError("component weights must be positive")

    @property
    def n_components(self) -> int:
        return len(self.components)

    @property
    def dim(self) -> int:
        return self.components[0].dim

    @property
    def n_iterations(self) -> int | None:
        return None if self.ll_trace is None else len(self.ll_trace) - 1

    def weights(self) -> np.ndarray:
        return np.array([c.weight for c in self.components])

    def means(self) -> np.ndarray:
        return np.stack([c.mean for c in self.components])


@dataclass(frozen=True, eq=False)
class MixtureScores:
    """Per-row mixture evaluation.

    ``density`` is ``exp(log_density)`` and can over- or underflow for extreme
    models; ``normalized`` is density over max density, computed in log space,
    so it always lands in (0, 1] with its maximum exactly 1.
    """

    log_density: np.ndarray
    density: np.ndarray
    normalized: np.ndarray


def _log_gauss_one(X: np.ndarray, mean: np.ndarray, cov: np.ndarray, mode: str) -> np.ndarray:
    """Log density of one Gaussian over the rows of X."""
    d = mean.shape[0]
    diff = X - mean
    if mode == "diagonal":
        if np.any(cov <= 0) or not np.all(np.isfinite(cov)):
            raise SingularCovariance("variance vector must be strictly positive")
        maha = np.einsum("nd,nd->n", diff / cov, diff)
        logdet = float(np.log(cov).sum())
    else:
        try:
            chol = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError as exc:
            raise SingularCovariance("covariance is not positive definite") from exc
        z = solve_triangular(chol, diff.T, lower=True)
        maha = np.einsum("dn,dn->n", z, z)
        logdet = 2.0 * float(np.log(np.diag(chol)).sum())
    return -0.5 * (d * _LOG_2PI + logdet + maha)


def component_logpdf(component: GaussianComponent, x) -> float:
    """Log density of a single Gaussian at the vector ``x``."""
    x = np.asarray(x, dtype=float)
    if x.shape != (component.dim,):
        raise DimensionError(f"x has shape {x.shape}, component dim is {component.dim}")
    mode = "diagonal" if component.covariance.ndim == 1 else "full"
    return float(_log_gauss_one(x[None, :], component.mean, component.covariance, mode)[0])


def _weighted_log_prob(g: GaussianMixture, X: np.ndarray) -> np.ndarray:
    """(n, K) matrix of log(weight_k) + log density_k(row)."""
    if X.shape[1] != g.dim:
        raise DimensionError(f"data has {X.shape[1]} columns, mixture dim is {g.dim}")
    out = np.empty((X.shape[0], g.n_components))
    for k, c in enumerate(g.components):
        out[:, k] = np.log(c.weight) + _log_gauss_one(X, c.mean, c.covariance, g.covariance_mode)
    return out


def mixture_log_density(g: GaussianMixture, data) -> np.ndarray:
    """Per-row log density under the mixture (max-shifted log-sum over components)."""
    X = as_matrix(data)
    return logsumexp(_weighted_log_prob(g, X), axis=1)


def mixture_logpdf(g: GaussianMixture, x) -> float:
    """Mixture log density at a single vector."""
    x = np.asarray(x, dtype=float)
    return float(mixture_log_density(g, x[None, :])[0])


def mixture_pdf(g: GaussianMixture, x) -> float:
    """Mixture density at a single vector, evaluated through log space."""
    return float(np.exp(mixture_logpdf(g, x)))


def log_likelihood(g: GaussianMixture, data) -> float:
    """Total log-likelihood of the data rows under the mixture."""
    return float(mixture_log_density(g, data).sum())


def responsibilities(g: GaussianMixture, data) -> np.ndarray:
    """(n, K) posterior component memberships; every row sums to one."""
    X = as_matrix(data)
    wlp = _weighted_log_prob(g, X)
    r = np.exp(wlp - logsumexp(wlp, axis=1, keepdims=True))
    r /= r.sum(axis=1, keepdims=True)
    return r


def _subset(g: GaussianMixture, keep: np.ndarray) -> GaussianMixture:
    kept = [c for c, flag in zip(g.components, keep) if flag]
    total = sum(c.weight for c in kept)
    comps = tuple(replace(c, weight=c.weight / total) for c in kept)
    return GaussianMixture(comps, g.covariance_mode, g.reg_epsilon)


def em_step(g: GaussianMixture, data) -> tuple[GaussianMixture, float]:
    """One E+M pass; returns the updated mixture and its log-likelihood.

    A component whose responsibility mass falls below 1e-12 is dropped, the
    surviving weights are renormalized, and the pass restarts from the trimmed
    mixture (the drop is reported through logging). Covariances get
    ``reg_epsilon`` added on the diagonal when re-estimated.
    """
    X = as_matrix(data)
    r = responsibilities(g, X)
    mass = r.sum(axis=0)
    dead = mass < _DROP_MASS
    if dead.any():
        log.info(
            "dropping %d of %d components with responsibility mass below %g",
            int(dead.sum()), g.n_components, _DROP_MASS,
        )
        g = _subset(g, ~dead)
        r = responsibilities(g, X)
        mass = r.sum(axis=0)

    weights = mass / mass.sum()
    means = (r.T @ X) / mass[:, None]
    comps = []
    for k in range(g.n_components):
        diff = X - means[k]
        if g.covariance_mode == "diagonal":
            cov = (r[:, k] @ (diff * diff)) / mass[k] + g.reg_epsilon
        else:
            cov = (r[:, k, None] * diff).T @ diff / mass[k]
            cov[np.diag_indices_from(cov)] += g.reg_epsilon
        comps.append(GaussianComponent(float(weights[k]), means[k], cov))
    updated = GaussianMixture(tuple(comps), g.covariance_mode, g.reg_epsilon)
    return updated, log_likelihood(updated, X)


def fit_em(g: GaussianMixture, data, tol: float = 1e-6, max_iter: int = 100) -> GaussianMixture:
    """Iterate :func:`em_step` until the log-likelihood settles.

    Convergence is ``|ll_new - ll_old| < tol * (1 + |ll_new|)``; a mixture that
    is already at a fixed point returns after a single iteration. The returned
    mixture carries the full log-likelihood trace.
    """
    X = as_matrix(data)
    trace = [log_likelihood(g, X)]
    for _ in range(max_iter):
        g, ll = em_step(g, X)
        trace.append(ll)
        if abs(ll - trace[-2]) < tol * (1.0 + abs(ll)):
            break
    return replace(g, ll_trace=tuple(trace))


def mixture_scores(g: GaussianMixture, data) -> MixtureScores:
    """Evaluate the mixture on every row.

    The normalized score (density over max density) is computed entirely in
    log space, so it is meaningful even when the raw densities leave the
    representable range.
    """
    lp = mixture_log_density(g, data)
    with np.errstate(over="ignore", under="ignore"):
        density = np.exp(lp)
    normalized = np.exp(lp - lp.max())
    return MixtureScores(lp, density, normalized)


def default_covariance_mode(dim: int) -> str:
    """Diagonal beyond 50 columns, full otherwise."""
    return "diagonal" if dim > 50 else "full"


def init_gmm_from_codebook(
    match,
    data,
    covariance_mode: str | None = None,
    reg_epsilon: float | None = None,
) -> GaussianMixture:
    """Seed a mixture from a codebook match.

    Means are the matched vectors and weights the unit priors, renormalized
    after units with prior zero are dropped; every component starts from the
    same diagonal covariance, the global per-column variance of ``data`` plus
    ``reg_epsilon`` (default ``1e-6 *`` mean column variance, floored at 1e-12).
    """
    X = as_matrix(data)
    if match.matched_vectors.shape[1] != X.shape[1]:
        raise DimensionError("matched vectors and data disagree on dimension")
    keep = match.priors > 0
    if not keep.any():
        raise DegenerateModel("every unit has prior zero")
    if covariance_mode is None:
        covariance_mode = default_covariance_mode(X.shape[1])
    if covariance_mode not in COVARIANCE_MODES:
        raise ConfigError(f"covariance_mode must be one of {COVARIANCE_MODES}")
    base_var = X.var(axis=0)
    if reg_epsilon is None:
        reg_epsilon = max(1e-6 * float(base_var.mean()), 1e-12)
    if reg_epsilon <= 0:
        raise ConfigError("reg_epsilon must be positive")
    start_var = base_var + reg_epsilon
    weights = match.priors[keep] / match.priors[keep].sum()
    comps = []
    for w, mean in zip(weights, match.matched_vectors[keep]):
        cov = start_var.copy() if covariance_mode == "diagonal" else np.diag(start_var)
        comps.append(GaussianComponent(float(w), mean.copy(), cov))
    return GaussianMixture(tuple(comps), covariance_mode, float(reg_epsilon))
