"""Self-organizing map vector quantization.

A small rectangular grid of codebook vectors is trained online on the rows of a
matrix. The trained map then summarizes the data three ways: a hit count per
unit, the data row nearest to each unit (the matched vector), and a prior over
units built from the hit counts. Downstream mixture models are seeded from the
matched vectors and priors.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .data import as_matrix, derive_seed
from .errors import ConfigError, DimensionError


@dataclass(frozen=True)
class SomConfig:
    """Grid shape, step schedules and seeding for one training run.

    The learning rate and neighborhood radius interpolate linearly from their
    ``*_start`` to ``*_end`` values over the whole step budget
    (``epochs * n_rows`` steps). ``hit_quantile`` below 1.0 drops the rows with
    the largest BMU distances from the closing hit-count pass; 1.0 disables
    the filter.
    """

    grid_rows: int
    grid_cols: int
    epochs: int = 5
    alpha_start: float = 0.5
    alpha_end: float = 0.05
    sigma_start: float = 2.0
    sigma_end: float = 0.5
    hit_quantile: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.grid_rows < 1 or self.grid_cols < 1:
            raise ConfigError("grid sides must be positive")
        if self.grid_rows * self.grid_cols < 2:
            raise ConfigError("grid must contain at least two units")
        if self.epochs < 1:
            raise ConfigError("epochs must be at least 1")
        if not (0.0 < self.alpha_end <= self.alpha_start):
            raise ConfigError("learning rate must satisfy alpha_start >= alpha_end > 0")
        if not (0.0 < self.sigma_end <= self.sigma_start):
            raise ConfigError("neighborhood radius must satisfy sigma_start >= sigma_end > 0")
        if not (0.0 < self.hit_quantile <= 1.0):
            raise ConfigError("hit_quantile must lie in (0, 1]")

    @property
    def n_units(self) -> int:
        return self.grid_rows * self.grid_cols


@dataclass(frozen=True, eq=False)
class SomModel:
    """Codebook plus bookkeeping. ``final_qe`` is None until trained."""

    config: SomConfig
    codebook: np.ndarray  # (n_units, dim)
    hit_counts: np.ndarray  # (n_units,) int
    final_qe: float | None = None

    @property
    def grid_coords(self) -> np.ndarray:
        """Integer (row, col) position of each unit, row-major."""
        cols = self.config.grid_cols
        k = np.arange(self.config.n_units)
        return np.stack([k // cols, k % cols], axis=1)


@dataclass(frozen=True, eq=False)
class CodebookMatchSet:
    """One data row per unit, with a prior over units.

    ``matched_instance_ids[k]`` is the row index nearest to unit k's codebook
    vector and ``matched_vectors[k]`` a copy of that row. ``priors`` is
    nonnegative and sums to one (an all-zero vector is representable so that
    degenerate inputs can be rejected downstream).
    """

    matched_instance_ids: np.ndarray
    matched_vectors: np.ndarray
    priors: np.ndarray

    def __post_init__(self):
        priors = np.asarray(self.priors, dtype=float)
        if np.any(priors < 0):
            raise ConfigError("priors must be nonnegative")
        total = priors.sum()
        if total != 0.0 and abs(total - 1.0) > 1e-12:
            raise ConfigError(f"priors must sum to 1, got {total!r}")
        object.__setattr__(self, "priors", priors)

    def __len__(self) -> int:
        return int(self.priors.size)


def default_grid(n_instances: int) -> tuple[int, int]:
    """Pick a grid for ``n_instances`` rows.

    8x8 once the data reaches 64 rows, otherwise a near-square grid with at
    most one unit per row (and never fewer than two units).
    """
    target = max(2, min(64, int(n_instances)))
    rows = max(1, math.isqrt(target))
    cols = max(2 if rows == 1 else 1, target // rows)
    return rows, cols


def default_som_config(
    n_instances: int,
    seed: int = 0,
    grid: tuple[int, int] | None = None,
    epochs: int = 5,
    alpha: tuple[float, float] = (0.5, 0.05),
    sigma: tuple[float, float] | None = None,
    hit_quantile: float = 1.0,
) -> SomConfig:
    """A ready-to-use config: size-based grid, radius from half the grid side."""
    rows, cols = grid if grid is not None else default_grid(n_instances)
    if sigma is None:
        sigma = (max(1.0, max(rows, cols) / 2.0), 0.5)
    return SomConfig(
        grid_rows=rows,
        grid_cols=cols,
        epochs=epochs,
        alpha_start=alpha[0],
        alpha_end=alpha[1],
        sigma_start=sigma[0],
        sigma_end=sigma[1],
        hit_quantile=hit_quantile,
        seed=seed,
    )


def _grid_sqdist(config: SomConfig) -> np.ndarray:
    """(K, K) squared Euclidean distances between unit grid positions."""
    cols = config.grid_cols
    k = np.arange(config.n_units)
    coords = np.stack([k // cols, k % cols], axis=1).astype(float)
    diff = coords[:, None, :] - coords[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def _schedule(config: SomConfig, t: int, total_steps: int) -> tuple[float, float]:
    """Linearly interpolated (alpha, sigma) at step t of total_steps."""
    frac = 0.0 if total_steps <= 1 else t / (total_steps - 1)
    alpha = config.alpha_start + (config.alpha_end - config.alpha_start) * frac
    sigma = config.sigma_start + (config.sigma_end - config.sigma_start) * frac
    return alpha, sigma


def _sq_to_codebook(X: np.ndarray, codebook: np.ndarray) -> np.ndarray:
    """(n, K) exact squared distances from each row to each codebook vector."""
    diff = X[:, None, :] - codebook[None, :, :]
    return np.einsum("nkd,nkd->nk", diff, diff)


def init_som(config: SomConfig, data) -> SomModel:
    """Seeded codebook initialization from the data rows themselves.

    Rows are sampled uniformly without replacement. A grid with more units than
    rows is allowed but warned about: every row is used once and the remainder
    is filled by seeded resampling.
    """
    X = as_matrix(data)
    n = X.shape[0]
    k = config.n_units
    rng = np.random.default_rng(derive_seed(config.seed, "init"))
    if k <= n:
        idx = rng.choice(n, size=k, replace=False)
    else:
        warnings.warn(
            f"grid has {k} units for only {n} rows; consider a smaller grid",
            stacklevel=2,
        )
        idx = np.concatenate([rng.permutation(n), rng.integers(0, n, size=k - n)])
    codebook = X[idx].astype(float).copy()
    return SomModel(config, codebook, np.zeros(k, dtype=np.int64), None)


def find_bmu(som: SomModel, x) -> tuple[int, float]:
    """Index of the codebook vector nearest to ``x`` plus the squared distance.

    Ties go to the lowest unit index.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (som.codebook.shape[1],):
        raise DimensionError(
            f"query has shape {x.shape}, codebook vectors have dim {som.codebook.shape[1]}"
        )
    diff = som.codebook - x
    sq = np.einsum("kd,kd->k", diff, diff)
    best = int(np.argmin(sq))
    return best, float(sq[best])


def neighborhood_weight(som: SomModel, c: int, i: int, t: int, total_steps: int) -> float:
    """Lateral weight between winner ``c`` and unit ``i`` at step ``t``.

    A Gaussian kernel over squared grid distance, scaled by the current
    learning rate: ``alpha(t) * exp(-gridd2(c, i) / (2 sigma(t)^2))``.
    """
    alpha, sigma = _schedule(som.config, t, total_steps)
    coords = som.grid_coords
    d = coords[c] - coords[i]
    return alpha * math.exp(-float(d @ d) / (2.0 * sigma * sigma))


def train_som(som: SomModel, data) -> SomModel:
    """Run the online training loop, then one closing assignment pass.

    The loop makes ``epochs * n`` steps. Each step draws a seeded random data
    row, finds its BMU, and moves every unit toward the row by the current
    neighborhood weight of that unit against the winner. The closing pass
    fills the hit counts (each row counted at its BMU, minus the rows filtered
    out by ``hit_quantile``) and records the final mean squared BMU distance.
    """
    X = as_matrix(data)
    n, dim = X.shape
    if dim != som.codebook.shape[1]:
        raise DimensionError(
            f"data has {dim} columns, codebook was built for {som.codebook.shape[1]}"
        )
    config = som.config
    total = config.epochs * n
    rng = np.random.default_rng(derive_seed(config.seed, "train"))
    draws = rng.integers(0, n, size=total)
    grid_sq = _grid_sqdist(config)
    codebook = som.codebook.copy()
    for t in range(total):
        x = X[draws[t]]
        diff = codebook - x
        winner = int(np.argmin(np.einsum("kd,kd->k", diff, diff)))
        alpha, sigma = _schedule(config, t, total)
        h = alpha * np.exp(grid_sq[winner] * (-0.5 / (sigma * sigma)))
        codebook += h[:, None] * (x - codebook)

    sq = _sq_to_codebook(X, codebook)
    bmu = np.argmin(sq, axis=1)
    dists = sq[np.arange(n), bmu]
    if config.hit_quantile < 1.0:
        keep = dists <= np.quantile(dists, config.hit_quantile)
    else:
        keep = np.ones(n, dtype=bool)
    hits = np.bincount(bmu[keep], minlength=config.n_units).astype(np.int64)
    return SomModel(config, codebook, hits, float(dists.mean()))


def quantization_error(som: SomModel, data) -> float:
    """Mean squared distance from each row to its BMU under this codebook."""
    X = as_matrix(data)
    if X.shape[1] != som.codebook.shape[1]:
        raise DimensionError("data and codebook dimensions differ")
    return float(_sq_to_codebook(X, som.codebook).min(axis=1).mean())


def codebook_priors(som: SomModel) -> np.ndarray:
    """Prior over units: hit counts weighted by the end-schedule kernel.

    The kernel is evaluated at zero grid distance with the final learning rate,
    which is the same factor for every unit, so this reduces to normalized hit
    counts. A map with no recorded hits falls back to a uniform prior (with a
    warning); a unit with zero hits keeps prior zero otherwise.
    """
    hits = som.hit_counts.astype(float)
    weighted = hits * som.config.alpha_end
    total = weighted.sum()
    if total <= 0.0:
        warnings.warn("codebook has no recorded hits; using a uniform prior", stacklevel=2)
        k = som.config.n_units
        return np.full(k, 1.0 / k)
    return weighted / total


def codebook_match(som: SomModel, data) -> CodebookMatchSet:
    """Nearest data row per unit (ties to the lowest row index), plus priors."""
    X = as_matrix(data)
    if X.shape[1] != som.codebook.shape[1]:
        raise DimensionError("data and codebook dimensions differ")
    sq = _sq_to_codebook(X, som.codebook)
    ids = np.argmin(sq, axis=0).astype(np.int64)
    return CodebookMatchSet(ids, X[ids].copy(), codebook_priors(som))
