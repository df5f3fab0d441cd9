"""Posterior inference by enumerating every symmetric exchangeability matrix."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .core import (
    ExchConfig,
    PriorConfig,
    RowTables,
    TrialData,
    check_exact_feasible,
    upper_cells,
)


@dataclass(eq=False)
class ExactPosterior:
    J: int
    codes: np.ndarray
    log_weights: np.ndarray
    map_index: int
    pep: np.ndarray
    tables: RowTables

    @property
    def configs(self) -> list[ExchConfig]:
        return [ExchConfig(self.J, int(c)) for c in self.codes]

    @property
    def weights(self) -> np.ndarray:
        return np.exp(self.log_weights)

    @property
    def map_config(self) -> ExchConfig:
        return ExchConfig(self.J, int(self.codes[self.map_index]))


def _cell_bits(codes: np.ndarray, n_cells: int) -> np.ndarray:
    return ((codes[:, None] >> np.arange(n_cells)) & 1).astype(np.int8)


def _log_prior(bits: np.ndarray, prior: PriorConfig) -> np.ndarray:
    J = prior.J
    cells = upper_cells(J)
    if not cells:
        return np.zeros(bits.shape[0])
    p = np.array([prior.prior_exch[i, j] for i, j in cells])
    with np.errstate(divide="ignore"):
        log_on, log_off = np.log(p), np.log1p(-p)
    # select rather than multiply so 0 * -inf never appears
    return np.where(bits == 1, log_on, log_off).sum(axis=1)


def fit_exact(data: TrialData, prior: PriorConfig, config=None) -> ExactPosterior:
    """Score all 2^(J(J-1)/2) configurations and normalize.

    ``config`` is accepted for signature parity with the MCMC engine; the
    exact posterior does not depend on it.
    """
    J = data.J
    check_exact_feasible(J)
    if prior.J != J:
        raise ValueError(f"prior is for {prior.J} baskets, data has {J}")
    n_cells = J * (J - 1) // 2
    codes = np.arange(1 << n_cells, dtype=np.int64)
    tables = RowTables(data, prior)
    patterns = tables.row_patterns(codes)
    score = _log_prior(_cell_bits(codes, n_cells), prior)
    for j in range(J):
        score = score + tables.log_marg[j, patterns[j]]
    log_w = score - logsumexp(score)
    map_index = int(np.argmax(log_w))

    weights = np.exp(log_w)
    pep = np.eye(J)
    for c, (i, j) in enumerate(upper_cells(J)):
        mass = weights[((codes >> c) & 1) == 1].sum()
        pep[i, j] = pep[j, i] = min(1.0, mass)
    return ExactPosterior(J, codes, log_w, map_index, pep, tables)


def row_config_weights(j: int, posterior: ExactPosterior) -> list[tuple[tuple[int, ...], float]]:
    """Posterior probability of each of basket ``j``'s 2^(J-1) row patterns.

    Obtained by summing full-matrix weights that share the row.
    """
    probs = row_pattern_probs(j, posterior)
    return [(posterior.tables.row_vector(j, g), float(p)) for g, p in enumerate(probs)]


def row_pattern_probs(j: int, posterior: ExactPosterior) -> np.ndarray:
    patterns = posterior.tables.row_patterns(posterior.codes)[j]
    G = 1 << (posterior.J - 1)
    return np.bincount(patterns, weights=posterior.weights, minlength=G)


def sample_pi_exact(posterior: ExactPosterior, n_draws: int, rng: np.random.Generator) -> np.ndarray:
    """Draws from each basket's finite-mixture marginal posterior, shape (J, n_draws)."""
    if n_draws < 1:
        raise ValueError("n_draws must be positive")
    tables = posterior.tables
    out = np.empty((posterior.J, n_draws))
    for j in range(posterior.J):
        probs = row_pattern_probs(j, posterior)
        probs = probs / probs.sum()
        g = rng.choice(probs.size, size=n_draws, p=probs)
        out[j] = rng.beta(tables.shape_a[j, g], tables.shape_b[j, g])
    return out
