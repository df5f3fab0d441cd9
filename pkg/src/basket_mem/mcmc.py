"""Metropolis sampling over symmetric exchangeability matrices."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    AnalysisConfig,
    ExchConfig,
    PriorConfig,
    RowTables,
    TrialData,
    default_initial_config,
    log_config_prior,
    upper_cells,
)

_CHUNK = 8192


@dataclass(eq=False)
class McmcTrace:
    J: int
    iter: int
    accepted_count: int
    config_tally: dict[int, int]
    pep: np.ndarray
    map_config: ExchConfig
    pi_draws: np.ndarray

    @property
    def acceptance_rate(self) -> float:
        return self.accepted_count / self.iter


FLIP_LAWS = ("geometric", "uniform")


def flip_counts(rng: np.random.Generator, n_cells: int, size: int, law: str = "geometric") -> np.ndarray:
    """Number of cells to flip per proposal.

    ``geometric``: P(k) = 2^-k for k < n_cells, remaining mass on n_cells.
    ``uniform``: k uniform on 1..n_cells.
    """
    if law == "geometric":
        return np.minimum(rng.geometric(0.5, size=size), n_cells)
    if law == "uniform":
        return rng.integers(1, n_cells + 1, size=size)
    raise ValueError(f"unknown flip law {law!r}; expected one of {FLIP_LAWS}")


def flip_masks(rng: np.random.Generator, n_cells: int, size: int, law: str = "geometric") -> list[int]:
    """Draw ``size`` flip masks over ``n_cells`` upper-triangle cells.

    The k flipped cells are chosen uniformly without replacement (ranks of
    i.i.d. uniform keys). The law of k does not depend on the current state,
    so the proposal is symmetric.
    """
    k = flip_counts(rng, n_cells, size, law)
    keys = rng.random((size, n_cells))
    ranks = keys.argsort(axis=1).argsort(axis=1)
    chosen = ranks < k[:, None]
    if n_cells <= 62:
        weights = np.left_shift(np.int64(1), np.arange(n_cells, dtype=np.int64))
        return (chosen.astype(np.int64) @ weights).tolist()
    return [sum(1 << int(c) for c in np.flatnonzero(row)) for row in chosen]


def propose_flip(current: ExchConfig, rng: np.random.Generator, law: str = "geometric") -> ExchConfig:
    """Symmetric proposal: flip a random number of randomly chosen cells."""
    if current.J < 2:
        raise ValueError("flip proposals need at least two baskets")
    (mask,) = flip_masks(rng, current.n_cells, 1, law)
    return ExchConfig(current.J, current.bits ^ mask)


class _Scorer:
    """Memoized log posterior score keyed by packed config bits."""

    def __init__(self, tables: RowTables, prior: PriorConfig):
        self.tables = tables
        self.prior = prior
        self.J = tables.data.J
        self.cache: dict[int, float] = {}

    def __call__(self, bits: int) -> float:
        d = self.cache.get(bits)
        if d is None:
            d = log_config_prior(ExchConfig(self.J, bits), self.prior)
            if d != -math.inf:
                t = self.tables
                d += sum(t.row_log_marg(j, t.row_pattern(j, bits)) for j in range(self.J))
            self.cache[bits] = d
        return d


def fit_mcmc(data: TrialData, prior: PriorConfig, config: AnalysisConfig,
             rng: np.random.Generator) -> McmcTrace:
    """Run one Metropolis chain and summarize the retained states.

    Burn-in counts proposals. After every retained step, one response-rate
    draw per basket is taken from the beta posterior implied by the current
    matrix row.
    """
    J = data.J
    if prior.J != J:
        raise ValueError(f"prior is for {prior.J} baskets, data has {J}")
    init = config.initial_config or default_initial_config(prior)
    if init.J != J:
        raise ValueError(f"initial configuration is for {init.J} baskets, data has {J}")
    tables = RowTables(data, prior)
    score = _Scorer(tables, prior)
    cur = init.bits
    d0 = score(cur)
    if d0 == -math.inf:
        raise ValueError("initial exchangeability configuration has zero prior probability")

    n_cells = J * (J - 1) // 2
    total = config.mcmc_burnin + config.mcmc_iter
    states = []
    accepted = 0
    step = 0
    while step < total:
        size = min(_CHUNK, total - step)
        if n_cells:
            masks = flip_masks(rng, n_cells, size, config.flip_law)
        else:
            masks = [0] * size
        u = rng.random(size).tolist()
        for mask, ui in zip(masks, u):
            cand = cur ^ mask
            d = score(cand)
            diff = d - d0
            if diff >= 0 or ui < math.exp(diff):
                cur, d0 = cand, d
                accepted += 1
            if step >= config.mcmc_burnin:
                states.append(cur)
            step += 1

    tally: dict[int, int] = {}
    for s in states:
        tally[s] = tally.get(s, 0) + 1
    # dict preserves first-visit order, so max() keeps the earliest on ties
    map_bits = max(tally, key=tally.__getitem__)

    codes = np.array(list(tally), dtype=object if n_cells > 62 else np.int64)
    counts = np.array(list(tally.values()), dtype=float)
    pep = np.eye(J)
    for c, (i, j) in enumerate(upper_cells(J)):
        on = np.array([(int(b) >> c) & 1 for b in codes], dtype=bool)
        pep[i, j] = pep[j, i] = counts[on].sum() / config.mcmc_iter

    index = {b: k for k, b in enumerate(tally)}
    state_idx = np.fromiter((index[s] for s in states), dtype=np.int64, count=len(states))
    shape_a = np.empty((J, len(tally)))
    shape_b = np.empty((J, len(tally)))
    for k, bits in enumerate(tally):
        for j in range(J):
            shape_a[j, k], shape_b[j, k] = tables.row_shapes(j, tables.row_pattern(j, bits))
    pi_draws = rng.beta(shape_a[:, state_idx], shape_b[:, state_idx])

    return McmcTrace(J, config.mcmc_iter, accepted, tally, pep, ExchConfig(J, map_bits), pi_draws)
