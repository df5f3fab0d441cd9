"""Trial data, exchangeability configurations and the MEM likelihood kernel."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Sequence

import numpy as np

from .numerics import log_beta

MAX_EXACT_BASKETS = 7


class ContractViolation(ValueError):
    """Raised when an argument breaks an operation's precondition."""


@dataclass(frozen=True)
class TrialData:
    basket_names: tuple[str, ...]
    responses: tuple[int, ...]
    sizes: tuple[int, ...]

    def __post_init__(self):
        names = tuple(str(s) for s in self.basket_names)
        responses = tuple(int(s) for s in self.responses)
        sizes = tuple(int(n) for n in self.sizes)
        object.__setattr__(self, "basket_names", names)
        object.__setattr__(self, "responses", responses)
        object.__setattr__(self, "sizes", sizes)
        if not names:
            raise ValueError("trial data needs at least one basket")
        if not len(names) == len(responses) == len(sizes):
            raise ValueError("basket_names, responses and sizes must have equal length")
        if any(not s for s in names):
            raise ValueError("basket names must be nonempty")
        if len(set(names)) != len(names):
            raise ValueError("basket names must be distinct")
        for name, s, n in zip(names, responses, sizes):
            if n <= 0:
                raise ValueError(f"basket {name!r}: size must be positive, got {n}")
            if not 0 <= s <= n:
                raise ValueError(f"basket {name!r}: responses {s} not in [0, {n}]")

    @property
    def J(self) -> int:
        return len(self.basket_names)

    def permuted(self, order: Sequence[int]) -> "TrialData":
        return TrialData(
            tuple(self.basket_names[i] for i in order),
            tuple(self.responses[i] for i in order),
            tuple(self.sizes[i] for i in order),
        )


def _broadcast(value, J: int, what: str) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(value, dtype=float))
    if arr.size == 1:
        arr = np.full(J, float(arr[0]))
    if arr.shape != (J,):
        raise ValueError(f"{what} must be a scalar or have length {J}, got shape {arr.shape}")
    return arr


@dataclass(frozen=True, eq=False)
class PriorConfig:
    """Beta shapes per basket plus the prior exchangeability matrix."""

    shape1: np.ndarray
    shape2: np.ndarray
    prior_exch: np.ndarray

    def __post_init__(self):
        J = self.prior_exch.shape[0]
        if self.prior_exch.shape != (J, J):
            raise ValueError("prior exchangeability matrix must be square")
        if self.shape1.shape != (J,) or self.shape2.shape != (J,):
            raise ValueError("shape vectors must match the prior matrix dimension")
        if np.any(self.shape1 <= 0) or np.any(self.shape2 <= 0):
            raise ValueError("beta prior shapes must be positive")
        if not np.array_equal(self.prior_exch, self.prior_exch.T):
            raise ValueError("prior exchangeability matrix must be symmetric")
        if np.any(np.diag(self.prior_exch) != 1.0):
            raise ValueError("all diagonal entries of the prior exchangeability matrix must be 1")
        if np.any((self.prior_exch < 0) | (self.prior_exch > 1)):
            raise ValueError("prior exchangeability probabilities must lie in [0, 1]")
        for arr in (self.shape1, self.shape2, self.prior_exch):
            arr.setflags(write=False)

    @classmethod
    def build(cls, J: int, shape1=0.5, shape2=0.5, prior_exch=0.5) -> "PriorConfig":
        """Broadcast scalar shapes and a scalar off-diagonal prior to ``J`` baskets."""
        a = _broadcast(shape1, J, "shape1")
        b = _broadcast(shape2, J, "shape2")
        p = np.asarray(prior_exch, dtype=float)
        if p.ndim == 0:
            p = np.full((J, J), float(p))
            np.fill_diagonal(p, 1.0)
        else:
            p = p.copy()
        return cls(a, b, p)

    @property
    def J(self) -> int:
        return self.prior_exch.shape[0]

    def permuted(self, order: Sequence[int]) -> "PriorConfig":
        idx = np.asarray(order)
        return PriorConfig(self.shape1[idx].copy(), self.shape2[idx].copy(),
                           self.prior_exch[np.ix_(idx, idx)].copy())

    def to_dict(self) -> dict:
        return {
            "shape1": self.shape1.tolist(),
            "shape2": self.shape2.tolist(),
            "prior": self.prior_exch.tolist(),
        }


def upper_cells(J: int) -> list[tuple[int, int]]:
    """Strict upper-triangle cells in bit order (row-major, i < j)."""
    return [(i, j) for i in range(J) for j in range(i + 1, J)]


@dataclass(frozen=True)
class ExchConfig:
    """Symmetric binary exchangeability matrix with unit diagonal.

    Only the strict upper triangle is stored, packed into ``bits`` with
    cell ``(i, j)``, ``i < j`` at the position given by :func:`upper_cells`.
    """

    J: int
    bits: int = 0

    def __post_init__(self):
        if self.J < 1:
            raise ValueError("J must be at least 1")
        if not 0 <= self.bits < (1 << self.n_cells):
            raise ValueError(f"bit pattern out of range for J={self.J}")

    @property
    def n_cells(self) -> int:
        return self.J * (self.J - 1) // 2

    @staticmethod
    def cell_index(J: int, i: int, j: int) -> int:
        if i > j:
            i, j = j, i
        if i == j:
            raise ValueError("diagonal cells are not stored")
        return i * J - i * (i + 1) // 2 + (j - i - 1)

    def get(self, i: int, j: int) -> int:
        if i == j:
            return 1
        return (self.bits >> self.cell_index(self.J, i, j)) & 1

    def flipped(self, cells: Sequence[int]) -> "ExchConfig":
        mask = 0
        for c in cells:
            mask |= 1 << c
        return ExchConfig(self.J, self.bits ^ mask)

    def row(self, j: int) -> tuple[int, ...]:
        return tuple(self.get(j, h) for h in range(self.J))

    def matrix(self) -> np.ndarray:
        m = np.eye(self.J, dtype=int)
        for c, (i, j) in enumerate(upper_cells(self.J)):
            if (self.bits >> c) & 1:
                m[i, j] = m[j, i] = 1
        return m

    @classmethod
    def from_matrix(cls, m) -> "ExchConfig":
        m = np.asarray(m)
        J = m.shape[0]
        if m.shape != (J, J) or not np.array_equal(m, m.T):
            raise ValueError("exchangeability matrix must be square and symmetric")
        if np.any(np.diag(m) != 1):
            raise ValueError("exchangeability matrix must have a unit diagonal")
        if not np.all((m == 0) | (m == 1)):
            raise ValueError("exchangeability matrix must be binary")
        bits = 0
        for c, (i, j) in enumerate(upper_cells(J)):
            if m[i, j]:
                bits |= 1 << c
        return cls(J, bits)


@dataclass(frozen=True)
class AnalysisConfig:
    p0: tuple[float, ...] | float = 0.15
    alternative: str = "greater"
    hpd_alpha: float = 0.05
    method: str = "mcmc"
    mcmc_iter: int = 200_000
    mcmc_burnin: int = 50_000
    seed: int = 20190415
    initial_config: ExchConfig | None = None
    flip_law: str = "geometric"

    def __post_init__(self):
        if self.flip_law not in ("geometric", "uniform"):
            raise ValueError(f"flip_law must be 'geometric' or 'uniform', got {self.flip_law!r}")
        if self.alternative not in ("greater", "less"):
            raise ValueError(f"alternative must be 'greater' or 'less', got {self.alternative!r}")
        if self.method not in ("exact", "mcmc"):
            raise ValueError(f"method must be 'exact' or 'mcmc', got {self.method!r}")
        if not 0.0 < self.hpd_alpha < 1.0:
            raise ValueError("hpd_alpha must lie in (0, 1)")
        if self.mcmc_iter < 1:
            raise ValueError("mcmc_iter must be positive")
        if self.mcmc_burnin < 0:
            raise ValueError("mcmc_burnin must be nonnegative")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        p0 = np.atleast_1d(np.asarray(self.p0, dtype=float))
        if np.any((p0 < 0) | (p0 > 1)):
            raise ValueError("null response rates must lie in [0, 1]")

    def p0_vector(self, J: int) -> np.ndarray:
        return _broadcast(self.p0, J, "p0")


def _check_row(j: int, row: Sequence[int], J: int) -> None:
    if len(row) != J:
        raise ContractViolation(f"row must have length {J}, got {len(row)}")
    if row[j] != 1:
        raise ContractViolation(f"row[{j}] must be 1 (a basket is exchangeable with itself)")


def log_marginal_row(j: int, row: Sequence[int], data: TrialData, prior: PriorConfig) -> float:
    """Log marginal density of basket ``j``'s responses given its exchangeability row.

    Baskets flagged in ``row`` are pooled with ``j`` under one beta prior;
    every basket left out contributes its own beta-binomial evidence ratio.
    """
    _check_row(j, row, data.J)
    a, b = prior.shape1, prior.shape2
    S, n = data.responses, data.sizes
    pooled_s = sum(S[h] for h in range(data.J) if row[h])
    pooled_f = sum(n[h] - S[h] for h in range(data.J) if row[h])
    total = log_beta(a[j] + pooled_s, b[j] + pooled_f) - log_beta(a[j], b[j])
    for i in range(data.J):
        if not row[i]:
            total += log_beta(a[i] + S[i], b[i] + n[i] - S[i]) - log_beta(a[i], b[i])
    return total


def log_config_prior(config: ExchConfig, prior: PriorConfig) -> float:
    """Independent-Bernoulli log prior over the upper-triangle cells."""
    total = 0.0
    for c, (i, j) in enumerate(upper_cells(config.J)):
        p = prior.prior_exch[i, j]
        q = p if (config.bits >> c) & 1 else 1.0 - p
        if q <= 0.0:
            return -math.inf
        total += math.log(q)
    return total


def log_config_score(config: ExchConfig, data: TrialData, prior: PriorConfig) -> float:
    """Unnormalized log posterior weight of a full exchangeability matrix."""
    lp = log_config_prior(config, prior)
    if lp == -math.inf:
        return lp
    return lp + sum(log_marginal_row(j, config.row(j), data, prior) for j in range(data.J))


def conditional_beta_shapes(j: int, row: Sequence[int], data: TrialData,
                            prior: PriorConfig) -> tuple[float, float]:
    _check_row(j, row, data.J)
    s = sum(data.responses[h] for h in range(data.J) if row[h])
    f = sum(data.sizes[h] - data.responses[h] for h in range(data.J) if row[h])
    return float(prior.shape1[j] + s), float(prior.shape2[j] + f)


def check_exact_feasible(J: int) -> None:
    if J > MAX_EXACT_BASKETS:
        raise ValueError(
            f"exact enumeration is infeasible for J={J} baskets "
            f"(limit {MAX_EXACT_BASKETS}); use the MCMC engine instead"
        )
    if J == MAX_EXACT_BASKETS:
        warnings.warn(
            f"exact enumeration over {2 ** (J * (J - 1) // 2)} configurations is slow; "
            "consider the MCMC engine",
            RuntimeWarning,
            stacklevel=3,
        )


def enumerate_configs(J: int) -> Iterator[ExchConfig]:
    """Every symmetric configuration for ``J`` baskets, in ascending bit order."""
    if J < 1:
        raise ValueError("J must be at least 1")
    check_exact_feasible(J)
    for bits in range(1 << (J * (J - 1) // 2)):
        yield ExchConfig(J, bits)


def default_initial_config(prior: PriorConfig) -> ExchConfig:
    """round(prior - 0.001) cellwise; the identity under the reference prior."""
    m = np.round(prior.prior_exch - 0.001).astype(int)
    np.fill_diagonal(m, 1)
    return ExchConfig.from_matrix(m)


class RowTables:
    """Per-basket lookups over the 2^(J-1) row patterns.

    Pattern ``g`` for basket ``j`` sets bit ``t`` when the ``t``-th other
    basket (ascending index, skipping ``j``) is pooled with ``j``. Single
    entries are memoized on demand; the dense arrays are built only when
    requested, which the exact engine does for small ``J``.
    """

    def __init__(self, data: TrialData, prior: PriorConfig):
        if prior.J != data.J:
            raise ValueError(f"prior is for {prior.J} baskets, data has {data.J}")
        self.data = data
        self.prior = prior
        J = data.J
        self.others = [[h for h in range(J) if h != j] for j in range(J)]
        self.cell_maps = [[ExchConfig.cell_index(J, j, h) for h in self.others[j]] for j in range(J)]
        self._marg: dict[tuple[int, int], float] = {}
        self._shapes: dict[tuple[int, int], tuple[float, float]] = {}

    def row_vector(self, j: int, g: int) -> tuple[int, ...]:
        row = [0] * self.data.J
        row[j] = 1
        for t, h in enumerate(self.others[j]):
            if (g >> t) & 1:
                row[h] = 1
        return tuple(row)

    def row_log_marg(self, j: int, g: int) -> float:
        key = (j, g)
        val = self._marg.get(key)
        if val is None:
            val = self._marg[key] = log_marginal_row(j, self.row_vector(j, g), self.data, self.prior)
        return val

    def row_shapes(self, j: int, g: int) -> tuple[float, float]:
        key = (j, g)
        val = self._shapes.get(key)
        if val is None:
            val = self._shapes[key] = conditional_beta_shapes(j, self.row_vector(j, g), self.data, self.prior)
        return val

    def _dense(self, fn) -> np.ndarray:
        J = self.data.J
        return np.array([[fn(j, g) for g in range(1 << (J - 1))] for j in range(J)])

    @cached_property
    def log_marg(self) -> np.ndarray:
        return self._dense(self.row_log_marg)

    @cached_property
    def shape_a(self) -> np.ndarray:
        return self._dense(lambda j, g: self.row_shapes(j, g)[0])

    @cached_property
    def shape_b(self) -> np.ndarray:
        return self._dense(lambda j, g: self.row_shapes(j, g)[1])

    def row_pattern(self, j: int, bits: int) -> int:
        g = 0
        for t, c in enumerate(self.cell_maps[j]):
            g |= ((bits >> c) & 1) << t
        return g

    def row_patterns(self, codes: np.ndarray) -> np.ndarray:
        """Vectorized :meth:`row_pattern` over int64 config codes; shape (J, K)."""
        codes = np.asarray(codes, dtype=np.int64)
        out = np.zeros((self.data.J, codes.size), dtype=np.int64)
        for j, cells in enumerate(self.cell_maps):
            for t, c in enumerate(cells):
                out[j] |= ((codes >> c) & 1) << t
        return out
