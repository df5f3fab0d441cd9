"""Meta-baskets from community detection on the PEP-weighted graph."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .core import ExchConfig
from .summaries import BasketSummary, MemFit, _p0_array, summarize_draws


@dataclass(frozen=True)
class ClusterAssignment:
    clusters: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        blocks = tuple(tuple(sorted(int(i) for i in c)) for c in self.clusters)
        if any(not b for b in blocks):
            raise ValueError("clusters must be nonempty")
        members = [i for b in blocks for i in b]
        if len(members) != len(set(members)):
            raise ValueError("clusters must be disjoint")
        if sorted(members) != list(range(len(members))):
            raise ValueError("clusters must cover baskets 0..J-1")
        object.__setattr__(self, "clusters", tuple(sorted(blocks, key=lambda b: b[0])))

    @property
    def labels(self) -> list[str]:
        return [f"Cluster {k + 1}" for k in range(len(self.clusters))]

    @property
    def J(self) -> int:
        return sum(len(c) for c in self.clusters)

    def membership(self) -> list[int]:
        out = [0] * self.J
        for k, block in enumerate(self.clusters):
            for i in block:
                out[i] = k
        return out

    @classmethod
    def from_membership(cls, membership: Sequence[int]) -> "ClusterAssignment":
        groups: dict[int, list[int]] = {}
        for i, c in enumerate(membership):
            groups.setdefault(c, []).append(i)
        return cls(tuple(tuple(g) for g in groups.values()))


def _adjacency(pep) -> np.ndarray:
    w = np.array(pep, dtype=float)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise ValueError("PEP matrix must be square")
    if w.shape[0] == 0:
        raise ValueError("cannot cluster an empty graph")
    if not np.allclose(w, w.T):
        raise ValueError("PEP matrix must be symmetric")
    np.fill_diagonal(w, 0.0)
    return w


def modularity(pep, membership: Sequence[int]) -> float:
    """Newman modularity of a partition of the PEP graph (no self-loops)."""
    w = _adjacency(pep)
    two_m = w.sum()
    if two_m == 0:
        return 0.0
    k = w.sum(axis=1)
    c = np.asarray(membership)
    same = c[:, None] == c[None, :]
    return float(((w - np.outer(k, k) / two_m) * same).sum() / two_m)


def _one_level(w: np.ndarray, order: Sequence[int]) -> list[int]:
    """Local moving phase: greedy node moves until no gain remains."""
    n = w.shape[0]
    two_m = w.sum()
    k = w.sum(axis=1)
    community = list(range(n))
    tot = k.copy()
    moved = True
    while moved:
        moved = False
        for i in order:
            old = community[i]
            tot[old] -= k[i]
            links: dict[int, float] = {}
            for j in range(n):
                if j != i and w[i, j] > 0:
                    links[community[j]] = links.get(community[j], 0.0) + w[i, j]
            best, best_gain = old, links.get(old, 0.0) - tot[old] * k[i] / two_m
            for c in sorted(links):
                gain = links[c] - tot[c] * k[i] / two_m
                if gain > best_gain + 1e-12 or (abs(gain - best_gain) <= 1e-12 and c < best):
                    best, best_gain = c, gain
            tot[best] += k[i]
            community[i] = best
            if best != old:
                moved = True
    return community


def cluster_louvain(pep, rng: np.random.Generator | None = None) -> ClusterAssignment:
    """Louvain modularity maximization on the PEP-weighted basket graph.

    Vertices are swept in index order; with ``rng`` the sweep order at each
    level is a random permutation instead. Equal gains go to the lowest
    community index.
    """
    w = _adjacency(pep)
    J = w.shape[0]
    membership = list(range(J))
    if w.sum() == 0:
        return ClusterAssignment.from_membership(membership)
    graph = w
    while True:
        n = graph.shape[0]
        order = rng.permutation(n).tolist() if rng is not None else list(range(n))
        community = _one_level(graph, order)
        relabel = {c: r for r, c in enumerate(sorted(set(community)))}
        community = [relabel[c] for c in community]
        n_new = len(relabel)
        if n_new == n:
            break
        membership = [community[m] for m in membership]
        agg = np.zeros((n_new, n_new))
        for a in range(n):
            for b in range(n):
                agg[community[a], community[b]] += graph[a, b]
        graph = agg
    return ClusterAssignment.from_membership(membership)


def cluster_baskets(pep, cluster_function: Callable[..., ClusterAssignment | Sequence[int]] = cluster_louvain,
                    **kwargs) -> ClusterAssignment:
    """Apply any graph partitioning function to the PEP matrix.

    ``cluster_function`` may return a :class:`ClusterAssignment` or a
    membership list (one community id per basket).
    """
    result = cluster_function(np.asarray(pep, dtype=float), **kwargs)
    if isinstance(result, ClusterAssignment):
        return result
    return ClusterAssignment.from_membership(list(result))


def cluster_draws(fit: MemFit, block: Sequence[int]) -> np.ndarray:
    return np.concatenate([fit.pi_draws[i] for i in block])


def cluster_summaries(fit: MemFit, assignment: ClusterAssignment) -> list[BasketSummary]:
    """Summaries of pooled member draws, one per cluster.

    Exceedance compares each member's draws with that member's own null
    rate before pooling the indicators.
    """
    p0 = _p0_array(fit.config.p0, fit.data.J)
    alt = fit.config.alternative
    out = []
    for label, block in zip(assignment.labels, assignment.clusters):
        if not block:
            raise ValueError("empty cluster")
        prob = cluster_probability(fit, block, p0, alt)
        out.append(summarize_draws(label, cluster_draws(fit, block), float(np.mean(p0[list(block)])),
                                   prob, fit.config.hpd_alpha, fit.seed))
    return out


def cluster_probability(fit: MemFit, block: Sequence[int], p0: np.ndarray, alternative: str) -> float:
    hits = 0
    total = 0
    for i in block:
        d = fit.pi_draws[i]
        hits += int(np.count_nonzero(d > p0[i] if alternative == "greater" else d < p0[i]))
        total += d.size
    return hits / total


def cluster_pep(pep, assignment: ClusterAssignment) -> np.ndarray:
    """Mean PEP between clusters; within a cluster, the mean over distinct pairs."""
    pep = np.asarray(pep, dtype=float)
    C = len(assignment.clusters)
    out = np.eye(C)
    for k, bk in enumerate(assignment.clusters):
        for l, bl in enumerate(assignment.clusters):
            vals = [pep[i, j] for i in bk for j in bl if i != j]
            out[k, l] = float(np.mean(vals)) if vals else 1.0
    return out


def cluster_map(map_config: ExchConfig, assignment: ClusterAssignment) -> np.ndarray:
    """1 where every member pair across (or within) the clusters is exchangeable in the MAP."""
    m = map_config.matrix()
    C = len(assignment.clusters)
    out = np.ones((C, C), dtype=int)
    for k, bk in enumerate(assignment.clusters):
        for l, bl in enumerate(assignment.clusters):
            out[k, l] = int(all(m[i, j] for i in bk for j in bl))
    return out
