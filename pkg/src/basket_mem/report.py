"""Analysis report: JSON model, printed summary and file exports."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence
from xml.sax.saxutils import escape

import numpy as np

from .clustering import (
    ClusterAssignment,
    cluster_baskets,
    cluster_draws,
    cluster_louvain,
    cluster_map,
    cluster_pep,
    cluster_probability,
    cluster_summaries,
)
from .numerics import kde_curve
from .summaries import (
    BasketSummary,
    MemFit,
    _check_alternative,
    _p0_array,
    posterior_probability,
    sample_posterior,
    summarize,
)

RULE_WIDTH = 80


@dataclass
class MemReport:
    call: dict
    basket_rows: list[BasketSummary]
    cluster_rows: list[BasketSummary]
    cluster_members: ClusterAssignment
    pep: np.ndarray
    map: np.ndarray
    cluster_pep: np.ndarray
    cluster_map: np.ndarray
    seed: int
    method: str
    alternative: str = "greater"
    hpd_alpha: float = 0.05
    extra: dict = field(default_factory=dict)

    @property
    def basket_names(self) -> list[str]:
        return [r.name for r in self.basket_rows]

    def to_dict(self) -> dict:
        names = self.basket_names
        return {
            "call": self.call,
            "method": self.method,
            "seed": self.seed,
            "alternative": self.alternative,
            "hpd_alpha": self.hpd_alpha,
            "basket": [r.to_dict() for r in self.basket_rows],
            "cluster": [r.to_dict() for r in self.cluster_rows],
            "cluster_baskets": [
                {"label": label, "members": [names[i] for i in block], "indices": list(block)}
                for label, block in zip(self.cluster_members.labels, self.cluster_members.clusters)
            ],
            "basket_pep": self.pep.tolist(),
            "basket_map": self.map.tolist(),
            "cluster_pep": self.cluster_pep.tolist(),
            "cluster_map": self.cluster_map.tolist(),
            "extra": self.extra,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "MemReport":
        return cls(
            call=d["call"],
            basket_rows=[BasketSummary.from_dict(r) for r in d["basket"]],
            cluster_rows=[BasketSummary.from_dict(r) for r in d["cluster"]],
            cluster_members=ClusterAssignment(tuple(tuple(c["indices"]) for c in d["cluster_baskets"])),
            pep=np.array(d["basket_pep"], dtype=float),
            map=np.array(d["basket_map"], dtype=int),
            cluster_pep=np.array(d["cluster_pep"], dtype=float),
            cluster_map=np.array(d["cluster_map"], dtype=int),
            seed=d["seed"],
            method=d["method"],
            alternative=d["alternative"],
            hpd_alpha=d["hpd_alpha"],
            extra=d.get("extra", {}),
        )

    @classmethod
    def from_json(cls, text: str) -> "MemReport":
        return cls.from_dict(json.loads(text))


def resolved_call(fit: MemFit) -> dict:
    cfg = fit.config
    J = fit.data.J
    call = {
        "function": f"mem_{fit.method}",
        "basket_names": list(fit.data.basket_names),
        "responses": list(fit.data.responses),
        "size": list(fit.data.sizes),
        "p0": _p0_array(cfg.p0, J).tolist(),
        "alternative": cfg.alternative,
        "shape1": fit.prior.shape1.tolist(),
        "shape2": fit.prior.shape2.tolist(),
        "prior": fit.prior.prior_exch.tolist(),
        "hpd_alpha": cfg.hpd_alpha,
        "seed": cfg.seed,
    }
    if fit.method == "mcmc":
        call.update(
            mcmc_iter=cfg.mcmc_iter,
            mcmc_burnin=cfg.mcmc_burnin,
            flip_law=cfg.flip_law,
            initial_mem=cfg.initial_config.matrix().tolist() if cfg.initial_config else None,
        )
    else:
        call["n_draws"] = cfg.mcmc_iter
    return call


def build_report(fit: MemFit, cluster_function: Callable = cluster_louvain) -> MemReport:
    """Summarize a fit at basket and cluster level."""
    assignment = cluster_baskets(fit.pep, cluster_function)
    extra = {}
    if fit.method == "mcmc":
        extra["acceptance_rate"] = fit.engine_output.acceptance_rate
        extra["distinct_configs"] = len(fit.engine_output.config_tally)
    return MemReport(
        call=resolved_call(fit),
        basket_rows=summarize(fit),
        cluster_rows=cluster_summaries(fit, assignment),
        cluster_members=assignment,
        pep=np.array(fit.pep, dtype=float),
        map=fit.map_config.matrix(),
        cluster_pep=cluster_pep(fit.pep, assignment),
        cluster_map=cluster_map(fit.map_config, assignment),
        seed=fit.seed,
        method=fit.method,
        alternative=fit.config.alternative,
        hpd_alpha=fit.config.hpd_alpha,
        extra=extra,
    )


def update_p0(fit: MemFit, report: MemReport, p0, alternative: str | None = None) -> MemReport:
    """Recompute basket and cluster posterior probabilities under new null rates.

    Everything else in ``report`` is carried over untouched.
    """
    J = fit.data.J
    p0 = _p0_array(p0, J)
    alternative = alternative or report.alternative
    _check_alternative(alternative)
    probs = posterior_probability(fit, p0, alternative)
    baskets = [replace(r, p0=float(p0[j]), post_prob=float(probs[j])) for j, r in enumerate(report.basket_rows)]
    clusters = [
        replace(r, p0=float(np.mean(p0[list(block)])),
                post_prob=cluster_probability(fit, block, p0, alternative))
        for r, block in zip(report.cluster_rows, report.cluster_members.clusters)
    ]
    call = dict(report.call, p0=p0.tolist(), alternative=alternative)
    return replace(report, call=call, basket_rows=baskets, cluster_rows=clusters, alternative=alternative)


def sample_cluster_posterior(fit: MemFit, assignment: ClusterAssignment, n: int,
                             rng: np.random.Generator) -> np.ndarray:
    """Draws from each cluster's pooled posterior, shape (C, n)."""
    draws = sample_posterior(fit, n, rng)
    out = np.empty((len(assignment.clusters), n))
    for k, block in enumerate(assignment.clusters):
        member = rng.integers(0, len(block), size=n)
        out[k] = draws[np.asarray(block)[member], np.arange(n)]
    return out


def _fmt(x: float) -> str:
    return f"{x:.3f}"


def _table(row_labels: Sequence[str], col_labels: Sequence[str], cells: Sequence[Sequence[str]]) -> str:
    label_w = max(len(s) for s in row_labels)
    widths = [max(len(c), *(len(row[k]) for row in cells)) for k, c in enumerate(col_labels)]
    lines = [" " * label_w + "".join(" " + c.rjust(w) for c, w in zip(col_labels, widths))]
    for label, row in zip(row_labels, cells):
        lines.append(label.ljust(label_w) + "".join(" " + v.rjust(w) for v, w in zip(row, widths)))
    return "\n".join(lines)


def _rule(title: str) -> str:
    head = f"-- {title} "
    return head + "-" * max(0, RULE_WIDTH - len(head))


def _summary_block(rows: Sequence[BasketSummary], alternative: str, hpd_alpha: float) -> list[str]:
    names = [r.name for r in rows]
    out = [
        f"The Null Response Rates (alternative is {alternative}):",
        _table(["Null", "Posterior Prob"], names,
               [[_fmt(r.p0) for r in rows], [_fmt(r.post_prob) for r in rows]]),
        "",
        "Posterior Mean and Median Response Rates:",
        _table(["Mean", "Median"], names,
               [[_fmt(r.mean) for r in rows], [_fmt(r.median) for r in rows]]),
        "",
        f"Highest Posterior Density Interval with Coverage Probability {1 - hpd_alpha:g}:",
        _table(["Lower Bound", "Upper Bound"], names,
               [[_fmt(r.hpd.lower) for r in rows], [_fmt(r.hpd.upper) for r in rows]]),
        "",
        "Posterior Effective Sample Size:",
        _table([""], names, [[_fmt(r.ess) for r in rows]]),
    ]
    return out


def render_summary(report: MemReport) -> str:
    """Human-readable summary, computed only from the report's content."""
    call = report.call
    args = ", ".join(f"{k}={json.dumps(v)}" for k, v in call.items() if k != "function")
    lines = ["", _rule("The MEM Model Call"), "", f"{call.get('function', 'mem')}({args})", ""]
    lines += [_rule("The Basket Summary"), ""]
    lines += _summary_block(report.basket_rows, report.alternative, report.hpd_alpha)
    lines += ["", _rule("The Cluster Summary"), ""]
    names = report.basket_names
    for label, block in zip(report.cluster_members.labels, report.cluster_members.clusters):
        lines.append(label)
        lines.append(" " + " ".join(json.dumps(names[i], ensure_ascii=False) for i in block))
    lines.append("")
    lines += _summary_block(report.cluster_rows, report.alternative, report.hpd_alpha)
    lines += ["", _rule("Posterior Exchangeability Probability"), ""]
    lines.append(_table(names, names, [[_fmt(v) for v in row] for row in report.pep]))
    lines.append("")
    return "\n".join(lines)


def _ramp(value: float) -> str:
    # white -> dark blue
    lo, hi = (255, 255, 255), (8, 48, 107)
    t = min(1.0, max(0.0, float(value)))
    r, g, b = (round(a + (c - a) * t) for a, c in zip(lo, hi))
    return f"#{r:02x}{g:02x}{b:02x}"


def exchangeogram_svg(matrix, names: Sequence[str], cell: int = 60) -> str:
    """Lower-triangle heat map of a symmetric [0, 1] matrix, values to 2 decimals."""
    m = np.asarray(matrix, dtype=float)
    J = m.shape[0]
    if m.shape != (J, J) or not np.allclose(m, m.T):
        raise ValueError("exchangeogram needs a symmetric square matrix")
    if len(names) != J:
        raise ValueError("one label per row is required")
    label_w = 8 * max(len(n) for n in names) + 10
    width = label_w + J * cell + 10
    height = J * cell + label_w + 10
    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
    ]
    for i in range(J):
        y = 5 + i * cell
        parts.append(f'<text x="{label_w - 5}" y="{y + cell / 2 + 4:g}" text-anchor="end">{escape(names[i])}</text>')
        for j in range(i + 1):
            x = label_w + j * cell
            v = m[i, j]
            fg = "#ffffff" if v > 0.5 else "#000000"
            parts.append(f'<rect x="{x}" y="{y}" width="{cell}" height="{cell}" '
                         f'fill="{_ramp(v)}" stroke="#808080" data-row="{i}" data-col="{j}"/>')
            parts.append(f'<text x="{x + cell / 2:g}" y="{y + cell / 2 + 4:g}" text-anchor="middle" '
                         f'fill="{fg}">{v:.2f}</text>')
    base = 5 + J * cell + 5
    for j in range(J):
        x = label_w + j * cell + cell / 2
        parts.append(f'<text x="{x:g}" y="{base}" text-anchor="end" '
                     f'transform="rotate(-90 {x:g} {base})">{escape(names[j])}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_exchangeogram(matrix, names: Sequence[str], path) -> Path:
    path = Path(path)
    path.write_text(exchangeogram_svg(matrix, names), encoding="utf-8")
    return path


def emit_densities(fit: MemFit, assignment: ClusterAssignment, path, grid_points: int = 512) -> Path:
    """Kernel density curves for every basket and cluster as long-format CSV."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["entity_type", "entity_name", "x", "density"])
        for j, name in enumerate(fit.data.basket_names):
            for x, d in kde_curve(fit.pi_draws[j], grid_points):
                writer.writerow(["basket", name, repr(x), repr(d)])
        for label, block in zip(assignment.labels, assignment.clusters):
            for x, d in kde_curve(cluster_draws(fit, block), grid_points):
                writer.writerow(["cluster", label, repr(x), repr(d)])
    return path
