"""Symmetric multi-source exchangeability models for basket trials."""

from .clustering import ClusterAssignment, cluster_baskets, cluster_louvain, cluster_map, cluster_pep, cluster_summaries
from .core import AnalysisConfig, ExchConfig, PriorConfig, TrialData
from .exact import ExactPosterior, fit_exact
from .ingest import ingest_csv, ingest_long_csv, load_vemu_wide
from .mcmc import McmcTrace, fit_mcmc
from .report import MemReport, build_report, render_summary, update_p0
from .summaries import BasketSummary, MemFit, ess, fit, posterior_probability, sample_posterior, summarize

__all__ = [
    "AnalysisConfig",
    "BasketSummary",
    "ClusterAssignment",
    "ExactPosterior",
    "ExchConfig",
    "McmcTrace",
    "MemFit",
    "MemReport",
    "PriorConfig",
    "TrialData",
    "build_report",
    "cluster_baskets",
    "cluster_louvain",
    "cluster_map",
    "cluster_pep",
    "cluster_summaries",
    "ess",
    "fit",
    "fit_exact",
    "fit_mcmc",
    "ingest_csv",
    "ingest_long_csv",
    "load_vemu_wide",
    "posterior_probability",
    "render_summary",
    "sample_posterior",
    "summarize",
    "update_p0",
]
