"""Command-line entry point: fit a MEM to a CSV of basket outcomes."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .core import MAX_EXACT_BASKETS, AnalysisConfig, PriorConfig
from .ingest import DataFormatError, ingest_csv, ingest_long_csv, read_prior_matrix
from .report import build_report, emit_densities, emit_exchangeogram, render_summary
from .summaries import fit

DEFAULT_SEED = AnalysisConfig.seed

log = logging.getLogger("basket_mem")


def _real_or_list(text: str) -> float | tuple[float, ...]:
    try:
        values = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number or comma-separated numbers, got {text!r}") from None
    return values[0] if len(values) == 1 else values


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {value}")
    return value


def _nonneg_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be a nonnegative integer, got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="basket-mem",
        description="Symmetric multi-source exchangeability model for binary basket trials.",
    )
    p.add_argument("--data", required=True, type=Path, help="CSV with columns basket, responders, evaluable")
    p.add_argument("--format", choices=("wide", "long"), default="wide",
                   help="wide: one row per basket; long: one row per patient (basket, response)")
    p.add_argument("--method", choices=("exact", "mcmc"), default="mcmc")
    p.add_argument("--p0", type=_real_or_list, default=0.15, help="null response rate(s)")
    p.add_argument("--alternative", choices=("greater", "less"), default="greater")
    p.add_argument("--shape1", type=_real_or_list, default=0.5)
    p.add_argument("--shape2", type=_real_or_list, default=0.5)
    p.add_argument("--prior", default="0.5",
                   help="off-diagonal prior exchangeability probability, or a CSV path holding the J x J matrix")
    p.add_argument("--hpd-alpha", type=float, default=0.05)
    p.add_argument("--iter", type=_positive_int, default=200_000,
                   help="retained MCMC iterations (exact: posterior draws per basket)")
    p.add_argument("--burnin", type=_nonneg_int, default=50_000)
    p.add_argument("--flip-law", choices=("geometric", "uniform"), default="geometric",
                   help="law of the number of cells flipped per MCMC proposal")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--out", type=Path, default=Path("mem_output"))
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _prior(args, J: int, parser: argparse.ArgumentParser) -> PriorConfig:
    try:
        value = float(args.prior)
    except ValueError:
        path = Path(args.prior)
        if not path.is_file():
            parser.error(f"--prior must be a number or an existing CSV file, got {args.prior!r}")
        value = read_prior_matrix(path, J)
    return PriorConfig.build(J, args.shape1, args.shape2, value)


def run_analysis(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        reader = ingest_long_csv if args.format == "long" else ingest_csv
        data = reader(args.data)
    except (OSError, DataFormatError) as exc:
        print(f"basket-mem: error: {exc}", file=sys.stderr)
        return 1
    if args.method == "exact" and data.J > MAX_EXACT_BASKETS:
        parser.error(f"exact enumeration is infeasible for {data.J} baskets "
                     f"(limit {MAX_EXACT_BASKETS}); use --method mcmc")
    try:
        prior = _prior(args, data.J, parser)
        config = AnalysisConfig(
            p0=args.p0, alternative=args.alternative, hpd_alpha=args.hpd_alpha, method=args.method,
            mcmc_iter=args.iter, mcmc_burnin=args.burnin, seed=args.seed, flip_law=args.flip_law,
        )
        config.p0_vector(data.J)
    except (ValueError, DataFormatError) as exc:
        parser.error(str(exc))

    try:
        log.info("fitting %d baskets with the %s engine", data.J, args.method)
        result = fit(data, prior, config)
        report = build_report(result)
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "report.json").write_text(report.to_json(), encoding="utf-8")
        (args.out / "summary.txt").write_text(render_summary(report), encoding="utf-8")
        emit_densities(result, report.cluster_members, args.out / "densities.csv")
        emit_exchangeogram(report.pep, data.basket_names, args.out / "exchangeogram.svg")
    except (OSError, ValueError, ArithmeticError) as exc:
        print(f"basket-mem: error: {exc}", file=sys.stderr)
        return 1
    log.info("wrote outputs to %s", args.out)
    return 0


def main() -> None:
    sys.exit(run_analysis())


if __name__ == "__main__":
    main()
