"""``drn`` command line: ingest, h1, h2, h3, report and generate subcommands.

Exit codes: 0 success, 2 input errors, 3 statistical preconditions unmet.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import pipeline
from .errors import InputError, PreconditionError

log = logging.getLogger("drn")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_PRECONDITION = 3


def _formats(text: str) -> tuple:
    items = tuple(dict.fromkeys(s.strip() for s in text.split(",") if s.strip()))
    if not items:
        raise argparse.ArgumentTypeError("at least one format is required")
    bad = [f for f in items if f not in pipeline.FORMATS]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown formats {bad}; choose from {','.join(pipeline.FORMATS)}")
    return items


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="drn", description="Disaster response network assessment")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", type=Path, default=Path("drn-out"), help="output directory (default: drn-out)")
    common.add_argument("--seed", type=int, default=0, help="random seed (default: 0)")
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging")

    run = argparse.ArgumentParser(add_help=False, parents=[common])
    run.add_argument("--input", action="append", type=Path, default=[], help="survey CSV (repeatable)")
    run.add_argument("--codebook", type=Path, help="codebook JSON (default: bundled survey codebook)")
    run.add_argument("--mode", choices=("star", "aggregate"), default="aggregate",
                     help="alter-alter ties: none (star) or from the organization network (aggregate)")
    run.add_argument("--clusters", type=int, default=3, help="clusters sampled for micro-level tests")
    run.add_argument("--format", dest="formats", type=_formats, default=pipeline.FORMATS,
                     help="comma-separated subset of csv,json,markdown")
    run.add_argument("--clique-limit", type=int, default=200_000,
                     help="abort when more cliques than this are enumerated")

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("ingest", parents=[run], help="parse surveys, compute profiles, print response counts")
    sub.add_parser("h1", parents=[run], help="cliques, co-membership, tier predictions, cluster census")
    sub.add_parser("h2", parents=[run], help="Kruskal-Wallis comparisons")
    sub.add_parser("h3", parents=[run], help="Spearman correlation matrices")
    sub.add_parser("report", parents=[run], help="consolidated JSON/markdown report")
    gen = sub.add_parser("generate", parents=[common], help="write a synthetic survey and its codebook")
    gen.add_argument("--config", type=Path, help="generator key=value file")
    return parser


def _run_config(args) -> pipeline.RunConfig:
    return pipeline.RunConfig(
        out=args.out, inputs=args.input, codebook=args.codebook, mode=args.mode,
        clusters=args.clusters, seed=args.seed, formats=args.formats, clique_limit=args.clique_limit,
    )


def _print_counts(summary: dict) -> None:
    for code, n in summary["counts"].items():
        print(f"{summary['group_labels'][code]} ({code}): {n}")
    print(f"Total: {summary['n_records']}")


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="drn: %(levelname)s: %(message)s", stream=sys.stderr, force=True)
    try:
        if args.command == "generate":
            info = pipeline.cmd_generate(args.out, args.seed, args.config)
            print(f"wrote {info['records']} records to {args.out / 'survey.csv'}")
            return EXIT_OK
        cfg = _run_config(args)
        if args.command == "ingest":
            _print_counts(pipeline.cmd_ingest(cfg))
        elif args.command == "h1":
            h1 = pipeline.cmd_h1(cfg)
            hold = h1["tiers"]["holdout"]
            print(f"{len(h1['cliques']['cliques'])} cliques; 2-clique census {h1['clusters']['size']} clusters; "
                  f"held-out tiers {hold['correct']}/{hold['total']}")
        elif args.command == "h2":
            pipeline.cmd_h2(cfg)
        elif args.command == "h3":
            pipeline.cmd_h3(cfg)
        elif args.command == "report":
            pipeline.cmd_report(cfg)
    except PreconditionError as exc:
        log.error("%s", exc)
        return EXIT_PRECONDITION
    except InputError as exc:
        log.error("%s", exc)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
