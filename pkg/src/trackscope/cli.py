"""trackscope command line: extract, analyze <stage>, run."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .config import ConfigError, RunConfig, build_config, read_config_file
from .extract import CorpusError
from .graph import GraphError
from .reports import INSUFFICIENT, STAGES, PrerequisiteError, ReportError, run_all, stage_extract
from .tables import TableError

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2
EXIT_INSUFFICIENT = 3


def _add_common(p: argparse.ArgumentParser):
    g = p.add_argument_group("inputs and outputs")
    g.add_argument("--config", help="key=value config file; flags given here override it")
    g.add_argument("--out", help="output directory holding all stage artifacts (default: out)")
    g.add_argument("--suffix-list", help="public suffix list file (default: bundled snapshot)")
    g.add_argument("--include-private", action="store_const", const=True,
                   help="also apply the PRIVATE section of the suffix list")
    g.add_argument("--labels", help="third-party labels CSV: pld,company,category,country,is_tracker")
    g.add_argument("--categories", help="site category map CSV: pld,category,criticality")
    g.add_argument("--indicators", help="country indicators CSV: tld,democracy,press_freedom,...")
    g.add_argument("--country-tlds", help="ccTLD<TAB>country table (default: bundled 50 countries)")
    g.add_argument("--seed", type=int, help="seed for permutation tests and the Louvain grid (default 0)")
    g.add_argument("--strict", action="store_true",
                   help="exit with status 3 when a report records insufficient data")
    g.add_argument("-v", "--verbose", action="store_true")
    a = p.add_argument_group("analysis parameters")
    a.add_argument("--damping", type=float, help="PageRank damping factor (default 0.85)")
    a.add_argument("--tol", type=float, help="PageRank L1 convergence tolerance (default 1e-10)")
    a.add_argument("--max-iter", type=int, help="PageRank iteration cap (default 200)")
    a.add_argument("--dangling", choices=["uniform", "self"], help="PageRank dangling-node mode")
    a.add_argument("--powerlaw-method", choices=["auto", "approx", "zeta"],
                   help="alpha estimator: closed-form approximation, exact zeta likelihood, or exact "
                        "below x_min 100 (default auto)")
    a.add_argument("--permutations", type=int, help="assortativity permutation rounds (default 1000)")
    a.add_argument("--g2-alpha", type=float, help="significance level for co-occurrence pruning (default 0.01)")
    a.add_argument("--no-bonferroni", dest="bonferroni", action="store_const", const=False,
                   help="do not divide the pruning level by the number of candidate edges")
    a.add_argument("--resolutions", help="comma-separated Louvain resolutions (default 0.5,0.75,1,1.25,1.5)")
    a.add_argument("--grid-seeds", type=int, help="Louvain runs per resolution (default 10)")
    a.add_argument("--core-order", choices=["pre", "post"], help="apply the 2-core before or after clustering")
    a.add_argument("--unweighted", dest="weighted", action="store_const", const=False,
                   help="cluster on binarized co-occurrence edges")
    a.add_argument("--top-n", type=int, help="rows in the rank-share table (default 20)")
    a.add_argument("--condprob-top", type=int, help="trackers in the conditional-probability matrix (default 15)")
    a.add_argument("--prevalence-top", type=int, help="trackers tested for category prevalence (default 20)")
    a.add_argument("--prevalence-level", choices=["company", "pld"],
                   help="test prevalence per company (default) or per tracker PLD")
    a.add_argument("--dominant-companies", help="comma-separated companies for the dominance flag")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trackscope",
        description="Third-party tracker extraction and network analysis over archived web pages.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="extract embedding edges from WARC files or manifests")
    p.add_argument("corpus", nargs="*", help="WARC files, manifest TSVs or directories of them")
    p.add_argument("--workers", type=int, help="worker processes for page parsing (default 1)")
    _add_common(p)

    p = sub.add_parser("analyze", help="run one analysis over extracted artifacts")
    p.add_argument("stage", choices=sorted(STAGES))
    _add_common(p)

    p = sub.add_parser("run", help="extract and run every configured analysis")
    p.add_argument("corpus", nargs="*", help="WARC files, manifest TSVs or directories of them")
    p.add_argument("--workers", type=int, help="worker processes for page parsing (default 1)")
    _add_common(p)
    return parser


_NOT_CONFIG = {"config", "command", "stage", "strict", "verbose"}


def resolve_config(args: argparse.Namespace) -> RunConfig:
    file_values = read_config_file(args.config) if args.config else {}
    overrides = {k: v for k, v in vars(args).items() if k not in _NOT_CONFIG}
    if overrides.get("corpus") == []:
        overrides["corpus"] = None
    return build_config(file_values, overrides)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        if args.command == "analyze":
            cfg.validate(STAGES[args.stage][1])
        else:
            cfg.validate(("corpus",))
    except ConfigError as exc:
        print(f"trackscope: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out = Path(cfg.out)
    try:
        if args.command == "analyze":
            if not out.is_dir():
                raise PrerequisiteError(f"{out} does not exist; run `trackscope extract` first")
            doc = STAGES[args.stage][0](cfg)
            return _finish(doc, args.strict)
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "extract":
            doc = stage_extract(cfg)
            print(f"extracted {doc['edges']} edges from {doc['pages']} pages "
                  f"({doc['skipped']} records skipped) into {out}")
            return EXIT_OK
        stages, ok = run_all(cfg)
        for name, st in stages.items():
            line = f"{name}: {st['status']}"
            if "message" in st:
                line += f" ({st['message']})"
            print(line)
        if not ok:
            return EXIT_FAILED
        if args.strict and any(st["status"] == "insufficient_data" for st in stages.values()):
            return EXIT_INSUFFICIENT
        return EXIT_OK
    except (CorpusError, PrerequisiteError, ConfigError, TableError, GraphError, ReportError) as exc:
        print(f"trackscope: {exc}", file=sys.stderr)
        return EXIT_FAILED
    except INSUFFICIENT as exc:
        print(f"trackscope: insufficient data: {exc}", file=sys.stderr)
        return EXIT_INSUFFICIENT


def _finish(doc: dict, strict: bool) -> int:
    if doc["status"] != "ok":
        print(f"trackscope: {doc['report']}: {doc.get('message', doc['status'])}", file=sys.stderr)
        if strict:
            return EXIT_INSUFFICIENT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
