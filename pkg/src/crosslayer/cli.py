"""Command-line entry point.

Subcommands: ``gen`` (synthesize both layers), ``seeds`` (influence seed
selection), ``agents`` (agent assignment), ``experiment`` (CSV study
drivers). Exit codes: 0 success, 1 usage error, 2 bad input or domain
error, 3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import sys

from .errors import CrosslayerError, InternalError, ParseError
from .experiments import (ExperimentConfig, cmd_agents, cmd_experiment,
                          cmd_gen, cmd_seeds, parse_kv)


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse exits 2 by default; usage errors are 1
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override one config key (repeatable)")
    p.add_argument("--seed", type=int, help="override rng_seed")
    p.add_argument("--workers", type=int, help="numba thread count")
    p.add_argument("--out", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="crosslayer",
                     description="Two-layer influence seeding and agent selection")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    _add_common(sub.add_parser("gen", help="generate both layers and the mapping"))
    p = sub.add_parser("seeds", help="select influence seeds")
    _add_common(p)
    p.add_argument("--algorithm", choices=["celf", "greedy"], default="celf")
    _add_common(sub.add_parser("agents", help="compute the agent assignment"))
    p = sub.add_parser("experiment", help="run a study driver")
    _add_common(p)
    p.add_argument("which", choices=["fig3", "fig4", "fig5", "fig6"])
    return parser


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    kv: dict[str, str] = {}
    if args.config:
        with open(args.config) as fh:
            kv.update(parse_kv(fh))
    for item in args.set:
        if "=" not in item:
            raise ParseError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        kv[key.strip()] = value.strip()
    if args.seed is not None:
        kv["rng_seed"] = str(args.seed)
    if args.out is not None:
        kv["out"] = args.out
    return ExperimentConfig.from_kv(kv)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.workers is not None:
            if args.workers < 1:
                print("crosslayer: error: --workers must be >= 1",
                      file=sys.stderr)
                return 1
            import numba
            numba.set_num_threads(min(args.workers,
                                      numba.config.NUMBA_NUM_THREADS))
        cfg = load_config(args)
        if args.command == "gen":
            paths = cmd_gen(cfg)
        elif args.command == "seeds":
            paths = [cmd_seeds(cfg, args.algorithm)]
        elif args.command == "agents":
            paths = cmd_agents(cfg)
        else:
            paths = [cmd_experiment(cfg, args.which)]
    except InternalError as exc:
        print(f"crosslayer: internal error: {exc}", file=sys.stderr)
        return 3
    except (CrosslayerError, OSError) as exc:
        print(f"crosslayer: error: {exc}", file=sys.stderr)
        return 2
    for path in paths:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
