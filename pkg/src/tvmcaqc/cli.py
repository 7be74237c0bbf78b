"""Command-line entry point.

Verbs: ``generate``, ``anneal``, ``ensemble``, ``sa-baseline``, ``oracle``.
Any config key can be overridden with ``--set group.key=value`` (TOML literal
syntax). Exit codes: 0 success, 2 partial ensemble failure, 1 fatal.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .config import ConfigError, ExperimentConfig, parse_value
from . import runner

log = logging.getLogger("tvmcaqc")


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", "-c", help="TOML experiment file")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config key, e.g. tvmc.n_samples=2000")
    common.add_argument("--out", "-o", help="output directory (output.dir)")
    common.add_argument("--family", help="model.family")
    common.add_argument("--size", help="model.size: site count, or [m, n] for CHIMERA")
    common.add_argument("--times", help="anneal.times, e.g. '[1, 4, 16]'")
    common.add_argument("--seed", type=int, help="ensemble.base_seed")
    common.add_argument("--realizations", type=int, help="ensemble.size")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="tvmcaqc", description="t-VMC simulation of adiabatic quantum optimization")
    sub = p.add_subparsers(dest="verb", required=True)
    sub.add_parser("generate", parents=[common], help="write instance files only")
    a = sub.add_parser("anneal", parents=[common], help="one t-VMC anneal")
    a.add_argument("--realization", type=int, default=0, help="realization index for seeding")
    a.add_argument("--T", type=float, help="annealing time (default: first of anneal.times)")
    sub.add_parser("ensemble", parents=[common], help="all realizations x annealing times")
    sub.add_parser("sa-baseline", parents=[common], help="classical simulated annealing baseline")
    sub.add_parser("oracle", parents=[common], help="exact dynamics and ground states")
    return p


def _overrides(args) -> list[tuple[str, object]]:
    out = []
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        out.append((key.strip(), parse_value(value.strip())))
    for flag, key in (("out", "output.dir"), ("family", "model.family"), ("size", "model.size"),
                      ("times", "anneal.times"), ("seed", "ensemble.base_seed"),
                      ("realizations", "ensemble.size")):
        value = getattr(args, flag)
        if value is not None:
            out.append((key, parse_value(value) if isinstance(value, str) and flag != "out" and flag != "family" else value))
    return out


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        config = ExperimentConfig.load(args.config, _overrides(args))
        if args.verb == "generate":
            return runner.run_generate(config)
        if args.verb == "anneal":
            T = args.T if args.T is not None else float(config["anneal"]["times"][0])
            base = int(config["ensemble"]["base_seed"])
            res = runner.run_single(config, runner.instance_seed(base, args.realization), T, config.out_dir,
                                    runner.run_seed(base, args.realization, 0), args.realization)
            print(f"T={T:g} e_final={res.e_final:.6f} p_success={res.p_success} n_rep={res.n_rep}")
            return 0
        if args.verb == "ensemble":
            return runner.run_ensemble(config)
        if args.verb == "sa-baseline":
            return runner.run_sa_baseline(config)
        if args.verb == "oracle":
            return runner.run_oracle(config)
    except Exception as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        if args.verbose:
            raise
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 1


if __name__ == "__main__":
    sys.exit(main())
