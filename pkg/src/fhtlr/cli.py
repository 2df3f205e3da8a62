"""Command-line entry point: ``fhtlr {train,compare,solve,params}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .exact import OracleUnavailable
from .experiment import (OUT_ENV_VAR, ConfigError, compare, default_out_dir,
                         format_table, load_config, param_count, run_experiment, solve)
from .envs import make_env

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_DIVERGED = 3
EXIT_NO_ORACLE = 4


def parse_seeds(text: str) -> list[int]:
    """``"3"`` -> [3]; ``"0,1,2"`` -> [0, 1, 2]; ``"0-4"`` -> [0, 1, 2, 3, 4]."""
    seeds = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        lo, sep, hi = part.partition("-")
        if sep and lo:
            seeds.extend(range(int(lo), int(hi) + 1))
        else:
            seeds.append(int(part))
    if not seeds:
        raise argparse.ArgumentTypeError(f"no seeds in {text!r}")
    return seeds


def _load(paths, seeds):
    configs = [load_config(p) for p in paths]
    if seeds is not None:
        for c in configs:
            c.seeds = list(seeds)
        configs = [c.validate() for c in configs]
    return configs


def _out(args) -> Path:
    return Path(args.out) if args.out else default_out_dir()


def cmd_train(args) -> int:
    configs = _load(args.config, args.seed)
    status = EXIT_OK
    for config in configs:
        results = run_experiment(config, _out(args), timing=args.timing, jobs=args.jobs)
        for r in results:
            final = r.records[-1].mean_return if r.records else float("nan")
            state = "DIVERGED" if r.failed else "ok"
            print(f"{config.name} seed {r.seed}: final mean return {final:.4f} [{state}]")
        if any(r.failed for r in results):
            status = EXIT_DIVERGED
    return status


def cmd_compare(args) -> int:
    configs = _load(args.config, args.seed)
    rows = compare(configs, _out(args), timing=args.timing, jobs=args.jobs)
    print(format_table(rows))
    return EXIT_DIVERGED if any(r.n_failed for r in rows) else EXIT_OK


def cmd_solve(args) -> int:
    if args.config:
        config = load_config(args.config[0])
        env_id, params = config.environment.id, config.environment.params
    elif args.env:
        env_id, params = args.env, {}
    else:
        raise ConfigError("solve needs --env or --config")
    sol = solve(env_id, params, _out(args))
    print(f"v_start {sol.v_start:.4f}")
    return EXIT_OK


def cmd_params(args) -> int:
    for config in _load(args.config, args.seed):
        space = make_env(config.environment.id, config.environment.params).space
        dense = space.horizon * space.n_states * space.n_actions
        n = param_count(config)
        print(f"{config.name}: {config.agent.id} params {n} "
              f"(dense finite-horizon table {dense}, ratio {n / dense:.4%})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fhtlr", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, *, configs_required=True):
        p.add_argument("--config", action="append", default=[], required=configs_required,
                       help="experiment YAML file (repeatable)")
        p.add_argument("--seed", type=parse_seeds, default=None,
                       help="override seeds: an int, a comma list, or a range like 0-9")
        p.add_argument("--out", default=None,
                       help=f"output directory (default ${OUT_ENV_VAR} or ./runs)")

    for name, fn, help_text in (("train", cmd_train, "train every seed of each config"),
                                ("compare", cmd_compare, "train configs and tabulate final returns")):
        p = sub.add_parser(name, help=help_text)
        common(p, configs_required=(name == "train"))
        p.add_argument("--timing", action="store_true",
                       help="record wall-clock elapsed_ms (otherwise 0 for byte-stable CSVs)")
        p.add_argument("--jobs", type=int, default=1, help="seeds trained in parallel")
        p.set_defaults(func=fn)

    p = sub.add_parser("solve", help="backward induction on an environment with known dynamics")
    common(p, configs_required=False)
    p.add_argument("--env", default=None, help="environment id with default parameters")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("params", help="print parameter counts")
    common(p)
    p.set_defaults(func=cmd_params)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OracleUnavailable as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_ORACLE
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
