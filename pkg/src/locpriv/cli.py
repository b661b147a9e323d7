"""Command-line front end.

Exit codes: 0 on success, 2 on configuration/validation problems,
1 on runtime failures. Errors go to stderr as single-line diagnostics.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

from .harness import (
    ConfigError,
    audit,
    ingest_traces,
    load_config,
    run_lemma_battery,
    run_simulate,
    run_sweep,
    write_results_csv,
)
from .markov import load_graph_csv


def _csv_ints(text: str) -> list[int]:
    try:
        values = [int(part) for part in text.split(",") if part != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated int list: {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("empty int list")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="locpriv",
        description="Location-privacy simulation lab: anonymization, "
        "de-anonymization, and privacy-threshold experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="single-cell run from a config file")
    p_sim.add_argument("--config", required=True)
    p_sim.add_argument("--seed", type=int, default=None)
    p_sim.add_argument("--out", default=None)
    p_sim.set_defaults(func=_cmd_simulate)

    p_sweep = sub.add_parser("sweep", help="full (n, beta) grid from a config file")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--seed", type=int, default=None)
    p_sweep.add_argument("--out", default=None)
    p_sweep.add_argument("--threads", type=int, default=1)
    p_sweep.set_defaults(func=_cmd_sweep)

    p_lemma = sub.add_parser("lemma", help="proof-machinery numerical battery")
    p_lemma.add_argument("--alpha", type=float, required=True)
    p_lemma.add_argument("--theta", type=float, required=True)
    p_lemma.add_argument("--phi", type=float, required=True)
    p_lemma.add_argument("--m-grid", type=_csv_ints, required=True)
    p_lemma.add_argument("--n-grid", type=_csv_ints, required=True)
    p_lemma.add_argument("--trials", type=int, required=True)
    p_lemma.add_argument("--seed", type=int, required=True)
    p_lemma.add_argument("--out", required=True)
    p_lemma.set_defaults(func=_cmd_lemma)

    p_audit = sub.add_parser("audit", help="fit traces and recommend a rotation budget")
    p_audit.add_argument("--traces", required=True)
    p_audit.add_argument("--model", choices=("iid", "markov"), required=True)
    p_audit.add_argument("--r", type=int, default=None)
    p_audit.add_argument("--graph", default=None)
    p_audit.add_argument("--n", type=int, required=True)
    p_audit.add_argument("--alpha-margin", type=float, required=True)
    p_audit.add_argument("--out", default=None)
    p_audit.set_defaults(func=_cmd_audit)
    return parser


def _apply_overrides(config, seed, out):
    if seed is not None:
        if not 0 <= seed < 2**64:
            raise ConfigError("seed must be in [0, 2^64)")
        config = dataclasses.replace(config, seed=seed)
    if out is not None:
        config = dataclasses.replace(config, out_path=out)
    return config


def _cmd_simulate(args) -> int:
    config = _apply_overrides(load_config(args.config), args.seed, args.out)
    rows = run_simulate(config)
    write_results_csv(rows, config.out_path)
    print(f"wrote {len(rows)} rows to {config.out_path}")
    return 0


def _resolve_threads(args) -> int:
    env = os.environ.get("LOCPRIV_THREADS")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"LOCPRIV_THREADS is not an integer: {env!r}")
    return args.threads


def _cmd_sweep(args) -> int:
    config = _apply_overrides(load_config(args.config), args.seed, args.out)
    rows = run_sweep(config, threads=_resolve_threads(args))
    write_results_csv(rows, config.out_path)
    print(f"wrote {len(rows)} rows to {config.out_path}")
    return 0


def _cmd_lemma(args) -> int:
    rows = run_lemma_battery(
        alpha=args.alpha,
        theta=args.theta,
        phi=args.phi,
        m_grid=args.m_grid,
        n_grid=args.n_grid,
        trials=args.trials,
        seed=args.seed,
    )
    write_results_csv(rows, args.out)
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def _cmd_audit(args) -> int:
    graph = None
    if args.model == "markov":
        if args.graph is None:
            raise ConfigError("markov audit requires --graph")
        try:
            graph = load_graph_csv(args.graph)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"graph file: {exc}") from exc
    elif args.graph is not None:
        raise ConfigError("--graph is only meaningful with --model markov")
    dataset, population = ingest_traces(
        args.traces, args.model, r=args.r, graph=graph
    )
    report = audit(dataset, population, args.n, args.alpha_margin)
    text = json.dumps(report, indent=2, sort_keys=True)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
        print(f"wrote audit report to {args.out}")
    else:
        print(text)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"locpriv: config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure
        print(f"locpriv: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
