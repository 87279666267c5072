"""Command line entry point: ``trustwalk <subcommand> ...``.

Exit codes: 0 success, 1 usage error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from typing import Sequence

import numpy as np

from . import experiments, metrics
from .trust_graph import generate, read_edgelist, row_normalize, write_edgelist
from .twr_oracle import exact_indirect_trust, normalize_rows, write_matrix_csv
from .walker_sim import DampingMode, SimConfig, run_walkers

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would exit with 2
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _add_sim_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--walkers", type=int, default=460)
    p.add_argument("--gamma", type=float, default=0.75)
    p.add_argument("--mode", choices=[m.value for m in DampingMode], default="geometric")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="trustwalk", description="Random-walk trust estimation vs TrustWebRank")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", help="write a synthetic trust graph")
    p.add_argument("--topology", choices=["scale_free", "erdos_renyi"], default="scale_free")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--avg-degree", type=float, default=10.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("oracle", help="dense CSV of normalised TrustWebRank trust")
    p.add_argument("--graph", required=True)
    p.add_argument("--beta", type=float, default=0.75)
    p.add_argument("--out", required=True)
    p.add_argument("--raw", help="also write the unnormalised indirect trust")

    p = sub.add_parser("simulate", help="one walker run; prints a log line")
    p.add_argument("--graph", required=True)
    _add_sim_args(p)
    p.add_argument("--out", help="hit matrix CSV")
    p.add_argument("--log", help="append the log line to this file")

    p = sub.add_parser("sweep", help="full parameter grid to CSV")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, help="override base_seed")
    p.add_argument("--out", help="override output_path")
    p.add_argument("--summary", help="mean/std per cell over replicates")
    p.add_argument("--append", action="store_true", help="resume into an existing CSV")

    p = sub.add_parser("recover", help="minimum walkers to recover the top-delta set")
    p.add_argument("--graph", required=True)
    p.add_argument("--beta", type=float, default=0.75)
    p.add_argument("--gamma", type=float, default=0.75)
    p.add_argument("--delta", type=float, action="append")
    p.add_argument("--x", type=float, action="append")
    p.add_argument("--sources", type=int, help="evaluate a random subset of sources")
    p.add_argument("--replicates", type=int, default=experiments.RECOVERY_REPLICATES)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("global", help="global importance and its RMSE")
    p.add_argument("--graph", required=True)
    p.add_argument("--beta", type=float, default=0.75)
    p.add_argument("--tau", type=float, default=0.01)
    _add_sim_args(p)
    p.add_argument("--out", required=True)
    return parser


def _cmd_generate(a) -> None:
    write_edgelist(generate(a.topology, a.n, a.avg_degree, a.seed), a.out)


def _cmd_oracle(a) -> None:
    T = exact_indirect_trust(row_normalize(read_edgelist(a.graph)), a.beta)
    write_matrix_csv(normalize_rows(T).rows, a.out)
    if a.raw:
        write_matrix_csv(T.rows, a.raw)


def _sim(a):
    S = row_normalize(read_edgelist(a.graph))
    cfg = SimConfig(a.walkers, a.gamma, a.mode, seed=a.seed)
    hits, total = run_walkers(S, cfg)
    return S, cfg, hits, total


def _cmd_simulate(a) -> None:
    S, cfg, hits, total = _sim(a)
    line = experiments.coverage_log_line(
        S.dimension, cfg.walkers_per_node, cfg.gamma, cfg.damping_mode.value, cfg.seed,
        total, metrics.coverage(hits),
    )
    print(line)
    if a.log:
        with open(a.log, "a") as fh:
            fh.write(line + "\n")
    if a.out:
        write_matrix_csv(hits.counts, a.out)


def _cmd_sweep(a) -> None:
    cfg = experiments.load_config(a.config, base_seed=a.seed, output_path=a.out)
    if not cfg.output_path:
        raise UsageError("no output path: set output_path in the config or pass --out")
    rows = experiments.sweep_to_csv(cfg, cfg.output_path, append=a.append)
    if a.summary:
        experiments.write_summary(experiments.summarize(rows), a.summary)


def _cmd_recover(a) -> None:
    S = row_normalize(read_edgelist(a.graph))
    S_hat = normalize_rows(exact_indirect_trust(S, a.beta))
    rows = experiments.recovery_table(
        S, S_hat, a.delta or [0.05, 0.10], a.x or [0.5, 0.6, 0.7, 0.8, 0.9], a.gamma, a.seed,
        replicates=a.replicates, sources=experiments.sample_sources(S.dimension, a.sources, a.seed),
    )
    with open(a.out, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["delta", "x", "min_walkers"], lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({**r, "min_walkers": "" if r["min_walkers"] is None else r["min_walkers"]})


def _cmd_global(a) -> None:
    S, cfg, hits, _ = _sim(a)
    S_hat = normalize_rows(exact_indirect_trust(S, a.beta))
    H_hat = normalize_rows(hits.counts.astype(np.float64))
    I_twr = metrics.global_importance(S_hat, a.tau)
    I_rw = metrics.global_importance(H_hat, a.tau)
    with open(a.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["node", "I_twr", "I_rw"])
        for j, (t, r) in enumerate(zip(I_twr.tolist(), I_rw.tolist())):
            w.writerow([j, repr(t), repr(r)])
    print(f"rmse {metrics.rmse_global(I_twr, I_rw)!r}")


COMMANDS = {
    "generate": _cmd_generate,
    "oracle": _cmd_oracle,
    "simulate": _cmd_simulate,
    "sweep": _cmd_sweep,
    "recover": _cmd_recover,
    "global": _cmd_global,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"trustwalk: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"trustwalk: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except experiments.ConfigError as exc:
        print(f"trustwalk: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"trustwalk: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
