"""Sweep harness and recoverability search.

A sweep is a pure function of its :class:`ExperimentConfig`: every graph,
oracle and walker seed is derived from ``base_seed`` and the cell
coordinates, and rows come out sorted by (topology, seed, W, gamma).
"""

from __future__ import annotations

import configparser
import csv
import logging
import math
import os
from dataclasses import dataclass, field, fields
from typing import Iterable, Sequence

import numpy as np

from . import metrics
from .metrics import REPORT_COLUMNS, MetricReport
from .trust_graph import StochasticMatrix, TopologyKind, derive_seed, generate, row_normalize
from .twr_oracle import (
    FLOODING_TOL,
    NormalizedTrust,
    exact_indirect_trust,
    iterative_indirect_trust,
    normalize_rows,
)
from .walker_sim import DampingMode, SimConfig, run_walkers

log = logging.getLogger(__name__)

GAMMA_MAX = 0.99
RECOVERY_CAP = 1_000_000
RECOVERY_REPLICATES = 5

# fixed per-topology salt so adding a topology never reshuffles the others
_TOPOLOGY_SALT = {TopologyKind.SCALE_FREE: 1, TopologyKind.ERDOS_RENYI: 2}


class ConfigError(ValueError):
    pass


class CellError(RuntimeError):
    """A sweep cell failed; the message names the cell."""


@dataclass
class ExperimentConfig:
    topology: tuple[str, ...] = ("scale_free",)
    n: int = 1000
    avg_degree: float = 10.0
    W_grid: tuple[int, ...] = tuple(range(60, 461, 50))
    gamma_grid: tuple[float, ...] = (0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
    beta: float = 0.75
    p: float = 0.05
    delta_grid: tuple[float, ...] = (0.05, 0.10)
    x_grid: tuple[float, ...] = (0.5, 0.6, 0.7, 0.8, 0.9)
    tau: float = 0.01
    replicates: int = 10
    base_seed: int = 0
    damping_mode: str = "geometric"
    output_path: str | None = None
    flood_tol: float = FLOODING_TOL

    def __post_init__(self) -> None:
        self.topology = tuple(TopologyKind(t).value for t in _as_tuple(self.topology))
        self.W_grid = tuple(int(w) for w in _as_tuple(self.W_grid))
        self.gamma_grid = tuple(float(g) for g in _as_tuple(self.gamma_grid))
        self.delta_grid = tuple(float(d) for d in _as_tuple(self.delta_grid))
        self.x_grid = tuple(float(x) for x in _as_tuple(self.x_grid))
        self.damping_mode = DampingMode(self.damping_mode).value
        if not (self.topology and self.W_grid and self.gamma_grid):
            raise ConfigError("topology, W_grid and gamma_grid must be non-empty")
        if not (0 <= self.beta < 1):
            raise ConfigError(f"beta must lie in [0, 1), got {self.beta}")
        if any(not (0 < g <= GAMMA_MAX) for g in self.gamma_grid):
            raise ConfigError(f"every gamma must lie in (0, {GAMMA_MAX}]")
        if any(w < 0 for w in self.W_grid):
            raise ConfigError("walker counts must be non-negative")
        if self.replicates < 1:
            raise ConfigError("replicates must be >= 1")
        if not (0 < self.p <= 1):
            raise ConfigError("p must lie in (0, 1]")


def _as_tuple(v) -> tuple:
    if isinstance(v, str):
        return tuple(s.strip() for s in v.split(",") if s.strip())
    if isinstance(v, (list, tuple)):
        return tuple(v)
    return (v,)


def load_config(path: str | os.PathLike, **overrides) -> ExperimentConfig:
    """Read a flat ``key = value`` file; list values are comma separated."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    with open(path) as fh:
        parser.read_string("[experiment]\n" + fh.read())
    raw = dict(parser["experiment"])
    known = {f.name: f for f in fields(ExperimentConfig)}
    unknown = set(raw) - set(known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    kwargs: dict = {}
    for key, text in raw.items():
        if key in ("n", "replicates", "base_seed"):
            kwargs[key] = int(text)
        elif key in ("avg_degree", "beta", "p", "tau", "flood_tol"):
            kwargs[key] = float(text)
        elif key == "output_path":
            kwargs[key] = text or None
        else:
            kwargs[key] = text
    kwargs.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return ExperimentConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


# ---------------------------------------------------------------------------
# Seeds
# ---------------------------------------------------------------------------


def graph_seed(base_seed: int, topology: str, replicate: int) -> int:
    return derive_seed(base_seed, _TOPOLOGY_SALT[TopologyKind(topology)], replicate)


def walker_seed(graph_seed_: int, gamma: float) -> int:
    # W is left out on purpose: runs at different W share a walker prefix
    return derive_seed(graph_seed_, 0x3A1C, int(round(gamma * 1_000_000)))


# ---------------------------------------------------------------------------
# Sweep
# ---------------------------------------------------------------------------


@dataclass
class OracleCell:
    S: StochasticMatrix
    S_hat: NormalizedTrust
    flood_messages: int
    flood_iterations: int


def oracle_cell(S: StochasticMatrix, beta: float, tol: float = FLOODING_TOL) -> OracleCell:
    S_hat = normalize_rows(exact_indirect_trust(S, beta))
    flood = iterative_indirect_trust(S, beta, tol=tol, unit="entry")
    return OracleCell(S, S_hat, flood.messages, flood.iterations)


def _cell_key(row: dict[str, str]) -> tuple[str, int, int, float]:
    return row["topology"], int(row["seed"]), int(row["W"]), float(row["gamma"])


def run_sweep(
    config: ExperimentConfig,
    done: Iterable[tuple[str, int, int, float]] = (),
) -> list[MetricReport]:
    """Evaluate every (topology, replicate, W, gamma) cell not listed in ``done``."""
    skip = set(done)
    mode = DampingMode(config.damping_mode)
    out: list[MetricReport] = []
    for topo in sorted(config.topology):
        for rep in range(config.replicates):
            todo = [
                (W, g)
                for W in sorted(config.W_grid)
                for g in sorted(config.gamma_grid)
                if (topo, rep, W, g) not in skip
            ]
            if not todo:
                continue
            gseed = graph_seed(config.base_seed, topo, rep)
            try:
                graph = generate(topo, config.n, config.avg_degree, gseed)
                oc = oracle_cell(row_normalize(graph), config.beta, config.flood_tol)
            except Exception as exc:
                raise CellError(f"{topo} replicate {rep}: {exc}") from exc
            avg_deg = graph.edge_count / graph.node_count
            for W, g in todo:
                try:
                    sim = SimConfig(W, g, mode, seed=walker_seed(gseed, g))
                    hits, total = run_walkers(oc.S, sim)
                    m = metrics.evaluate(hits, oc.S_hat, config.p, config.tau)
                except Exception as exc:
                    raise CellError(f"{topo} replicate {rep} W={W} gamma={g}: {exc}") from exc
                out.append(
                    MetricReport(
                        topology=topo, n=config.n, avg_degree=avg_deg, W=W, gamma=g,
                        beta=config.beta, mode=mode.value, seed=rep,
                        overlap=m["overlap"], spearman=m["spearman"], trust_diff=m["trust_diff"],
                        coverage=m["coverage"], msg_walker=total, msg_flood=oc.flood_messages,
                        reduction=metrics.message_reduction(total, oc.flood_messages), rmse=m["rmse"],
                    )
                )
                log.info("%s rep=%d W=%d gamma=%g overlap=%.4f", topo, rep, W, g, m["overlap"])
    return out


def sort_rows(rows: Iterable[dict[str, str]]) -> list[dict[str, str]]:
    return sorted(rows, key=_cell_key)


def write_rows(rows: Sequence[dict[str, str]], path: str | os.PathLike) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=REPORT_COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(sort_rows(rows))


def read_rows(path: str | os.PathLike) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != REPORT_COLUMNS:
            raise ConfigError(f"{path}: unexpected header {reader.fieldnames}")
        return list(reader)


def sweep_to_csv(config: ExperimentConfig, path: str | os.PathLike, append: bool = False) -> list[dict[str, str]]:
    """Run (or resume) a sweep and rewrite ``path`` with all rows sorted."""
    existing = read_rows(path) if append and os.path.exists(path) else []
    new = [r.as_row() for r in run_sweep(config, done={_cell_key(r) for r in existing})]
    rows = existing + new
    write_rows(rows, path)
    return sort_rows(rows)


SUMMARY_METRICS = ("overlap", "spearman", "trust_diff", "coverage", "msg_walker", "msg_flood", "reduction", "rmse")


def summarize(rows: Iterable[dict[str, str] | MetricReport]) -> list[dict[str, float | str]]:
    """Mean and sample standard deviation over replicates per (topology, W, gamma)."""
    groups: dict[tuple, list[dict]] = {}
    for r in rows:
        d = r.as_row() if isinstance(r, MetricReport) else r
        groups.setdefault((d["topology"], int(d["W"]), float(d["gamma"])), []).append(d)
    out = []
    for (topo, W, g), members in sorted(groups.items()):
        rec: dict[str, float | str] = {"topology": topo, "W": W, "gamma": g, "replicates": len(members)}
        for k in SUMMARY_METRICS:
            vals = np.array([float(m[k]) for m in members if m[k] != ""])
            rec[f"{k}_mean"] = float(vals.mean()) if len(vals) else float("nan")
            rec[f"{k}_std"] = float(vals.std(ddof=1)) if len(vals) > 1 else 0.0
        out.append(rec)
    return out


def write_summary(summary: Sequence[dict], path: str | os.PathLike) -> None:
    if not summary:
        return
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(summary[0]), lineterminator="\n")
        writer.writeheader()
        for rec in summary:
            writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in rec.items()})


# ---------------------------------------------------------------------------
# Recoverability
# ---------------------------------------------------------------------------


@dataclass
class RecoveryResult:
    min_walkers: int | None
    probes: dict[int, float] = field(default_factory=dict)

    @property
    def attained(self) -> bool:
        return self.min_walkers is not None


def recovery_fraction(
    S: StochasticMatrix,
    S_hat: NormalizedTrust,
    delta: float,
    W: int,
    gamma: float,
    seed: int,
    replicates: int = RECOVERY_REPLICATES,
    sources: Sequence[int] | None = None,
    damping_mode: DampingMode | str = DampingMode.GEOMETRIC,
) -> float:
    """Mean share of each source's oracle top-delta set found in its walker top-delta set."""
    if W == 0:
        return 0.0
    vals = []
    for r in range(replicates):
        cfg = SimConfig(W, gamma, damping_mode, seed=derive_seed(seed, 0x2EC0, r))
        hits, _ = run_walkers(S, cfg, sources)
        H_hat = normalize_rows(hits.counts.astype(np.float64))
        vals.append(metrics.top_p_overlap(H_hat, S_hat, delta, hits.sources).mean)
    return float(np.mean(vals))


def min_walkers_for_recovery(
    S: StochasticMatrix,
    S_hat: NormalizedTrust,
    delta: float,
    x: float,
    gamma: float,
    seed: int,
    replicates: int = RECOVERY_REPLICATES,
    sources: Sequence[int] | None = None,
    cap: int = RECOVERY_CAP,
    damping_mode: DampingMode | str = DampingMode.GEOMETRIC,
) -> RecoveryResult:
    """Smallest W whose mean recovery of the top-delta set reaches ``x``.

    Doubling from W=1 brackets the answer, bisection narrows it.  Walker
    streams are shared across probes, so larger W extends smaller W's walkers.
    """
    n = S.dimension
    if metrics.top_set_size(n, delta) < 1 or not (0 < delta <= 1):
        raise ValueError(f"delta={delta} gives an empty trusted set for n={n}")
    if not (0 <= x <= 1):
        raise ValueError("x must lie in [0, 1]")
    if x == 0:
        return RecoveryResult(0)
    probes: dict[int, float] = {}

    def ok(W: int) -> bool:
        if W not in probes:
            probes[W] = recovery_fraction(S, S_hat, delta, W, gamma, seed, replicates, sources, damping_mode)
        return probes[W] >= x

    hi = 1
    while not ok(hi):
        if hi >= cap:
            return RecoveryResult(None, probes)
        hi = min(hi * 2, cap)
    lo = hi // 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return RecoveryResult(hi, probes)


def recovery_table(
    S: StochasticMatrix,
    S_hat: NormalizedTrust,
    deltas: Sequence[float],
    xs: Sequence[float],
    gamma: float,
    seed: int,
    **kw,
) -> list[dict[str, float | int | None]]:
    rows = []
    for d in deltas:
        for x in xs:
            res = min_walkers_for_recovery(S, S_hat, d, x, gamma, seed, **kw)
            rows.append({"delta": d, "x": x, "min_walkers": res.min_walkers})
    return rows


def sample_sources(n: int, count: int | None, seed: int) -> np.ndarray | None:
    """Deterministic subset of sources, or None for all of them."""
    if count is None or count >= n:
        return None
    rng = np.random.default_rng(derive_seed(seed, 0x50C))
    return np.sort(rng.choice(n, size=count, replace=False))


def coverage_log_line(n: int, W: int, gamma: float, mode: str, seed: int, total: int, cov: float) -> str:
    return f"{n} {W} {gamma!r} {mode} {seed} {total} {cov!r}"
