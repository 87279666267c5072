"""Evaluation metrics comparing walker estimates with TrustWebRank.

All functions take row-normalised matrices (diagonal already zeroed) and are
per-source first, then averaged over the network.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict
from typing import Sequence

import numpy as np
from scipy.stats import rankdata

from .twr_oracle import NormalizedTrust, normalize_rows
from .walker_sim import HitMatrix


class MetricError(ValueError):
    pass


def _rows(m: NormalizedTrust | np.ndarray) -> np.ndarray:
    return np.asarray(getattr(m, "rows", m), dtype=np.float64)


def _sources(n: int, sources: Sequence[int] | np.ndarray | None) -> np.ndarray:
    return np.arange(n) if sources is None else np.asarray(sources, dtype=np.int64)


def top_set_size(n: int, p: float) -> int:
    # guard against p*(n-1) landing a hair above an integer
    return int(math.ceil(round(p * (n - 1), 9)))


def top_set(row: np.ndarray, source: int, p: float, nonzero_only: bool = False) -> np.ndarray:
    """Ids of the top ``ceil(p (n-1))`` nodes by descending trust, ties by ascending id.

    The source itself is never a member.  With ``nonzero_only`` nodes of zero
    trust are dropped, so the set may be smaller than nominal.
    """
    n = len(row)
    k = top_set_size(n, p)
    if not (0 < p <= 1) or k < 1:
        raise MetricError(f"p={p} gives an empty top set for n={n}")
    order = np.lexsort((np.arange(n), -row))
    order = order[order != source][:k]
    if nonzero_only:
        order = order[row[order] > 0]
    return order


def top_sets(
    M: NormalizedTrust | np.ndarray,
    p: float,
    sources: Sequence[int] | np.ndarray | None = None,
    nonzero_only: bool = False,
) -> list[np.ndarray]:
    """:func:`top_set` for many rows at once (one stable sort per matrix)."""
    rows = _rows(M)
    n = rows.shape[0]
    k = top_set_size(n, p)
    if not (0 < p <= 1) or k < 1:
        raise MetricError(f"p={p} gives an empty top set for n={n}")
    src = _sources(n, sources)
    if len(src) == 0:
        return []
    # stable sort of the negated values: descending trust, ascending id on ties
    order = np.argsort(-rows[src], axis=1, kind="stable")
    order = order[order != src[:, None]].reshape(len(src), n - 1)[:, :k]
    if not nonzero_only:
        return list(order)
    vals = np.take_along_axis(rows[src], order, axis=1)
    return [o[v > 0] for o, v in zip(order, vals)]


@dataclass
class OverlapResult:
    per_source: np.ndarray
    mean: float
    empty_sources: list[int] = field(default_factory=list)


def _overlap(H, Sm, src, hsets, ssets, k) -> OverlapResult:
    out = np.zeros(len(src))
    empty = []
    for idx, (i, h, s) in enumerate(zip(src, hsets, ssets)):
        if not H[i].any():
            empty.append(int(i))
            continue
        out[idx] = len(np.intersect1d(h, s, assume_unique=True)) / k
    return OverlapResult(out, float(out.mean()) if len(out) else 0.0, empty)


def _spearman(H, Sm, src, hsets, ssets) -> float | None:
    vals = []
    for i, h, s in zip(src, hsets, ssets):
        common = np.intersect1d(h, s, assume_unique=True)
        rho = spearman(H[i, common], Sm[i, common])
        if rho is not None:
            vals.append(rho)
    return float(np.mean(vals)) if vals else None


def _trust_difference(H, Sm, src, hsets, ssets) -> float:
    total, count = 0.0, 0
    for i, h, s in zip(src, hsets, ssets):
        missed = np.setdiff1d(s, h, assume_unique=True)
        total += float(np.abs(Sm[i, missed] - H[i, missed]).sum())
        count += len(missed)
    return total / count if count else 0.0


def _prepare(H_hat, S_hat, p, sources):
    H, Sm = _rows(H_hat), _rows(S_hat)
    if H.shape != Sm.shape:
        raise MetricError("dimension mismatch")
    src = _sources(H.shape[0], sources)
    return H, Sm, src, top_sets(H, p, src, nonzero_only=True), top_sets(Sm, p, src)


def top_p_overlap(
    H_hat: NormalizedTrust | np.ndarray,
    S_hat: NormalizedTrust | np.ndarray,
    p: float,
    sources: Sequence[int] | np.ndarray | None = None,
) -> OverlapResult:
    """|top_H(i) & top_S(i)| / k per source, k = ceil(p (n-1)).

    Nodes the walkers never reached cannot enter top_H(i), but the denominator
    stays k.  A source whose walker row is entirely zero scores 0 and is listed
    in ``empty_sources``.
    """
    H, Sm, src, hs, ss = _prepare(H_hat, S_hat, p, sources)
    return _overlap(H, Sm, src, hs, ss, top_set_size(H.shape[0], p))


def spearman(x: np.ndarray, y: np.ndarray) -> float | None:
    """Spearman rho with average ranks; None if either side is constant."""
    if len(x) < 2:
        return None
    rx, ry = rankdata(x), rankdata(y)
    dx, dy = rx - rx.mean(), ry - ry.mean()
    denom = math.sqrt(float(dx @ dx) * float(dy @ dy))
    if denom == 0:
        return None
    return float(dx @ dy) / denom


def spearman_overlapping(
    H_hat: NormalizedTrust | np.ndarray,
    S_hat: NormalizedTrust | np.ndarray,
    p: float,
    sources: Sequence[int] | np.ndarray | None = None,
) -> float | None:
    """Mean per-source Spearman rho over the shared top-p members.

    Sources with fewer than two shared members (or an undefined rho) are
    skipped; None if every source is skipped.
    """
    return _spearman(*_prepare(H_hat, S_hat, p, sources))


def trust_difference_nonoverlapping(
    H_hat: NormalizedTrust | np.ndarray,
    S_hat: NormalizedTrust | np.ndarray,
    p: float,
    sources: Sequence[int] | np.ndarray | None = None,
) -> float:
    """Mean |S_hat_ij - H_hat_ij| over oracle top-p members the walkers missed."""
    return _trust_difference(*_prepare(H_hat, S_hat, p, sources))


def coverage(H: HitMatrix | np.ndarray, sources: Sequence[int] | np.ndarray | None = None) -> float:
    """Mean fraction of other nodes that received at least one hit."""
    counts = np.asarray(getattr(H, "counts", H))
    n = counts.shape[0]
    if n < 2:
        return 0.0
    if sources is None and isinstance(H, HitMatrix):
        sources = H.sources
    src = _sources(n, sources)
    if len(src) == 0:
        return 0.0
    sub = counts[src] > 0
    sub[np.arange(len(src)), src] = False
    return float(sub.sum(axis=1).mean() / (n - 1))


def message_reduction(walker_total: int, flooding_total: int) -> float:
    if flooding_total <= 0:
        raise MetricError("flooding_total must be positive")
    return 1.0 - walker_total / flooding_total


def global_importance(
    N_hat: NormalizedTrust | np.ndarray,
    tau: float,
    sources: Sequence[int] | np.ndarray | None = None,
) -> np.ndarray:
    """I_j = |{i != j : N_hat_ij > tau}| / (n - 1).

    With ``sources`` only those rows vote and the denominator shrinks to
    the number of voting rows other than j.
    """
    if tau <= 0:
        raise MetricError("tau must be positive")
    M = _rows(N_hat).copy()
    n = M.shape[0]
    np.fill_diagonal(M, 0.0)
    if sources is None:
        return (M > tau).sum(axis=0) / (n - 1)
    src = np.asarray(sources, dtype=np.int64)
    voters = np.full(n, float(len(src)))
    voters[src] -= 1
    return (M[src] > tau).sum(axis=0) / np.maximum(voters, 1)


def rmse_global(I_twr: Sequence[float] | np.ndarray, I_rw: Sequence[float] | np.ndarray) -> float:
    a, b = np.asarray(I_twr, dtype=np.float64), np.asarray(I_rw, dtype=np.float64)
    if a.shape != b.shape:
        raise MetricError(f"length mismatch: {a.shape} vs {b.shape}")
    return float(np.sqrt(np.mean((a - b) ** 2)))


REPORT_COLUMNS = (
    "topology n avg_degree W gamma beta mode seed overlap spearman trust_diff "
    "coverage msg_walker msg_flood reduction rmse"
).split()


@dataclass
class MetricReport:
    """One (topology, seed, W, gamma) cell of a sweep."""

    topology: str
    n: int
    avg_degree: float
    W: int
    gamma: float
    beta: float
    mode: str
    seed: int
    overlap: float
    spearman: float | None
    trust_diff: float
    coverage: float
    msg_walker: int
    msg_flood: int
    reduction: float
    rmse: float

    def as_row(self) -> dict[str, str]:
        def fmt(v):
            if v is None:
                return ""
            if isinstance(v, float):
                return repr(v)
            return str(v)

        return {k: fmt(v) for k, v in asdict(self).items()}


def evaluate(
    hits: HitMatrix,
    S_hat: NormalizedTrust,
    p: float,
    tau: float,
) -> dict[str, float | None]:
    """All walker-vs-oracle accuracy metrics for one run."""
    H_hat = normalize_rows(hits.counts.astype(np.float64))
    src = hits.sources
    prepared = _prepare(H_hat, S_hat, p, src)
    return {
        "overlap": _overlap(*prepared, top_set_size(H_hat.dimension, p)).mean,
        "spearman": _spearman(*prepared),
        "trust_diff": _trust_difference(*prepared),
        "coverage": coverage(hits),
        "rmse": rmse_global(global_importance(S_hat, tau, src), global_importance(H_hat, tau, src)),
    }
