"""Message-level Monte Carlo simulation of damped, trust-biased random walkers.

Every source sends ``W`` walkers.  The first hop is always taken, to a
neighbour drawn from the source's row of S.  A walker that reached node ``j``
on hop ``h`` then survives with probability ``gamma`` (geometric mode) or
``gamma**h`` (hop-power mode) and moves to ``k`` with probability ``S_jk``;
otherwise it dies and one return message goes straight back to the source.

Randomness is drawn from one Mersenne Twister stream per ``(seed, source)``,
consumed in walker order, so any partition of the sources over workers yields
the same hit counts as a serial run.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numba
import numpy as np

from .trust_graph import StochasticMatrix

log = logging.getLogger(__name__)

DEFAULT_HOPS_CAP = 10_000


class DampingMode(str, enum.Enum):
    GEOMETRIC = "geometric"
    HOP_POWER = "hop_power"


@dataclass(frozen=True)
class SimConfig:
    walkers_per_node: int
    gamma: float
    damping_mode: DampingMode = DampingMode.GEOMETRIC
    hops_cap: int = DEFAULT_HOPS_CAP
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "damping_mode", DampingMode(self.damping_mode))
        if not (0 < self.gamma < 1):
            raise ValueError(f"gamma must lie strictly in (0, 1), got {self.gamma}")
        if self.walkers_per_node < 0:
            raise ValueError("walkers_per_node must be non-negative")
        if self.hops_cap < 1:
            raise ValueError("hops_cap must be >= 1")


@dataclass(frozen=True)
class WalkerRecord:
    source: int
    stamps: tuple[int, ...]
    forced: bool = False

    @property
    def hops(self) -> int:
        return len(self.stamps)

    @property
    def forward_messages(self) -> int:
        return len(self.stamps)

    @property
    def return_messages(self) -> int:
        return 1


@dataclass(eq=False)
class HitMatrix:
    """Per-(source, target) hit counts; the diagonal is never recorded.

    ``first_hits`` holds the first-stamp counts (the realised first-hop
    visits) and ``forward_messages`` the hop total per source.  Rows of
    sources that were not simulated stay zero.
    """

    counts: np.ndarray
    walkers_per_node: int
    damping_mode: DampingMode
    gamma: float
    sources: np.ndarray
    first_hits: np.ndarray
    forward_messages: np.ndarray
    forced_kills: int = 0

    @property
    def dimension(self) -> int:
        return self.counts.shape[0]

    @property
    def return_messages(self) -> int:
        return int(self.walkers_per_node * len(self.sources))

    @property
    def total_messages(self) -> int:
        return int(self.forward_messages.sum()) + self.return_messages

    def same_as(self, other: "HitMatrix") -> bool:
        return (
            np.array_equal(self.counts, other.counts)
            and np.array_equal(self.first_hits, other.first_hits)
            and np.array_equal(self.forward_messages, other.forward_messages)
        )


# ---------------------------------------------------------------------------
# numba kernels
# ---------------------------------------------------------------------------


@numba.njit(cache=True)
def _pick(current, u, indptr, indices, cum):
    lo = indptr[current]
    hi = indptr[current + 1]
    k = lo + np.searchsorted(cum[lo:hi], u, side="right")
    if k >= hi:
        k = hi - 1
    return indices[k]


@numba.njit(cache=True)
def _survival(hop, gamma, hop_power):
    if hop_power:
        return gamma**hop
    return gamma


@numba.njit(cache=True)
def _advance(current, hop, indptr, indices, cum, gamma, hop_power, u_die, u_pick):
    if u_die >= _survival(hop, gamma, hop_power):
        return -1
    return _pick(current, u_pick, indptr, indices, cum)


@numba.njit(cache=True)
def _simulate(indptr, indices, cum, sources, seeds, W, gamma, hop_power, hops_cap,
              hits, first_hits, forward, forced):
    for si in range(sources.shape[0]):
        src = sources[si]
        np.random.seed(seeds[si])
        fwd = 0
        kills = 0
        for _ in range(W):
            cur = _pick(src, np.random.random(), indptr, indices, cum)
            first_hits[src, cur] += 1
            if cur != src:
                hits[src, cur] += 1
            hop = 1
            while True:
                if hop >= hops_cap:
                    kills += 1
                    break
                if np.random.random() >= _survival(hop, gamma, hop_power):
                    break
                cur = _pick(cur, np.random.random(), indptr, indices, cum)
                hop += 1
                if cur != src:
                    hits[src, cur] += 1
            fwd += hop
        forward[src] = fwd
        forced[si] = kills


@numba.njit(cache=True)
def _trace(indptr, indices, cum, src, seed, W, gamma, hop_power, hops_cap):
    # same draw order as _simulate
    np.random.seed(seed)
    buf = np.empty(64, dtype=np.int64)
    used = 0
    lengths = np.empty(W, dtype=np.int64)
    forced = np.zeros(W, dtype=np.bool_)
    for w in range(W):
        cur = _pick(src, np.random.random(), indptr, indices, cum)
        hop = 1
        if used == buf.shape[0]:
            grown = np.empty(2 * buf.shape[0], dtype=np.int64)
            grown[:used] = buf[:used]
            buf = grown
        buf[used] = cur
        used += 1
        while True:
            if hop >= hops_cap:
                forced[w] = True
                break
            if np.random.random() >= _survival(hop, gamma, hop_power):
                break
            cur = _pick(cur, np.random.random(), indptr, indices, cum)
            hop += 1
            if used == buf.shape[0]:
                grown = np.empty(2 * buf.shape[0], dtype=np.int64)
                grown[:used] = buf[:used]
                buf = grown
            buf[used] = cur
            used += 1
        lengths[w] = hop
    stamps = buf[:used].copy()
    return stamps, lengths, forced


# ---------------------------------------------------------------------------
# Public API
# ---------------------------------------------------------------------------


def source_seed(seed: int, source: int) -> int:
    """32-bit Mersenne Twister seed for one source's stream."""
    ss = np.random.SeedSequence([int(seed), 0x57A1, int(source)])
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def step_walker(
    current: int,
    hop: int,
    S: StochasticMatrix,
    config: SimConfig,
    rng: np.random.Generator,
) -> int | None:
    """One forwarding decision at a node reached on hop ``hop``.

    Returns the next node id, or ``None`` if the walker dies here.
    """
    if hop < 1:
        raise ValueError("hop must be >= 1")
    indptr, indices, cum = S.csr
    nxt = _advance(
        current, hop, indptr, indices, cum, config.gamma,
        config.damping_mode is DampingMode.HOP_POWER, rng.random(), rng.random(),
    )
    return None if nxt < 0 else int(nxt)


def run_walkers(
    S: StochasticMatrix,
    config: SimConfig,
    sources: Sequence[int] | np.ndarray | None = None,
) -> tuple[HitMatrix, int]:
    """Launch ``W`` walkers from each source and count stamps per target."""
    n = S.dimension
    src = np.arange(n, dtype=np.int64) if sources is None else np.asarray(sources, dtype=np.int64)
    if src.size and (src.min() < 0 or src.max() >= n or len(np.unique(src)) != len(src)):
        raise ValueError("sources must be distinct node ids")
    hits = np.zeros((n, n), dtype=np.int64)
    first = np.zeros((n, n), dtype=np.int64)
    forward = np.zeros(n, dtype=np.int64)
    forced = np.zeros(len(src), dtype=np.int64)
    if config.walkers_per_node > 0 and src.size:
        seeds = np.array([source_seed(config.seed, s) for s in src], dtype=np.int64)
        indptr, indices, cum = S.csr
        _simulate(
            indptr, indices, cum, src, seeds, int(config.walkers_per_node), float(config.gamma),
            config.damping_mode is DampingMode.HOP_POWER, int(config.hops_cap),
            hits, first, forward, forced,
        )
    kills = int(forced.sum())
    if kills:
        log.warning("%d walkers reached hops_cap=%d and were force-killed", kills, config.hops_cap)
    hm = HitMatrix(
        counts=hits,
        walkers_per_node=int(config.walkers_per_node),
        damping_mode=config.damping_mode,
        gamma=float(config.gamma),
        sources=src,
        first_hits=first,
        forward_messages=forward,
        forced_kills=kills,
    )
    return hm, hm.total_messages


def trace_walkers(S: StochasticMatrix, config: SimConfig, source: int) -> list[WalkerRecord]:
    """Full trajectories of one source's walkers (same stream as run_walkers)."""
    if config.walkers_per_node == 0:
        return []
    indptr, indices, cum = S.csr
    stamps, lengths, forced = _trace(
        indptr, indices, cum, int(source), source_seed(config.seed, source),
        int(config.walkers_per_node), float(config.gamma),
        config.damping_mode is DampingMode.HOP_POWER, int(config.hops_cap),
    )
    out, pos = [], 0
    for length, f in zip(lengths.tolist(), forced.tolist()):
        out.append(WalkerRecord(int(source), tuple(stamps[pos : pos + length].tolist()), bool(f)))
        pos += length
    return out


def hits_from_records(records: Iterable[WalkerRecord], n: int) -> np.ndarray:
    counts = np.zeros((n, n), dtype=np.int64)
    for rec in records:
        for j in rec.stamps:
            if j != rec.source:
                counts[rec.source, j] += 1
    return counts


def message_count_breakdown(records: Iterable[WalkerRecord]) -> tuple[int, int, int]:
    """(forward, returns, total); every walker costs one return message."""
    forward = returns = 0
    for rec in records:
        forward += rec.forward_messages
        returns += rec.return_messages
    return forward, returns, forward + returns


def merge_hit_matrices(parts: Sequence[HitMatrix]) -> HitMatrix:
    """Combine runs over disjoint source subsets into one matrix."""
    if not parts:
        raise ValueError("nothing to merge")
    head = parts[0]
    sources = np.concatenate([p.sources for p in parts])
    if len(np.unique(sources)) != len(sources):
        raise ValueError("source subsets overlap")
    return HitMatrix(
        counts=sum(p.counts for p in parts),
        walkers_per_node=head.walkers_per_node,
        damping_mode=head.damping_mode,
        gamma=head.gamma,
        sources=np.sort(sources),
        first_hits=sum(p.first_hits for p in parts),
        forward_messages=sum(p.forward_messages for p in parts),
        forced_kills=sum(p.forced_kills for p in parts),
    )
