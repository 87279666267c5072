"""Synthetic trust topologies and the row-stochastic trust matrix.

A :class:`TrustGraph` is a directed graph whose edge weights are direct trust
values in (0, 1].  Undirected generator skeletons (Barabasi-Albert, G(n, p))
are symmetrised into two directed edges, each carrying its own weight.
"""

from __future__ import annotations

import enum
import os
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import networkx as nx
import numpy as np

ROW_SUM_TOL = 1e-12
ER_MAX_ATTEMPTS = 100


class GraphError(ValueError):
    """Invalid generator parameters or an unusable graph."""


class TopologyKind(str, enum.Enum):
    SCALE_FREE = "scale_free"
    ERDOS_RENYI = "erdos_renyi"
    CUSTOM = "custom"


def derive_seed(*parts: int) -> int:
    """Deterministic 64-bit seed from a tuple of non-negative integers."""
    ss = np.random.SeedSequence([int(p) for p in parts])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


# ---------------------------------------------------------------------------
# Weight models
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class UniformWeights:
    """I.i.d. weights drawn from the half-open interval (low, high]."""

    low: float = 0.0
    high: float = 1.0

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        # rng.random() is in [0, 1), so high - span*u lies in (low, high]
        return self.high - (self.high - self.low) * rng.random(size)


@dataclass(frozen=True)
class ConstantWeights:
    value: float = 1.0

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return np.full(size, float(self.value))


WeightModel = UniformWeights | ConstantWeights


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TrustGraph:
    """Directed trust graph in compressed sparse row form.

    ``indices[indptr[i]:indptr[i+1]]`` are the out-neighbours of ``i`` in
    ascending order and ``weights`` holds the matching direct trust values.
    """

    node_count: int
    indptr: np.ndarray
    indices: np.ndarray
    weights: np.ndarray
    topology_kind: TopologyKind = TopologyKind.CUSTOM
    seed: int | None = None

    def __post_init__(self) -> None:
        for arr in (self.indptr, self.indices, self.weights):
            arr.flags.writeable = False
        self.validate()

    @classmethod
    def from_edges(
        cls,
        node_count: int,
        edges: Iterable[tuple[int, int, float]],
        topology_kind: TopologyKind = TopologyKind.CUSTOM,
        seed: int | None = None,
    ) -> "TrustGraph":
        triples = sorted((int(s), int(d), float(w)) for s, d, w in edges)
        src = np.array([t[0] for t in triples], dtype=np.int64)
        dst = np.array([t[1] for t in triples], dtype=np.int64)
        wts = np.array([t[2] for t in triples], dtype=np.float64)
        if len(src) and (src.min() < 0 or src.max() >= node_count or dst.min() < 0 or dst.max() >= node_count):
            raise GraphError("edge endpoint out of range")
        indptr = np.zeros(node_count + 1, dtype=np.int64)
        np.add.at(indptr, src + 1, 1)
        indptr = np.cumsum(indptr)
        return cls(node_count, indptr, dst, wts, TopologyKind(topology_kind), seed)

    def validate(self) -> None:
        n = self.node_count
        if n < 1:
            raise GraphError("node_count must be positive")
        if len(self.indptr) != n + 1 or self.indptr[0] != 0 or self.indptr[-1] != len(self.indices):
            raise GraphError("malformed indptr")
        if len(self.weights) != len(self.indices):
            raise GraphError("weights/indices length mismatch")
        if len(self.weights) and not (np.all(self.weights > 0) and np.all(self.weights <= 1)):
            raise GraphError("direct trust weights must lie in (0, 1]")
        for i in range(n):
            nbrs = self.indices[self.indptr[i] : self.indptr[i + 1]]
            if np.any(nbrs == i):
                raise GraphError(f"self-loop at node {i}")
            if np.any(np.diff(nbrs) <= 0):
                raise GraphError(f"duplicate or unsorted edges at node {i}")

    @property
    def edge_count(self) -> int:
        return len(self.indices)

    @property
    def adjacency(self) -> list[list[tuple[int, float]]]:
        return [
            list(zip(self.neighbors(i).tolist(), self.out_weights(i).tolist()))
            for i in range(self.node_count)
        ]

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i] : self.indptr[i + 1]]

    def out_weights(self, i: int) -> np.ndarray:
        return self.weights[self.indptr[i] : self.indptr[i + 1]]

    def out_degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def degrees(self) -> np.ndarray:
        """Undirected degree (out-degree of a symmetrised skeleton)."""
        return self.out_degrees()

    def edges(self) -> list[tuple[int, int, float]]:
        src = np.repeat(np.arange(self.node_count), self.out_degrees())
        return list(zip(src.tolist(), self.indices.tolist(), self.weights.tolist()))

    def same_as(self, other: "TrustGraph") -> bool:
        return (
            self.node_count == other.node_count
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.weights, other.weights)
        )


@dataclass(frozen=True, eq=False)
class StochasticMatrix:
    """Dense row-stochastic matrix S with a CSR view for sampling."""

    rows: np.ndarray
    dimension: int = field(init=False)

    def __post_init__(self) -> None:
        rows = np.asarray(self.rows, dtype=np.float64)
        if rows.ndim != 2 or rows.shape[0] != rows.shape[1]:
            raise GraphError("stochastic matrix must be square")
        if np.any(rows < 0) or np.any(rows > 1):
            raise GraphError("entries must lie in [0, 1]")
        sums = rows.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > ROW_SUM_TOL):
            raise GraphError("rows must sum to 1")
        rows.flags.writeable = False
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "dimension", rows.shape[0])

    @cached_property
    def csr(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(indptr, indices, cumulative row probabilities) for inverse-CDF sampling."""
        n = self.dimension
        indptr = np.zeros(n + 1, dtype=np.int64)
        idx_parts, cum_parts = [], []
        for i in range(n):
            nz = np.flatnonzero(self.rows[i])
            cum = np.cumsum(self.rows[i, nz])
            cum[-1] = 1.0
            idx_parts.append(nz)
            cum_parts.append(cum)
            indptr[i + 1] = indptr[i] + len(nz)
        return indptr, np.concatenate(idx_parts).astype(np.int64), np.concatenate(cum_parts)


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------


def _skeleton_to_directed(
    n: int,
    undirected: Iterable[tuple[int, int]],
    model: WeightModel,
    seed: int,
    kind: TopologyKind,
) -> TrustGraph:
    pairs = set()
    for u, v in undirected:
        if u == v:
            continue
        pairs.add((u, v))
        pairs.add((v, u))
    return assign_trust_weights(n, sorted(pairs), model, seed, kind)


def assign_trust_weights(
    node_count: int,
    skeleton: Sequence[tuple[int, int]],
    distribution: WeightModel | None = None,
    seed: int = 0,
    topology_kind: TopologyKind = TopologyKind.CUSTOM,
) -> TrustGraph:
    """Attach an i.i.d. weight to every directed edge of ``skeleton``.

    Weights are drawn in ascending (src, dst) order, so the result depends only
    on the edge set, the model and ``seed``.
    """
    model = distribution or UniformWeights()
    edges = sorted({(int(s), int(d)) for s, d in skeleton})
    if not edges:
        raise GraphError("skeleton has no edges")
    rng = np.random.default_rng(derive_seed(seed, 0x7757))
    w = model.sample(rng, len(edges))
    return TrustGraph.from_edges(
        node_count,
        ((s, d, float(x)) for (s, d), x in zip(edges, w)),
        topology_kind=topology_kind,
        seed=seed,
    )


def generate_scale_free(
    n: int, m: int, seed: int, weights: WeightModel | None = None
) -> TrustGraph:
    """Barabasi-Albert skeleton with ``m`` edges per arriving node."""
    if not (isinstance(n, int) and isinstance(m, int)) or not (n > m >= 1):
        raise GraphError(f"need n > m >= 1, got n={n}, m={m}")
    g = nx.barabasi_albert_graph(n, m, seed=derive_seed(seed, 0xBA) % 2**32)
    return _skeleton_to_directed(n, g.edges(), weights or UniformWeights(), seed, TopologyKind.SCALE_FREE)


def generate_erdos_renyi(
    n: int, p: float, seed: int, weights: WeightModel | None = None
) -> TrustGraph:
    """Connected G(n, p) skeleton; resampled with derived seeds until connected."""
    if n < 2 or not (0 < p <= 1):
        raise GraphError(f"need n >= 2 and p in (0, 1], got n={n}, p={p}")
    for attempt in range(ER_MAX_ATTEMPTS):
        g = nx.fast_gnp_random_graph(n, p, seed=derive_seed(seed, 0xE4, attempt) % 2**32)
        if nx.is_connected(g):
            return _skeleton_to_directed(
                n, g.edges(), weights or UniformWeights(), seed, TopologyKind.ERDOS_RENYI
            )
    raise GraphError(f"no connected G({n}, {p}) after {ER_MAX_ATTEMPTS} attempts")


def generate(kind: TopologyKind | str, n: int, avg_degree: float, seed: int) -> TrustGraph:
    """Build either topology at a target mean (undirected) degree."""
    kind = TopologyKind(kind)
    if kind is TopologyKind.SCALE_FREE:
        return generate_scale_free(n, max(1, int(round(avg_degree / 2))), seed)
    if kind is TopologyKind.ERDOS_RENYI:
        return generate_erdos_renyi(n, min(1.0, avg_degree / (n - 1)), seed)
    raise GraphError(f"cannot generate topology {kind.value!r}")


def row_normalize(graph: TrustGraph) -> StochasticMatrix:
    """S_ij = T_ij / sum of i's outgoing direct trust."""
    n = graph.node_count
    deg = graph.out_degrees()
    if np.any(deg == 0):
        raise GraphError(f"node {int(np.argmax(deg == 0))} has no out-edges")
    rows = np.zeros((n, n))
    src = np.repeat(np.arange(n), deg)
    totals = np.add.reduceat(graph.weights, graph.indptr[:-1])
    rows[src, graph.indices] = graph.weights / totals[src]
    return StochasticMatrix(rows)


# ---------------------------------------------------------------------------
# Edge-list serialisation
# ---------------------------------------------------------------------------


def write_edgelist(graph: TrustGraph, path: str | os.PathLike) -> None:
    lines = [f"n {graph.node_count}", f"# kind {graph.topology_kind.value}"]
    if graph.seed is not None:
        lines.append(f"# seed {graph.seed}")
    lines += [f"{s} {d} {w!r}" for s, d, w in graph.edges()]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_edgelist(path: str | os.PathLike) -> TrustGraph:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or not lines[0].startswith("n "):
        raise GraphError(f"{path}: missing 'n <node_count>' header")
    n = int(lines[0].split()[1])
    kind, seed, edges = TopologyKind.CUSTOM, None, []
    for ln in lines[1:]:
        if ln.startswith("#"):
            parts = ln[1:].split()
            if len(parts) == 2 and parts[0] == "kind":
                kind = TopologyKind(parts[1])
            elif len(parts) == 2 and parts[0] == "seed":
                seed = int(parts[1])
            continue
        s, d, w = ln.split()
        edges.append((int(s), int(d), float(w)))
    return TrustGraph.from_edges(n, edges, topology_kind=kind, seed=seed)
