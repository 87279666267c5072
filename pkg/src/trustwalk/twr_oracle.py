"""Exact and iterative TrustWebRank indirect trust.

The closed form is the resolvent ``(I - beta*S)^-1 S``; the same solver gives
the analytic expectation of the random-walker hit counts.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Literal

import numpy as np
import scipy.linalg

from .trust_graph import StochasticMatrix

MAX_ITERATIONS = 10_000
FLOODING_TOL = 1e-6


class OracleError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class TrustMatrix:
    """Dense indirect trust (or expected hits); the diagonal is kept as computed."""

    rows: np.ndarray
    damping: float

    @property
    def dimension(self) -> int:
        return self.rows.shape[0]


@dataclass(frozen=True, eq=False)
class NormalizedTrust:
    rows: np.ndarray

    @property
    def dimension(self) -> int:
        return self.rows.shape[0]


@dataclass(frozen=True)
class IterativeResult:
    trust: TrustMatrix
    iterations: int
    messages: int


def _resolvent(S: StochasticMatrix, damping: float) -> np.ndarray:
    if not (0 <= damping < 1):
        raise OracleError(f"damping must lie in [0, 1), got {damping}")
    A = np.eye(S.dimension) - damping * S.rows
    try:
        return scipy.linalg.solve(A, S.rows, check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        raise OracleError(f"singular system at damping {damping}") from exc


def exact_indirect_trust(S: StochasticMatrix, damping: float) -> TrustMatrix:
    """Solve ``(I - beta S) X = S`` by LU; the inverse is never formed."""
    return TrustMatrix(_resolvent(S, damping), float(damping))


def neumann_series(S: StochasticMatrix, damping: float, terms: int = 200) -> np.ndarray:
    """Truncated sum of ``damping^(l-1) S^l`` for l = 1..terms.

    Kept deliberately naive; it is the independent check on the LU path.
    """
    total = np.zeros_like(S.rows)
    power = np.eye(S.dimension)
    for l in range(1, terms + 1):
        power = power @ S.rows
        total += damping ** (l - 1) * power
    return total


def iterative_indirect_trust(
    S: StochasticMatrix,
    damping: float,
    tol: float = FLOODING_TOL,
    unit: Literal["entry", "vector"] = "vector",
    max_iterations: int = MAX_ITERATIONS,
) -> IterativeResult:
    """Flooding fixed point ``T <- S + beta S T`` started from ``T = S``.

    Stops once the largest entrywise change drops below ``tol``.  Each
    iteration every node sends its current trust row to each out-neighbour.
    With ``unit="vector"`` a row counts as one message (E per iteration);
    with ``unit="entry"`` every trust value in the row is one message
    (E * n per iteration), which is the unit the walkers are compared against.
    """
    if tol <= 0:
        raise OracleError("tol must be positive")
    if not (0 <= damping < 1):
        raise OracleError(f"damping must lie in [0, 1), got {damping}")
    rows = S.rows
    edges = int(np.count_nonzero(rows))
    per_iter = edges if unit == "vector" else edges * S.dimension
    current = rows.copy()
    for it in range(1, max_iterations + 1):
        nxt = rows + damping * (rows @ current)
        delta = np.max(np.abs(nxt - current)) if nxt.size else 0.0
        current = nxt
        if delta < tol:
            return IterativeResult(TrustMatrix(current, float(damping)), it, it * per_iter)
    raise ConvergenceError(f"no convergence within {max_iterations} iterations")


def normalize_rows(M: TrustMatrix | np.ndarray) -> NormalizedTrust:
    """Divide each row by its off-diagonal sum; the diagonal is zeroed first."""
    rows = np.array(getattr(M, "rows", M), dtype=np.float64, copy=True)
    if np.any(rows < 0):
        raise OracleError("normalize_rows expects non-negative entries")
    np.fill_diagonal(rows, 0.0)
    sums = rows.sum(axis=1, keepdims=True)
    np.divide(rows, sums, out=rows, where=sums > 0)
    return NormalizedTrust(rows)


def expected_hits(
    S: StochasticMatrix, damping: float, walkers_per_node: int | np.ndarray
) -> TrustMatrix:
    """Analytic mean hit counts ``N (I - gamma S)^-1 S`` with ``N = diag(W)``."""
    if not (0 < damping < 1):
        raise OracleError(f"gamma must lie in (0, 1), got {damping}")
    W = np.broadcast_to(np.asarray(walkers_per_node, dtype=np.float64), (S.dimension,))
    if np.any(W < 1):
        raise OracleError("walkers_per_node must be >= 1")
    return TrustMatrix(W[:, None] * _resolvent(S, damping), float(damping))


def write_matrix_csv(rows: np.ndarray, path: str | os.PathLike) -> None:
    """Dense dump, one source per line, round-trippable floats."""
    fmt = "%d" if np.issubdtype(rows.dtype, np.integer) else "%.17g"
    np.savetxt(path, rows, fmt=fmt, delimiter=",")


def read_matrix_csv(path: str | os.PathLike) -> np.ndarray:
    return np.atleast_2d(np.loadtxt(path, delimiter=",", dtype=np.float64))
