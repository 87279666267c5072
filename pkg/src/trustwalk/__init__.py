"""Tunable random-walk estimation of personalised trust, checked against TrustWebRank."""

from .trust_graph import (
    ConstantWeights,
    GraphError,
    StochasticMatrix,
    TopologyKind,
    TrustGraph,
    UniformWeights,
    assign_trust_weights,
    generate_erdos_renyi,
    generate_scale_free,
    read_edgelist,
    row_normalize,
    write_edgelist,
)
from .twr_oracle import (
    NormalizedTrust,
    TrustMatrix,
    exact_indirect_trust,
    expected_hits,
    iterative_indirect_trust,
    normalize_rows,
)
from .walker_sim import DampingMode, HitMatrix, SimConfig, WalkerRecord, run_walkers, step_walker

__version__ = "0.1.0"
