"""Design-space exploration toolkit for spatial (dataflow) tensor accelerators.

The toolkit ingests tensor-operation loop nests, lowers them to a unified
problem abstraction, enumerates legal cluster-target mappings under
hardware/user constraints, and ranks them with an analytical
latency/energy/EDP cost model validated against a brute-force simulator.
"""

from spatialdse.problem import (
    DataSpace,
    Dimension,
    OperationTag,
    ProblemInstance,
    Projection,
    Role,
    SubscriptExpr,
    Term,
    total_macs,
)
from spatialdse.arch import Architecture, Axis, ClusterLevel, make_grid_arch
from spatialdse.mapping import LevelMapping, Mapping, check_legality
from spatialdse.costmodel import CostReport, evaluate
from spatialdse.oracle import simulate

__all__ = [
    "Architecture",
    "Axis",
    "ClusterLevel",
    "CostReport",
    "DataSpace",
    "Dimension",
    "LevelMapping",
    "Mapping",
    "OperationTag",
    "ProblemInstance",
    "Projection",
    "Role",
    "SubscriptExpr",
    "Term",
    "check_legality",
    "evaluate",
    "make_grid_arch",
    "simulate",
    "total_macs",
]
