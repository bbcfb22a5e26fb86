"""Branched transport networks over atomic measures.

Routes a single-atom source onto finitely many targets through a rooted
tree whose edges are priced by weight**alpha * length for an exponent
alpha in (0, 1]; concave weighting makes shared trunks cheaper than
parallel direct shipping, so optimal networks branch.  The package builds
feasible trees, improves them by closed-form junction moves and potential
driven rewiring, verifies small cases against brute-force oracles, and
renders results to SVG.
"""

from .bifurcation import (
    BifurcationInput,
    BifurcationResult,
    BranchCase,
    advantage,
    balance_residual,
    branch_angles,
    objective_f,
    solve_two_targets,
)
from .config import INITIALIZERS, OptimizeConfig
from .construct import build_small, build_star, build_subdivision
from .errors import (
    BranchflowError,
    DegenerateInputError,
    InputError,
    InvariantViolation,
)
from .instances import (
    GENERATORS,
    Instance,
    export_network,
    generate_points,
    import_network,
    parse_instance,
)
from .measures import AtomicMeasure, Cube, bounding_cube, diameter
from .network import BalanceReport, TransportNetwork
from .optimize_global import (
    candidate_parents,
    evaluate_reparent,
    global_optimize,
    potential,
    reparent_pass,
    shift_mass,
    subdivide_long_edges,
)
from .optimize_local import extract_star, improve_vertex, local_sweep
from .oracle import enumerate_optimal, grid_minimize_f, topologies
from .svg import RenderStyle, render_svg

__version__ = "0.1.0"

__all__ = [
    "AtomicMeasure",
    "BalanceReport",
    "BifurcationInput",
    "BifurcationResult",
    "BranchCase",
    "BranchflowError",
    "Cube",
    "DegenerateInputError",
    "GENERATORS",
    "INITIALIZERS",
    "InputError",
    "Instance",
    "InvariantViolation",
    "OptimizeConfig",
    "RenderStyle",
    "TransportNetwork",
    "advantage",
    "balance_residual",
    "bounding_cube",
    "branch_angles",
    "build_small",
    "build_star",
    "build_subdivision",
    "candidate_parents",
    "diameter",
    "enumerate_optimal",
    "evaluate_reparent",
    "export_network",
    "extract_star",
    "generate_points",
    "global_optimize",
    "grid_minimize_f",
    "import_network",
    "improve_vertex",
    "local_sweep",
    "objective_f",
    "parse_instance",
    "potential",
    "render_svg",
    "reparent_pass",
    "shift_mass",
    "solve_two_targets",
    "subdivide_long_edges",
    "topologies",
]
