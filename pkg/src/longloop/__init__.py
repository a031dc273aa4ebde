"""Long-loop feedback vertex sets on clique factor-graphs and network dismantling."""

__version__ = "0.1.0"

from .graph import Graph, VertexSubsetView, connected_components, load_edge_list, two_core
from .factor_graph import (
    CoverRecipe,
    FactorCore,
    FactorGraph,
    build_clique_cover,
    cover_for,
    fg_two_core,
    is_long_loop_free,
    load_cover,
    trivial_cover,
)
from .bp import BPParams, BetheEstimate, MessageSet, bethe_estimate, bp_sweep, chi, marginals, rho, run_bp
from .oracle import exact_enumeration, exact_min_fvs
from .dismantle import DecimationParams, DismantleReport, dismantle, fbpd, fcorehd, refine_fvs, trajectory
from .ensemble import EnsembleSpec, RSResult, generate, rs_fixed_point, rs_minfvs_scan
