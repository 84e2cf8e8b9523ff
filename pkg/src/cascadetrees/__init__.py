"""Cascade-of-trees approximation of Gaussian correlation matrices."""

from .cascade import (
    CamState,
    CascadeBreakdown,
    CascadeModel,
    TreePolicy,
    cam_update,
    compare_policies,
    run_cascade,
    star_exact_cascade,
)
from .errors import *  # noqa: F401,F403
from .iogen import (
    SyntheticSpec,
    empirical_correlation,
    generate_synthetic,
    read_matrix,
    write_matrix,
    write_trace,
)
from .ordering import (
    FactorGraphDoc,
    FactorizationKind,
    StageTransform,
    connected_ordering,
    stage_transform,
    to_dot,
    to_factor_graph,
)
from .symcore import (
    Permutation,
    cholesky_lower,
    cholesky_upper,
    kl_gauss,
    permute_spd,
    symmetric_sqrt,
    validate_corr,
)
from .treemodel import TreeModel, best_star, chow_liu, star_tree, tree_covariance

__version__ = "0.1.0"
