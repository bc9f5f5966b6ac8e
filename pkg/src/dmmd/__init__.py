"""Joint and individual low-rank signal decomposition for two data matrices
matched in both rows and columns.

Entry points: :func:`dmmd.pipeline.dmmd` for the full three-step fit,
:func:`dmmd.simulate.generate` / :func:`dmmd.simulate.run_setting` for
synthetic benchmarks, and the ``dmmd`` command-line tool.
"""

from .exceptions import (
    DegeneracyError,
    DmmdError,
    InputError,
    ParameterError,
    RankTieWarning,
)
from .iterative import DmmdIConfig, solve_dmmd_i, update_joint_column, update_joint_row
from .linalg import (
    SvdResult,
    empty_basis,
    gram_schmidt,
    numerical_rank,
    project_onto,
    truncated_svd,
)
from .pipeline import (
    DmmdResult,
    dmmd,
    double_standardize,
    normalized_basis_report,
    variance_explained,
)
from .rank_selection import (
    PlSplit,
    estimate_joint_rank,
    estimate_total_rank,
    profile_likelihood_split,
)
from .simulate import (
    GroundTruth,
    SimulationConfig,
    absolute_error,
    check_ground_truth,
    chordal_distance,
    generate,
    relative_error,
    run_setting,
)
from .solver import (
    ConstrainedFit,
    DmmdDecomposition,
    RankProfile,
    SolverConfig,
    ViewDecomposition,
    best_fixed_spaces,
    extract_parts,
    solve_column_constrained,
    solve_dmmd_signals,
    solve_row_constrained,
)
from .subspaces import (
    PrincipalAngleSet,
    estimate_joint_basis,
    principal_angles,
    sum_pca_joint_basis,
)

__version__ = "0.1.0"

__all__ = [
    "ConstrainedFit",
    "DegeneracyError",
    "DmmdDecomposition",
    "DmmdError",
    "DmmdIConfig",
    "DmmdResult",
    "GroundTruth",
    "InputError",
    "ParameterError",
    "PlSplit",
    "PrincipalAngleSet",
    "RankProfile",
    "RankTieWarning",
    "SimulationConfig",
    "SolverConfig",
    "SvdResult",
    "ViewDecomposition",
    "absolute_error",
    "best_fixed_spaces",
    "check_ground_truth",
    "chordal_distance",
    "dmmd",
    "double_standardize",
    "empty_basis",
    "estimate_joint_basis",
    "estimate_joint_rank",
    "estimate_total_rank",
    "extract_parts",
    "generate",
    "gram_schmidt",
    "normalized_basis_report",
    "numerical_rank",
    "principal_angles",
    "profile_likelihood_split",
    "project_onto",
    "relative_error",
    "run_setting",
    "solve_column_constrained",
    "solve_dmmd_i",
    "solve_dmmd_signals",
    "solve_row_constrained",
    "sum_pca_joint_basis",
    "truncated_svd",
    "update_joint_column",
    "update_joint_row",
    "variance_explained",
]
