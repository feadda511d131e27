"""Curvature-dimension analysis for left-invariant sub-Riemannian structures.

Builds structures from structure constants, computes the adapted connection
and its curvature invariants, assembles and verifies the generalized
curvature-dimension inequality at the 2-jet level, derives spectral-gap
lower bounds with an independent representation-theoretic cross-check, and
simulates the associated hypoelliptic diffusion on matrix groups.
"""

__version__ = "0.1.0"

from .cdcore import (
    CDParams,
    Jet2,
    cd_parameters,
    condition_b_residual,
    drifted_cd_parameters,
    gamma2_forms,
    optimize_c,
    sample_jet,
    sample_jet_batch,
    verify_cd,
    verify_cd_batch,
    verify_double_gamma,
)
from .connection import ConnectionData, compute_connection
from .diffusion import (
    SimConfig,
    apply_sublaplacian_numeric,
    generator_consistency,
    simulate_paths,
)
from .invariants import (
    CDConstants,
    analyze_structure,
    compute_constants,
    curvature_constants,
    nabla_v_constants,
    normalize_vertical,
    privileged_step2,
    ricci_horizontal,
    ricci_hv,
)
from .liealg import (
    GrowthFlag,
    LieSRStructure,
    MatrixRealization,
    adapted_orthonormal_frame,
    build_example,
    growth_flag,
    validate_structure,
)
from .spectral import (
    GapBound,
    gap_bound_best,
    gap_bound_kappa,
    gap_bound_prop41,
    gap_bound_step2,
    irrep_spectrum_oracle,
)

__all__ = [name for name in dir() if not name.startswith("_")]
