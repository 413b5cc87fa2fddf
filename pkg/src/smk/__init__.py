"""Certification and minimizer extraction for correlatively sparse moment
relaxations of polynomial optimization problems."""

from . import demo, errors, io
from .altmeasure import enumerate_extreme_measures, solve_weight_lp
from .assemble import (
    MarginalGroups,
    assemble,
    match_marginals,
    maximal_support_set,
    pushforward,
    verify_global,
)
from .certify import (
    FlatnessCertificate,
    RankPolicy,
    ZeroPropagation,
    certify,
    d_half,
    numerical_rank,
    psd_check,
    zero_propagation_check,
)
from .core import (
    CliqueCover,
    CliqueSubvector,
    Projection,
    SparseMomentVector,
    clique_subvector,
    project_point,
    riesz_eval,
    sparse_exponents,
    validate_cover,
)
from .extract import (
    AtomicMeasure,
    constraint_feasibility_check,
    extract_atoms,
    verify_measure_against_subvector,
)
from .matrices import (
    ConstraintPolynomial,
    LabeledSymMatrix,
    localizing_block,
    localizing_matrix,
    moment_matrix,
    overlap_moment_matrix,
)
from .relax import (
    PopProblem,
    SdpInstance,
    SolveReport,
    build_relaxation,
    emit_sdpa,
    ingest_solution,
    parse_sdpa,
    pipeline,
    solve_sdp_bundled,
)
from .rip import NoOrderExists, RipFailsAt, RipWitnesses, check_rip, find_rip_order

__version__ = "0.1.0"
