"""Decomposable correlation matrices: construction, peeling, certificates and search."""

from .decomp import (
    Decomposition,
    PeelResult,
    VerificationReport,
    absorb_all_rank_one,
    absorb_rank_one,
    choose_pivot,
    decompose_full,
    is_independent_pivot,
    peel,
    verify_decomposition,
)
from .errors import *  # noqa: F401,F403
from .families import (
    ChainFamilyParams,
    Prop52Params,
    chain_cross_index,
    gen_chain,
    gen_prop52_factors,
    gen_prop52_target,
    hard_candidate_checks,
    random_correlation,
    random_hard_candidate,
)
from .io import dumps_matrix, load_document, loads_matrix, parse_matrix_file, write_matrix
from .matcore import (
    RANK_TOL,
    RECONSTRUCTION_TOL,
    VALIDATION_TOL,
    gram_factor,
    gram_of,
    is_correlation,
    numerical_rank,
    principal_submatrix,
    schur_product,
    validate_correlation,
)
from .search import FactorParams, SearchConfig, SearchResult, batch_search, objective, two_factor_search
from .tensorlab import (
    ProductVectorSet,
    TensorShape,
    combo_product_check,
    is_product_vector,
    lemma_pair_check,
    nonparallel_subsystems,
)
from .witness import (
    MeasurementRecord,
    Verdict,
    WitnessReport,
    chain_witness,
    detect_entanglement,
    estimate_projector_gram,
    simulate_measurements,
)

__version__ = "0.1.0"
