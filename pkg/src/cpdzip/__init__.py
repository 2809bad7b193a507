"""cpdzip: exact compression laboratory for finite-alphabet low-rank tensors."""

from .model import (
    Alphabet,
    BudgetExceededError,
    CpdzipError,
    DEFAULT_BUDGET,
    Distribution,
    ModelSpec,
    ModelValidationError,
    canonical_model_json,
    entropy,
    load_model,
    model_from_dict,
    model_hash,
    model_to_dict,
    save_model,
    theoretical_threshold,
    uniform,
    validate,
)
from .tensors import (
    ExactTensor,
    FactorMatrix,
    FactorTuple,
    ShapeError,
    cpd_compose,
    khatri_rao,
    khatri_rao_chain,
    kruskal_condition,
    kruskal_rank,
    outer_product,
    rank_exact,
    unfold,
    zero_tensor,
)
from .typicality import (
    TypicalEnumeration,
    TypicalityParams,
    TypicalityUndecidableError,
    enumerate_typical,
    is_typical_matrix,
    log_prob_matrix,
    matrix_probability,
    spectrum_samples,
    typicality_mass,
)
from .codec import (
    Codebook,
    Codeword,
    DecodeError,
    SchemeReport,
    build_codebook,
    codeword_from_bytes,
    codeword_to_bytes,
    decode,
    encode,
    measure_scheme,
)
from .analysis import (
    FactorizationCensus,
    UniquenessCertificate,
    UnsupportedModelError,
    bilinear_sign_model,
    count_factorizations,
    cubic_sign_model,
    exact_rank_deficiency_prob,
    full_rank_prob_bound,
    gamma_bound,
    prob_zero_tensor,
    rank_one_sign_model,
    uniqueness_census,
    verify_examples,
)
from .rng import mix64, sample_matrix, sample_tuple, stream_rng, stream_seed
from .experiments import (
    ExperimentConfig,
    ResultRow,
    estimate_full_rank_prob,
    load_experiment_config,
    run_experiment,
)

__version__ = "0.1.0"
