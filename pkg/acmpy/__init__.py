"""Almost-Commuting Moduli in Python"""

from .census import (
    CensusReport,
    Partition,
    brute_force_census,
    class_counts,
    enumerate_j,
    formula_census,
    n_general,
    n_p_alpha,
    n_prime_power,
)
from .exact_arith import Rat1, rat1_add, rat1_make, rat1_neg, rat1_order, rat1_scale
from .exceptions import (
    AcmpyError,
    InvariantViolation,
    NotCongruentWarning,
    RelationError,
    ResourceCapExceeded,
)
from .gamma_spaces import (
    CentralExtension,
    FDecomposition,
    OmegaAnalysis,
    PolySpec,
    Rank1Form,
    component_for_poly,
    count_components_rank1,
    count_components_rank_r,
    describe_moduli,
    enumerate_polys,
    f_decompose,
    hom_membership,
    mu_k,
    omega_analysis,
    omega_fiber,
    omega_lambda,
    omega_matrix,
)
from .settings import DEFAULTS, Settings
from .skew_forms import (
    NormalFormQZ,
    NormalFormZ,
    SkewQZ,
    SkewZ,
    apply_congruence,
    congruence_normal_form_qz,
    integer_skew_normal_form,
    row_space_order,
    sigma,
    standard_block,
)
from .tuple_lab import (
    ACTuple,
    SpectralData,
    build_zd,
    char_poly_check,
    extract_canonical_basis,
    rho_classify,
    verify_relations,
)
from .version import __version__
