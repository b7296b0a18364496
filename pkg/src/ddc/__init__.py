"""Deterministic dense coding over multiqubit sender-receiver networks.

Computes the maximal number of mutually orthogonal local product encodings
(the deterministic dense coding alphabet size) for pure states shared between
M qubit senders and one receiver, plus the accompanying entanglement
measures, protocol simulation, and survey machinery.
"""

from .encoders import (
    EncodingSet,
    ProductEncoding,
    Su2Params,
    identity_encoding,
    pair_overlap,
    residual_vector,
    su2_matrix,
    su2_params_from_matrix,
)
from .measures import (
    MeasureReport,
    dc_capacity,
    entropy_bits,
    ggm,
    measure_report,
    neg_sq_monogamy,
    negativity,
    three_tangle,
)
from .protocol import Codebook, alphabet_split, build_codebook, run_round
from .rng import child_seed, stream
from .solver import (
    DdcResult,
    FeasibilityOutcome,
    SolverConfig,
    Status,
    VerifyResult,
    capacity_bound_bits,
    compute_nmax,
    convergence_profile,
    corroborate_conjecture,
    find_orthogonal_set,
    solution_document,
    solution_from_document,
    verify_set,
)
from .states import (
    GHZ_CLASS,
    W_CLASS,
    DensityMatrix,
    PureState,
    SloccClass,
    SystemShape,
    make_dicke4,
    make_gghz,
    make_gw,
    make_ws,
    reduce_to_senders,
    reduced_density,
    sample_class,
    sample_haar_state,
)
from .survey import (
    SurveyRecord,
    SweepGrid,
    class_survey,
    sweep_gw,
    ws_scan,
)
from .theorems import (
    extend_case_infeasible,
    gghz_theorem_families,
    solve_case_phases,
)

__version__ = "0.1.0"
