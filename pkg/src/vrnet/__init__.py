"""Bound-respecting surrogates for effective conductivity of periodic media.

The pipeline: generate periodic two-phase microstructures, homogenize
them with an FFT solver whose outputs provably sit between the Reuss and
Voigt bounds, map the tensors into a normalized representation whose
spectrum lives in [0, 1], and train a small network that predicts in that
representation, so every prediction satisfies the bounds by construction.
"""

from .bounds import (
    BoundsPair,
    PhaseSystem,
    audit_bounds,
    bounds_from_matrices,
    hill_average,
    make_bounds,
    reuss_bound,
    two_phase_isotropic,
    voigt_bound,
)
from .errors import (
    BoundViolation,
    CorruptFile,
    EmptySplit,
    GenerationIncomplete,
    InvalidInput,
    SolverDiverged,
    TrainingDiverged,
    UnsupportedSchema,
    VRNetError,
)
from .features import FeatureVector, assemble_input, extract_features, feature_length
from .homsolve import (
    ConductionProblem,
    HomogenizationResult,
    contrast_sweep,
    iso_projection_distance,
    run_oracle_suite,
    solve_effective,
)
from .microgen import (
    GenSpec,
    VoxelGrid,
    generate_rsa,
    make_checkerboard,
    make_laminate,
    rng_from_seed,
    volume_fraction,
)
from .spdcore import (
    EigenPair,
    eig_sym,
    frob_dist,
    frob_norm,
    loewner_leq,
    pinv_sym,
    sym_pack,
    sym_unpack,
)
from .specnorm import (
    NormalizedTarget,
    denormalize,
    normalize,
    param_to_q,
    phi_loss,
    q_to_param,
    reconstruct,
    rel_frob_error,
)
from .surrogate import (
    EvalReport,
    NetConfig,
    NetParams,
    TrainConfig,
    evaluate,
    init_params,
    load_checkpoint,
    save_checkpoint,
    train,
    vr_predict,
)

__version__ = "0.1.0"
