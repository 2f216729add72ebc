"""Small-dimension quantum measurement laboratory.

Born-rule statistics, pluggable post-measurement update rules (linear and
nonlinear), two-stage experiments, linearity diagnostics and two-time
pseudo-density matrices.
"""

from measurelab.errors import (
    DimensionMismatchError,
    InvalidComparisonError,
    InvalidInputError,
    InvalidProbabilityError,
    MeasureLabError,
    UndefinedPostStateError,
    UnsupportedDimensionError,
)
from measurelab.statekit import (
    BlochVector,
    DensityMatrix,
    EnsembleDecomposition,
    Violation,
    bloch_to_density,
    density_to_bloch,
    maximally_mixed,
    mix,
    trace_distance,
    validate_density,
)
from measurelab.measurement import (
    Effect,
    OutcomeDistribution,
    Povm,
    born_probability,
    computational_basis_povm,
    outcome_distribution,
    sample_outcome,
)
from measurelab.update_rules import (
    LogisticBlochRule,
    LudersRule,
    ProbabilityDependentRule,
    UpdateOutcome,
    apply_update,
    unnormalized_map,
)
from measurelab.sequential import (
    JointDistribution,
    TwoStageExperiment,
    conditional_distribution,
    joint_distribution,
    second_stage_marginal,
)
from measurelab.analysis import (
    HeraldedPovmFit,
    LinearityReport,
    Opf,
    convex_linearity_check,
    ensemble_discrimination_gap,
    fit_effect_from_opf,
    fit_heralded_povm,
    mix_opfs,
)
from measurelab.temporal import (
    Channel,
    PseudoDensityMatrix,
    build_pdm,
    negativity,
    two_time_correlator,
)

__version__ = "0.1.0"
