"""gifslab: attractors, invariant measures and chaos games for
generalized iterated function systems with place-dependent weights."""

from .constants import DEFAULT_BURN_IN, DEFAULT_EPS, DEFAULT_SEED, DEFAULT_STEPS, DEFAULT_TOL
from .core import (
    Box,
    GifsMap,
    GifsSystem,
    ValidationReport,
    WeightSystem,
    eval_map,
    eval_weight,
    validate_system,
)
from .errors import (
    AtomBudgetExceeded,
    CellBudgetExceeded,
    E1Violation,
    EmptySet,
    GifsError,
    IndexOutOfRange,
    NoConvergence,
    NotEventuallyContractive,
    PointOutsideDomain,
    SumNotOne,
    SupportTooLarge,
    SystemFileError,
    WeightBelowDelta,
    WordSpaceTooLarge,
)
from .extension import (
    ExtendedIfs,
    PowerSystem,
    build_extension,
    certify_contractivity,
    power_system,
    power_weight_modulus,
)
from .fde import (
    CoefficientOracle,
    FdeSpec,
    LinearRhs,
    closed_form_orbit,
    coefficients,
    compile_fde,
    iterate_fde,
)
from .grids import (
    GridSet,
    extended_step,
    hausdorff_distance,
    hutchinson_step,
    iterate_attractor,
    project_set,
)
from .measures import (
    DiscreteMeasure,
    PruneRule,
    extended_markov_step,
    iterate_hutchinson_measure,
    marginal,
    markov_step,
    transfer_apply,
    wasserstein,
)
from .orbits import (
    ErgodicReport,
    OrbitStream,
    chaos_orbit,
    ergodic_average,
    ergodic_report,
    extended_ergodic_average,
    holonomic_defect,
    orbit_closure,
    visitation_frequency,
)
from .transport import TransportPlan

__version__ = "0.1.0"
