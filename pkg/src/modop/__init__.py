"""Operator classification over finite-dimensional block C*-algebras.

Free modules over A = M_{n_1} + ... + M_{n_k}, adjointable maps between
them, and quantitative certificates: Fredholm/Weyl index bookkeeping in
K0, Drazin core-nilpotent splittings, subspace-angle geometry of closed
sums, and oblique (Banach-style) regular-operator calculus.
"""

from .algebra import AlgebraElement, AlgebraShape
from .banach import (
    BanachWitness,
    ObliqueDecomposition,
    PerturbationRecord,
    ProductRecord,
    RegularOperator,
    banach_perturbation,
    banach_product,
    defect_witness,
    generalized_weyl_banach,
    make_regular,
    make_regular_orthogonal,
    oblique_decomposition,
)
from .drazin import (
    BrowderWitness,
    CommutingBrowderReport,
    CriterionReport,
    DrazinReport,
    DualityReport,
    ShiftExampleReport,
    ascent,
    browder_decomposition,
    commuting_browder_check,
    commuting_drazin_criterion,
    descent,
    drazin_dual_check,
    drazin_inverse,
    shift_counterexample,
)
from .errors import (
    DataError,
    IdentityViolation,
    InvarianceError,
    ModopError,
    StructureError,
    UnmetHypothesisError,
)
from .fredholm import (
    BFredholmReport,
    ChainReport,
    ExactSequenceReport,
    FredholmReport,
    ProductChainReport,
    WitnessPair,
    b_fredholm_commuting_check,
    b_fredholm_report,
    exact_sequence,
    fredholm_report,
    generalized_weyl_check,
    product_chain,
    weyl_defect_witness,
    weyl_perturbation_chain,
)
from .geometry import (
    GeometryReport,
    bouldin_criterion,
    closed_sum_report,
    dixmier_angle,
    min_modulus_restricted,
)
from .linmap import AdjointableMap, RestrictedEndomorphism
from .modules import (
    DecompositionWitness,
    K0Class,
    ModuleVector,
    Submodule,
    inner_product,
    k0_class,
    module_norm,
    nested_decomposition_witness,
    orth_complement,
    submodule_span,
    sum_and_intersection,
)
from .probes import (
    FamilyDiagnostic,
    family_table,
    left_multiplier_family,
    multiplier_family,
    nonclosed_square_family,
)
from .tolerances import DEFAULT_TOL, ToleranceConfig

__version__ = "0.1.0"
