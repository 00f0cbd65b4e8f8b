"""Determinantal point processes with possibly nonsymmetric kernels.

Construction, certification, spectral analysis and exact sampling of finite
DPPs, with a brute-force enumeration oracle for small ground sets.  Indices
are 0-based throughout.
"""

from .constructions import (
    CompanionSpec,
    RankOneSpec,
    companion_k,
    companion_l,
    half_identity_rank_one,
    half_identity_rank_one_cardinality,
    half_identity_set_probability,
    random_kernel,
    rank_one_kernel,
)
from .couplings import (
    CouplingKernel,
    CouplingSpec,
    attractive_coupling,
    bound_ev,
    complement_coupling,
    cross_covariance,
    identical_coupling,
    independent_coupling,
    random_attractive_spec,
    sign_alternate_coupling,
    sign_alternate_is_valid,
    split_coupling,
)
from .errors import (
    CapExceeded,
    DomainError,
    InvalidKernelError,
    NSDPPError,
    NumericFailure,
)
from .kernel import (
    Kernel,
    Role,
    k_to_l,
    l_to_k,
    principal_minor,
    read_mtxt,
    set_probability,
    write_mtxt,
)
from .oracle import (
    ProbabilityTable,
    enumerate_distribution,
    inclusion_consistency,
    tv_distance,
)
from .sampling import (
    MixingDecomposition,
    SampleBatch,
    SubsetSample,
    sample_batch,
    sample_enumeration,
    sample_half_identity_rank_one,
    sample_mixing,
    sample_sequential,
)
from .simulation import (
    GridGeometry,
    RadialKernelSpec,
    SimulationConfig,
    conditional_inclusion_map,
    grid_kernel,
    run_coupled_simulation,
)
from .spectrum import (
    CardinalityLaw,
    Spectrum,
    bernoulli_decomposition,
    cardinality_law,
    eigenvalues,
    factorial_moment,
    region_membership,
)
from .transforms import particle_hole, ppt, ppt_lensemble_particle_hole, switching_kernel, thin
from .validation import (
    ValidationReport,
    Verdict,
    cara3_violation_check,
    certify,
    is_dpp_cara1,
    is_dpp_cara2_randomized,
    is_p0_exhaustive,
    shrink_to_center,
    sufficient_conditions,
)

__version__ = "0.1.0"
