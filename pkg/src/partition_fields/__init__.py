"""Random-partition random fields and their Gaussian scaling limits.

Simulates spin fields whose dependence is carried entirely by a random
partition of the index set (infinite urn scheme, heavy-tailed ancestral
forest, and their two-dimensional products), evaluates partial-sum fields
under the scaling normalizations, and statistically verifies the limits
against the fractional-Brownian-sheet covariance and exact finite-n
variance identities.
"""

__version__ = "0.1.0"

from .distributions import (
    FinitePmf,
    MarginalLaw,
    PmfKind,
    PowerLawPmf,
    make_hs_pmf,
    make_karlin_pmf,
)
from .fbs import HurstPair, fbm_cov, fbs_cov, fbs_cov_matrix, sample_fbs
from .fields import (
    CornerGrid,
    FieldSample,
    ModelKind,
    ModelSpec,
    normalization,
    rectangle_sum,
    simulate,
)
from .partition1d import (
    ForestWindow,
    OccupancySummary,
    UrnPath,
    expected_occupancy,
    occupancy,
    occupancy_increment,
    sample_forest,
    sample_urn,
)
from .renewal import (
    RenewalSequence,
    WeightProfile,
    bn_sq_growth_constant,
    c_alpha,
    p_alpha_weight,
    renewal_sequence,
    sigma_sq,
    var_xstar,
    weights,
)
from .seeding import SCHEME_ID, normalize_seed, replicate_generator, seed_to_hex
from .stats import (
    IdentityRecord,
    ReplicateReport,
    check_identity,
    empirical_cov,
    ks_normal,
    run_replicates,
)
from .suites import SUITES, SuiteReport, run_suite

__all__ = [
    "__version__",
    "CornerGrid",
    "FieldSample",
    "FinitePmf",
    "ForestWindow",
    "HurstPair",
    "IdentityRecord",
    "MarginalLaw",
    "ModelKind",
    "ModelSpec",
    "OccupancySummary",
    "PmfKind",
    "PowerLawPmf",
    "RenewalSequence",
    "ReplicateReport",
    "SCHEME_ID",
    "SUITES",
    "SuiteReport",
    "UrnPath",
    "WeightProfile",
    "bn_sq_growth_constant",
    "c_alpha",
    "check_identity",
    "empirical_cov",
    "expected_occupancy",
    "fbm_cov",
    "fbs_cov",
    "fbs_cov_matrix",
    "ks_normal",
    "make_hs_pmf",
    "make_karlin_pmf",
    "normalization",
    "normalize_seed",
    "occupancy",
    "occupancy_increment",
    "p_alpha_weight",
    "rectangle_sum",
    "renewal_sequence",
    "replicate_generator",
    "run_replicates",
    "run_suite",
    "sample_fbs",
    "sample_forest",
    "sample_urn",
    "seed_to_hex",
    "sigma_sq",
    "simulate",
    "var_xstar",
    "weights",
]
