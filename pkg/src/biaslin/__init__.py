"""Biased linearity testing toolkit.

Constructs pairwise-independent even-weight distributions, runs the
k-query product test on Boolean-cube functions, maps the queries-vs-bias
feasibility frontier, and builds the Gaussian-witness counterexample for
distributions without a pairwise independent coordinate.
"""

from .distributions import (
    BiasedDistribution,
    FeasibilityCertificate,
    contains_blr,
    eta,
    feasibility_search,
    flip_coordinates,
    make_case_distribution,
    make_composed_distribution,
    make_dfh19,
    make_distribution,
    make_full_support_perturbation,
    make_uniform_even_weight,
    pairwise_independent_coordinates,
    permutation_average,
)
from .hermite import (
    CovarianceMatrix,
    covariance_from_distribution,
    gaussian_mc_moment,
    hermite_eval,
    hermite_product_expectation,
)
from .polyalg import (
    SparsePoly,
    coefficient,
    find_all_coordinates_monomial,
    poly_pow,
    symmetrize,
)
from .cube import (
    DenseFunction,
    HandleFunction,
    biased_correlation,
    biased_spectrum,
    character,
    mc_biased_correlation,
    zk_character,
    zk_correlation,
)
from .lintest import (
    TestReport,
    character_pass_check,
    negated_test,
    product_expectation_exact,
    product_expectation_mc,
)
from .witness import (
    BoundedWitnessFunction,
    Counterexample,
    HermiteWitness,
    build_counterexample,
    choose_truncation_level,
    clt_cube_function,
    correlation_probes,
    find_hermite_witness,
    round_to_signs,
    truncate_and_center,
)

__version__ = "0.1.0"
