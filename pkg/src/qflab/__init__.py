"""Numerical laboratory for complex-time correlations of disordered free fermions.

The package builds Anderson-type one-particle Hamiltonians on finite boxes,
evaluates complex-time-ordered determinantal and Pfaffian correlation kernels
in closed form, verifies them against an exact small-system Fock oracle, and
runs disorder-averaged decay experiments with deterministic, thread-invariant
Monte Carlo.
"""

from .disorder import DisorderModel, MonteCarloEstimate, expectation, sample_hamiltonian
from .experiments import (
    DecayFit,
    ExperimentReport,
    ZGrid,
    determinant_decay_experiment,
    fit_decay,
    pfaffian_decay_experiment,
    propagator_decay_curve,
)
from .fock import (
    DressedVector,
    FockRep,
    OrderedMonomial,
    build_fock,
    gibbs_expectation,
    wick_determinant_check,
    wick_pfaffian_check,
)
from .hadamard import (
    CumulativeCorrelator,
    TubeFunction,
    boundary_max_check,
    convexity_check,
    kms_exchange_check,
    log_grid_sup,
    time_ordering_permutation,
    upsilon,
)
from .kernels import (
    KernelMatrix,
    SkewKernelMatrix,
    assemble_correlation_matrix,
    assemble_field_matrix,
    evolve,
    field_two_point,
    time_order,
    two_point,
    universal_bound_check,
)
from .lattice import (
    Box,
    Configuration,
    hausdorff_distance,
    power_metric,
    splitting_width,
    symmetrized_distance,
)
from .operators import (
    ComplexTime,
    EnergyWindow,
    HermitianOperator,
    eigendecompose,
    fermi_factor,
    spectral_projection,
    thermal_symbol,
    weighted_propagator,
)
from .pfaffian import (
    ExpansionReport,
    det_row_column_bound,
    determinant,
    laplace_expand_determinant,
    laplace_expand_pfaffian,
    norm_product_bound,
    pf_row_sum_bound,
    pfaffian,
)

__version__ = "0.1.0"

__all__ = [
    "Box",
    "ComplexTime",
    "Configuration",
    "CumulativeCorrelator",
    "DecayFit",
    "DisorderModel",
    "DressedVector",
    "EnergyWindow",
    "ExpansionReport",
    "ExperimentReport",
    "FockRep",
    "HermitianOperator",
    "KernelMatrix",
    "MonteCarloEstimate",
    "OrderedMonomial",
    "SkewKernelMatrix",
    "TubeFunction",
    "ZGrid",
    "assemble_correlation_matrix",
    "assemble_field_matrix",
    "boundary_max_check",
    "build_fock",
    "convexity_check",
    "det_row_column_bound",
    "determinant",
    "determinant_decay_experiment",
    "eigendecompose",
    "evolve",
    "expectation",
    "fermi_factor",
    "field_two_point",
    "fit_decay",
    "gibbs_expectation",
    "hausdorff_distance",
    "kms_exchange_check",
    "laplace_expand_determinant",
    "laplace_expand_pfaffian",
    "log_grid_sup",
    "norm_product_bound",
    "pf_row_sum_bound",
    "pfaffian",
    "pfaffian_decay_experiment",
    "power_metric",
    "propagator_decay_curve",
    "sample_hamiltonian",
    "spectral_projection",
    "splitting_width",
    "symmetrized_distance",
    "thermal_symbol",
    "time_order",
    "time_ordering_permutation",
    "two_point",
    "universal_bound_check",
    "upsilon",
    "weighted_propagator",
    "wick_determinant_check",
    "wick_pfaffian_check",
]
