"""
cheeger_gap bounds the spectral gap of stoquastic Hamiltonians with Cheeger
inequalities and certifies the generalised lower bound with a flow network.
"""

from ._version import __version__

from .errors import (
    CheegerGapError,
    InvalidModelError,
    ConfigurationError,
    ReducibilityError,
    MatrixParseError,
    ValidationError,
    SizeLimitError,
    DegenerateCutError,
    EmptyFamilyError,
    DegenerateReductionError,
    DegeneracyError,
    SupportError,
    CapacityOverflowError,
    ConvergenceError,
    PositivityError,
    StaleGroundStateError,
    VerificationError,
)
from .report import CheckResult, Report
from .setting import RunConfig, RunSettings
from .model import (
    ModelSpec,
    StoquasticMatrix,
    build_ising_chain,
    build_model,
    build_ring,
    build_transverse_field,
    load_matrix,
    random_stoquastic,
    save_matrix,
    validate,
)
from .spectra import SpectralPair, ground_state, low_spectrum, spectral_gap
from .graph import (
    LaplacianMatrix,
    WeightedGraph,
    graph_from,
    laplacian,
    laplacian_gap,
    verify_laplacian,
)
from .cheeger import (
    CheegerResult,
    Cut,
    cheeger_candidate,
    cheeger_exact,
    classic_bounds,
    variational_upper,
)
from .reduced import (
    ReducedCheegerResult,
    ReducedGraph,
    best_reduction,
    build_reduction,
    generalized_bound,
    reduce_cut_only,
    reduce_cut_plus_paths,
    reduce_full,
    reduced_cheeger,
    reduced_cheeger_parametric,
)
from .flownet import (
    FlowNetwork,
    FlowResult,
    PositiveSupport,
    build_network,
    max_flow,
    min_cut_bruteforce,
    network_phi_tilde,
    positive_support,
    rayleigh_chain_bound,
    verify_theorem1,
)
from .pipeline import BoundsResult, Certificate, certificate_inputs, run_bounds, run_sweep

__all__ = [
    "__version__",
    # .errors
    "CheegerGapError",
    "InvalidModelError",
    "ConfigurationError",
    "ReducibilityError",
    "MatrixParseError",
    "ValidationError",
    "SizeLimitError",
    "DegenerateCutError",
    "EmptyFamilyError",
    "DegenerateReductionError",
    "DegeneracyError",
    "SupportError",
    "CapacityOverflowError",
    "ConvergenceError",
    "PositivityError",
    "StaleGroundStateError",
    "VerificationError",
    # .report
    "CheckResult",
    "Report",
    # .setting
    "RunConfig",
    "RunSettings",
    # .model
    "ModelSpec",
    "StoquasticMatrix",
    "build_ising_chain",
    "build_model",
    "build_ring",
    "build_transverse_field",
    "load_matrix",
    "random_stoquastic",
    "save_matrix",
    "validate",
    # .spectra
    "SpectralPair",
    "ground_state",
    "low_spectrum",
    "spectral_gap",
    # .graph
    "LaplacianMatrix",
    "WeightedGraph",
    "graph_from",
    "laplacian",
    "laplacian_gap",
    "verify_laplacian",
    # .cheeger
    "CheegerResult",
    "Cut",
    "cheeger_candidate",
    "cheeger_exact",
    "classic_bounds",
    "variational_upper",
    # .reduced
    "ReducedCheegerResult",
    "ReducedGraph",
    "best_reduction",
    "build_reduction",
    "generalized_bound",
    "reduce_cut_only",
    "reduce_cut_plus_paths",
    "reduce_full",
    "reduced_cheeger",
    "reduced_cheeger_parametric",
    # .flownet
    "FlowNetwork",
    "FlowResult",
    "PositiveSupport",
    "build_network",
    "max_flow",
    "min_cut_bruteforce",
    "network_phi_tilde",
    "positive_support",
    "rayleigh_chain_bound",
    "verify_theorem1",
    # .pipeline
    "BoundsResult",
    "Certificate",
    "certificate_inputs",
    "run_bounds",
    "run_sweep",
]
