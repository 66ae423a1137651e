"""Optimal linear response for expanding circle maps via Fourier transfer operators."""
from .adjoint import EigenData, adjoint_representative, eigen_data, h1_pairing, normalize_pair
from .circle_map import (
    PRESETS,
    CircleMap,
    MollifiedMap,
    PerturbedMap,
    PiecewiseLinearMap,
    TrigPolynomialMap,
    check_expanding,
    map_from_dict,
    mollify,
    perturb,
    preset,
)
from .exceptions import (
    MarkovError,
    NotExpandingError,
    NumericalError,
    SpectralGapError,
    UnsupportedEigenvalueError,
)
from .fourier import FourierVector, forward_dft, inverse_dft, sobolev_norm, sobolev_weight
from .optimizer import (
    OptimizationResult,
    objective_certificate,
    optimal_eigenvalue_perturbation,
    optimal_expectation_perturbation,
)
from .response import (
    ResponseContext,
    density_response,
    derivative_op_apply,
    eigenvalue_response,
    expectation_response,
    observable,
)
from .transfer import (
    Resolvent,
    TransferMatrix,
    assemble,
    eigenpair,
    invariant_density,
    markov_matrix,
    spectrum,
)

__version__ = "0.1.0"
