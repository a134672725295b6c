"""Iterated Levy-driven SDEs: simulation, symbols, and path statistics.

The package simulates the inner/outer pair dY = Psi(Y-) dZ,
dX = Phi(X-) dY and the equivalent stacked system dV = M(V-) dZ with
M = [Phi Psi; Psi], evaluates the symbol q(v, xi) = psi_Z(M(v)' xi) of
the coupled Markov process analytically and by Monte Carlo, exposes its
semimartingale characteristics and generator, and measures the path
properties the symbol's growth index controls (gamma-variation,
small-time sup scaling), plus a conditional-law diagnostic showing X
alone is not Markov.
"""

from .errors import (ConfigError, DegenerateSymbolError, EvaluationError,
                     ExpressionError, ItersdeError, PreconditionError,
                     QuadratureError, ShapeError, UnboundedCoefficientError)
from .rng import RngStream
from .expressions import parse_expression, parse_matrix
from .coefficients import (CoefficientField, MultiplierCheck,
                           check_bijective_multiplier, compose_M,
                           field_from_text)
from .drivers import (Brownian, Cauchy, Composite, DriftOnly, Gamma,
                      JumpAxis, JumpDensity, LevyDriverSpec, LevyTriplet,
                      SymmetricStable, triplet_of)
from .quadrature import jump_functional, lk_exponent, lk_jump_integral
from .kernels import KERNEL_BACKEND, available_backends
from .integrator import (PathEnsemble, SamplePath, TimeGrid,
                         coarsen_increments, coupled_ensemble, ensemble,
                         euler_coupled, euler_inner, euler_outer)
from .symbols import (CharTriplet, McSymbolEstimate, PushforwardAxis,
                      TestFunction, characteristics_at, gaussian_bump,
                      generator_apply, linear, mc_symbol, plane_wave,
                      quadratic, symbol_coupled, symbol_inner)
from .pathstats import (IndexEstimate, InheritanceReport, ScalingReport,
                        VariationReport, gamma_variation, smalltime_scaling,
                        upper_index_coupled, upper_index_from_symbol,
                        upper_index_of_driver, verify_index_inheritance)
from .markov import MarkovDiagnostic, markov_diagnostic
from .config import ExperimentConfig, driver_from_dict, driver_to_dict

__version__ = "0.1.0"

__all__ = [
    "ItersdeError", "ConfigError", "ShapeError", "ExpressionError",
    "EvaluationError", "UnboundedCoefficientError", "PreconditionError",
    "QuadratureError", "DegenerateSymbolError",
    "RngStream", "parse_expression", "parse_matrix",
    "CoefficientField", "MultiplierCheck", "field_from_text", "compose_M",
    "check_bijective_multiplier",
    "Brownian", "Cauchy", "SymmetricStable", "Gamma", "DriftOnly", "Composite",
    "LevyDriverSpec", "LevyTriplet", "JumpDensity", "JumpAxis", "triplet_of",
    "lk_exponent", "lk_jump_integral", "jump_functional",
    "KERNEL_BACKEND", "available_backends",
    "TimeGrid", "SamplePath", "PathEnsemble", "euler_inner", "euler_outer",
    "euler_coupled", "ensemble", "coupled_ensemble", "coarsen_increments",
    "symbol_inner", "symbol_coupled", "mc_symbol", "McSymbolEstimate",
    "characteristics_at", "CharTriplet", "PushforwardAxis", "generator_apply",
    "TestFunction", "gaussian_bump", "plane_wave", "linear", "quadratic",
    "IndexEstimate", "upper_index_from_symbol", "upper_index_of_driver",
    "upper_index_coupled", "verify_index_inheritance", "InheritanceReport",
    "gamma_variation", "VariationReport", "smalltime_scaling", "ScalingReport",
    "markov_diagnostic", "MarkovDiagnostic",
    "ExperimentConfig", "driver_from_dict", "driver_to_dict",
    "__version__",
]
