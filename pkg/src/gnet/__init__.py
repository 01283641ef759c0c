"""Sparse kernel networks for integral-representable functions."""

from .errors import ConstructionError, FitError, GNetError, InputError, ReductionError
from .fitting import LineFit, fit_slope, loglog_fit
from .geometry import (Net, SpaceDescriptor, dimension_estimate, greedy_eps_net, mesh_norm,
                       packing_number, separation)
from .kernels import (KernelSpec, SmoothnessProfile, TargetFunction, default_profile, epsilon_star,
                      holder_estimate, kernel_eval, predicted_exponent, target_eval)
from .measures import DiscreteMeasure, admissibility_check, ball_mass, jordan_decompose, total_variation
from .partition import Partition, build_partition, merge_small_cells, verify_partition
from .recombination import (PolynomialBasis, QuadratureMeasure, caratheodory_reduce, moment_residual,
                            randomized_reduce)
from .synthesis import (GNetwork, SynthesisConfig, SynthesisReport, evaluate_network, hoeffding_bound,
                        monte_carlo_baseline, sup_error, synthesize)

__version__ = "0.1.0"

__all__ = [
    "ConstructionError",
    "FitError",
    "GNetError",
    "InputError",
    "ReductionError",
    "LineFit",
    "fit_slope",
    "loglog_fit",
    "Net",
    "SpaceDescriptor",
    "dimension_estimate",
    "greedy_eps_net",
    "mesh_norm",
    "packing_number",
    "separation",
    "KernelSpec",
    "SmoothnessProfile",
    "TargetFunction",
    "default_profile",
    "epsilon_star",
    "holder_estimate",
    "kernel_eval",
    "predicted_exponent",
    "target_eval",
    "DiscreteMeasure",
    "admissibility_check",
    "ball_mass",
    "jordan_decompose",
    "total_variation",
    "Partition",
    "build_partition",
    "merge_small_cells",
    "verify_partition",
    "PolynomialBasis",
    "QuadratureMeasure",
    "caratheodory_reduce",
    "moment_residual",
    "randomized_reduce",
    "GNetwork",
    "SynthesisConfig",
    "SynthesisReport",
    "evaluate_network",
    "hoeffding_bound",
    "monte_carlo_baseline",
    "sup_error",
    "synthesize",
]
