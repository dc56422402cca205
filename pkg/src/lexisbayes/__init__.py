"""Bayesian smooth + shock decomposition of Lexis mortality surfaces."""

__version__ = "0.1.0"

from .estimator import LexisMortalitySmoother
from .exceptions import (
                         CoverageGapError,
                         DataValidationError,
                         DimensionError,
                         LexisError,
                         NonFinitePotentialError,
)
from .lattice import (
                         Knot,
                         LexisLattice,
                         MortalityData,
                         build_lattice,
                         neighbors,
                         validate_data,
)
from .model import (
                         FieldState,
                         Hyperparameters,
                         Offset,
                         baseline_rate,
                         local_potential_x,
                         local_potential_z,
                         log_posterior,
                         pair_energy,
)
from .sampler import (
                         ChainOutput,
                         EstimateSet,
                         SamplerConfig,
                         adapt_proposals,
                         gibbs_update_precisions,
                         metropolis_sweep,
                         posterior_means,
                         run_chain,
                         run_chains,
)
from .surfaces import (
                         SurfaceSet,
                         conditional_sd,
                         decompose,
                         empirical_surface,
                         extract_profile,
                         precision_ratio,
)
from .synthetic import SyntheticSpec, generate_synthetic

__all__ = [
    "ChainOutput", "CoverageGapError", "DataValidationError", "DimensionError", "EstimateSet",
    "FieldState", "Hyperparameters", "Knot", "LexisError", "LexisLattice", "LexisMortalitySmoother",
    "MortalityData", "NonFinitePotentialError", "Offset", "SamplerConfig", "SurfaceSet",
    "SyntheticSpec", "adapt_proposals", "baseline_rate", "build_lattice", "conditional_sd",
    "decompose", "empirical_surface", "extract_profile", "generate_synthetic",
    "gibbs_update_precisions", "local_potential_x", "local_potential_z", "log_posterior",
    "metropolis_sweep", "neighbors", "pair_energy", "posterior_means", "precision_ratio",
    "run_chain", "run_chains", "validate_data",
]
