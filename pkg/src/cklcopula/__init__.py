"""Normalizing-function-free estimation of minimum information copulas
with the conditional KL score."""
from .core import (BasisSet, DomainError, GaussianCopulaParams, UnitPoint,
                   UnnormalizedLogDensity, gaussian_copula_log_density,
                   gaussian_normalizing_function, register_basis, rho_to_theta,
                   std_normal_cdf, std_normal_quantile, theta_to_rho)
from .estimation import (EstimationResult, OptimizerConfig, estimate_ckl,
                         estimate_ckl_allpairs, estimate_mle_gaussian, pair_randomly)
from .experiments import ErrorCurve, ExperimentConfig, emit_csv, loglog_fit, run_experiment
from .sampling import RandomSource, SampleBatch, sample_gaussian_copula, sample_minfo_approx
from .sampling import swap_probability
from .scoring import (ObservationPair, PairedDataset, all_pairs_ckl_score, ckl_score,
                      empirical_ckl_gradient, empirical_ckl_hessian, empirical_ckl_score,
                      h_vector, kl_score)

__version__ = "0.1.0"
