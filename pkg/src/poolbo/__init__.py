"""Pool-based Bayesian optimization with deep-kernel GP surrogates.

Candidate pools arrive as embedding files; the optimizer trains a Matern-5/2
GP (optionally through a learned projection feature map) by exact marginal
likelihood and picks candidates by Expected Improvement.
"""

from .acquisition import expected_improvement, random_select, score_pool, select_next
from .engine import (BOSession, EngineConfig, InitPolicy, init_design,
                     new_session, replay_session, run_bo)
from .errors import (ConfigError, DataError, FormatError, PoolboError,
                     PoolExhaustedError, SingularKernelError)
from .gp import (FittedSurrogate, GPHyperparams, KernelMatrix,
                 PosteriorGaussian, fit_fixed, kernel_matrix, matern52, mll,
                 mll_and_grad, mll_and_grad_features, mll_grad)
from .metrics import (CoverageSpec, aggregate, class_pair_distances, nlpd, r2,
                      separation_stats, smoothness_ratio, topk_coverage,
                      weighted_r2)
from .pools import (CandidatePool, Standardizer, load_pool, save_pool,
                    standardize_targets)
from .projection import ProjectionMap, init_projection, project
from .synth import SyntheticSpec, generate
from .training import TrainConfig, contrastive_trace, joint_fit

__version__ = "0.1.0"
