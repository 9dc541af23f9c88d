"""Sequential class selection for optimal Bayesian classification of NB count data."""
from ._accel import backend
from .distributions import (
    ParameterError,
    RngStream,
    nb_log_pmf,
    sample_beta,
    sample_crt,
    sample_gamma,
    sample_logarithmic,
    sample_nb,
)
from .gibbs import GibbsConfig, PosteriorSamples, run_gibbs
from .harness import ConfigError, ScenarioConfig, StepRecord, load_config, run_repetition, run_scenario
from .model import Dataset, Hyperparameters, ModelParams, SamplePoint, draw_true_params, generate_labeled_set, generate_sample
from .obc import ErrorEstimate, ObcClassifier, classify, effective_log_density, estimate_error
from .sampler import SamplerConfig, choose_next_class, expected_error_if_sampled

__version__ = "0.1.0"
