"""
Core functionality of ergodic-eki.
Contains the integrators, statistics, EKI solver, function parameterizations,
benchmark systems and experiment plumbing.
"""

from .config import *
from .data_manager import DataManager, compare_invariant_measures, ingest_timeseries
from .eki import InverseProblem, eki_step, misfit, run_eki, sample_initial_ensemble
from .errors import *
from .experiment_config import ExperimentConfig, load_config
from .funcparam import GPMeanFunction, GaussianBasisFunction, ParameterLayout, ParameterSlice
from .models import *
from .observables import assemble_data, compute_acf, compute_moments, compute_psd_polyfit, estimate_gamma
from .rng import RngStream, gaussian_increments
from .runner import ResultBundle, run_experiment
from .sde_core import Langevin2Model, SddeModel, SdeModel, integrate_em, integrate_langevin2, integrate_sdde
from .systems import MODEL_REGISTRY, ModelSpec, build_model

__all__ = [
    'DataManager', 'compare_invariant_measures', 'ingest_timeseries',
    'InverseProblem', 'eki_step', 'misfit', 'run_eki', 'sample_initial_ensemble',
    'ExperimentConfig', 'load_config',
    'GPMeanFunction', 'GaussianBasisFunction', 'ParameterLayout', 'ParameterSlice',
    'Trajectory', 'StatisticsSpec', 'DataVector', 'Ensemble', 'EkiHistory', 'PriorSpec', 'StoppingRule',
    'assemble_data', 'compute_acf', 'compute_moments', 'compute_psd_polyfit', 'estimate_gamma',
    'RngStream', 'gaussian_increments',
    'ResultBundle', 'run_experiment',
    'SdeModel', 'SddeModel', 'Langevin2Model', 'integrate_em', 'integrate_sdde', 'integrate_langevin2',
    'MODEL_REGISTRY', 'ModelSpec', 'build_model',
    'ErgodicEkiError', 'ConfigError', 'DataFileError',
    'BUNDLE_FILES', 'DIRECTORIES', 'EXIT_CODES', 'PAGES',
]
