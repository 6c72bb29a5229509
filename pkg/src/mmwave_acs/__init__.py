"""Adaptive compressed-sensing channel estimation for mmWave MIMO links."""
from .array import AngleGrid, UlaConfig, fold_angle, make_grid, steering_derivative, steering_vector
from .channel import (ChannelRealization, PathParams, PathSamplerConfig, measure,
                      noise_var_for_snr, sample_paths, synthesize_channel)
from .codebook import (Dictionary, HierarchicalCodebook, build_cbp_dictionary, build_codebook,
                       build_grid_dictionary, coverage_index_set)
from .estimation import (EstimateResult, MultipathEstimate, StageTrace, estimate_multipath_joint,
                         estimate_multipath_sequential, estimate_single_path)
from .sim import (ExperimentConfig, angle_error, reconstruct_channel, run_experiment,
                  spectral_efficiency)

__version__ = "0.1.0"
