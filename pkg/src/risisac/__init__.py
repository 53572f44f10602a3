"""Joint transmit beamforming and RIS reflection design for sensing-and-communication systems."""

from .alg_crb import run_algorithm2
from .alg_snr import run_algorithm1
from .baselines import baseline_bf_only, baseline_comm_only, baseline_separate
from .channels import ChannelSet, build_channel_set, derive_geometry, realize, steering_vector
from .config import SystemConfig, load_config, parse_config
from .crb import crb_value, fim
from .experiment import ExperimentSpec, run_experiment
from .metrics import DesignVariables, RunTrace, radar_snr_lower_bound, sinr, sum_rate, transmit_beampattern
from .solvers import InfeasibleError, SolverError

__all__ = [
    "ChannelSet",
    "DesignVariables",
    "ExperimentSpec",
    "InfeasibleError",
    "RunTrace",
    "SolverError",
    "SystemConfig",
    "baseline_bf_only",
    "baseline_comm_only",
    "baseline_separate",
    "build_channel_set",
    "crb_value",
    "derive_geometry",
    "fim",
    "load_config",
    "parse_config",
    "radar_snr_lower_bound",
    "realize",
    "run_algorithm1",
    "run_algorithm2",
    "run_experiment",
    "sinr",
    "steering_vector",
    "sum_rate",
    "transmit_beampattern",
]
