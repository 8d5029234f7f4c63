"""Few-shot OOD detection from diffusion-trajectory energy features."""

__version__ = "0.1.0"

from .coreset import ReferenceSet, facility_location_greedy, k_center_greedy, random_select
from .energy import EnergyFeature, energy_feature, extract_features, path_energy, dynamics_energy
from .evaluation import TaskResult, auroc, run_task
from .gmm import GaussianMixture, oracle_noise_prediction, sample_trajectory
from .schedule import NoiseSchedule, forward_noise, make_linear_schedule
from .scoring import CalibrationStats, ScoreConfig, calibrate, fit_calibration, soft_min_score
from .trajectory_io import TrajectoryBatch, read_batch, write_batch
