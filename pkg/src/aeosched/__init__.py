"""Weather-aware scheduling of an agile Earth observation satellite.

Scenario generation, the attitude/maneuver model, a graph-based MDP, a GAT
Q-network trained by deep Q-learning, baseline and exact schedulers, and an
evaluation harness.
"""

from .agent import TrainingConfig, evaluate_policy, train
from .geometry import Attitude, GroundPoint, SatelliteConfig, VisibleTimeWindow
from .graph_env import SchedulingEnv
from .maneuver import displacement, transition_time
from .neural import QNetwork, load_checkpoint, save_checkpoint
from .scenario import GenerationConfig, Scenario, generate, load, save
from .schedulers import Schedule, exact_oracle, max_resolution, max_targets, validate

__version__ = "0.1.0"
