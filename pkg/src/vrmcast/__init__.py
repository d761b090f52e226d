"""Energy-minimal multicast of multi-quality tiled 360 video, with and without user transcoding."""
from .baselines import solve_baseline_max_quality, solve_baseline_unicast
from .convex_engine import Allocation, SolverReport, Tolerances, perspective_rate, solve_convex
from .core_model import ChannelModel, Instance, SystemParams, UserDemand, VideoConfig, validate_instance
from .partition import Partition, compute_partition, tiles_for_fov
from .planner_no_transcode import solve_no_transcode
from .planner_transcode_dc import DCOptions, SelectionY, solve_transcode_dc

__version__ = "0.1.0"

__all__ = [
    "Allocation", "ChannelModel", "DCOptions", "Instance", "Partition", "SelectionY", "SolverReport",
    "SystemParams", "Tolerances", "UserDemand", "VideoConfig", "compute_partition", "perspective_rate",
    "solve_baseline_max_quality", "solve_baseline_unicast", "solve_convex", "solve_no_transcode",
    "solve_transcode_dc", "tiles_for_fov", "validate_instance",
]
