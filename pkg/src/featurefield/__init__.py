"""Feature-based potential field for low-level active visual navigation."""
from .camera import CameraRig
from .field_core import (
    Charge,
    DegenerateRigError,
    FeatureSet,
    FieldParams,
    ImagePoint,
    blend_command,
    charge_energy,
    charge_force,
    circular_segment_angle,
    compute_command,
    feature_velocity,
    make_charges,
    project_goal_direction,
    total_force,
)
from .field_map import ChargeHeatMap, FieldMap, GridSpec, charge_heatmap, evaluate_grid, render
from .sim_world import Arena, Outcome, Trajectory, WorldFeature, run_scenario

__version__ = "0.1.0"
