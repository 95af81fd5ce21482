"""Lane distance-based evaluation of multi-modal trajectory predictions.

Prediction endpoints and the ground-truth endpoint are assigned to lane
segment centerlines; a prediction counts as a hit when its assigned point
lies within a velocity-dependent threshold of the ground-truth point,
measured along the lane graph. The resulting lane miss rate is reported
alongside the standard Euclidean metrics (minADE, minFDE, MR).
"""

from .assignment import (
    AssignmentConfig,
    LaneAssignment,
    get_lane_assignments,
    select_ground_truth_assignment,
    select_prediction_assignments,
)
from .geometry import (
    ArcProjection,
    Point2,
    Polyline,
    heading_at_end,
    heading_on_polyline_at,
    point_in_polygon,
    project_onto_polyline,
    wrapped_angle_diff,
)
from .lane_distance import LanePoint, ReachResult, oracle_lane_distance, within_lane_distance
from .lane_graph import LaneGraph, LaneGraphError, LaneSegment, build_lane_graph, lane_polygon
from .metrics import (
    EvalSequence,
    MetricConfig,
    MetricReport,
    MissMatrix,
    PredictionSet,
    Trajectory,
    accumulate_lmr,
    average_velocity,
    euclidean_metrics,
    evaluate_dataset,
    evaluate_sequence,
    get_is_miss,
    hit_threshold,
)
from .scenario_io import (
    PredictionFile,
    ScenarioFile,
    SchemaError,
    build_sequence,
    load_predictions,
    load_scenario,
    parse_report,
    write_predictions,
    write_report,
    write_scenario,
)
from .spatial_index import CenterlineIndex, Mbr, build_index, query_candidates

__version__ = "0.1.0"
