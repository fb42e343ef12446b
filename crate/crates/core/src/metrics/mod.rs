//! Displacement errors, team-structure measures and EPV-based offense and
//! defense measures.

pub mod displacement;
pub mod events;
pub mod pitch_control;
pub mod report;
pub mod structure;

pub use displacement::{ade, aggregate_over_k, fde, segment_errors, HorizonErrors};
pub use events::{event_metrics, event_report_csv, EventReport, RecallAtK};
pub use pitch_control::{
    arrival_time, control_map, defensive_disruption, depth_threat, dominant_region, obet, width_threat, ControlGrid,
    ControlRule, DominantRegion, EpvGrid, Kinematics, Mover, Owner, TIE_SECONDS, ZONES,
};
pub use report::{
    offense_defense, trajectory_csv, trajectory_report, OffenseDefense, TrajectoryRow, OFFENSE_DEFENSE_COLUMNS,
    TRAJECTORY_COLUMNS,
};
pub use structure::{
    centroid, convex_hull, polygon_area, structure, structure_deltas, structure_deviation, team_series,
    StructureVector, KURAMOTO_MIN_SPEED, STRUCTURE_COLUMNS,
};
