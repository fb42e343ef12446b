//! Tracking data: the frame-dictionary clip format and the transforms that
//! turn raw clips into model-ready segments.

pub mod clip;
pub mod format;
pub mod refine;
pub mod resample;
pub mod segment;
pub mod track;

pub use clip::{ClipMeta, Frame, PitchSpec, Point, RawClip, RawFrame, Sport, TrajectoryClip, BOUNDS_SLACK};
pub use format::{parse_clip, parse_raw_clip, round2, serialize_clip};
pub use refine::{refine, refine_raw, RefineParams};
pub use resample::resample;
pub use segment::{denormalize_point, flip_augment, normalize_point, window_starts, Segment};
pub use track::Track;
