//! Windowed diffusion forecasting: schedule, noising, the noise-prediction
//! network, reverse sampling and sliding-window rollout.

pub mod conditioning;
pub mod denoiser;
pub mod model;
pub mod rollout;
pub mod schedule;

pub use conditioning::{condition_tagging, Filter, Objective, Setting};
pub use denoiser::{Counting, Denoiser, OracleDenoiser, ZeroDenoiser};
pub use model::{diffusion_loss, held_out_loss, loss_on_grids, validation_loss, ForecastNet, ForecastSample, Forecaster, ForecasterConfig, NetDenoiser};
pub use rollout::{rollout, sample_window, seconds_to_frames, write_sample_files, FutureSampleSet, RolloutConfig};
pub use schedule::{
    denoise_step, forward_noise, make_schedule, noise_with, DiffusionSchedule, Sampler, ScheduleConfig,
};
