//! Spatially-adaptive identity injection.
//!
//! Identity features enter a diffusion transformer as a cross-attention
//! residual `h + alpha * CA(z, h)`. This crate replaces the uniform residual
//! with `h + alpha * M_t * CA(z, h)`, where the per-patch mask `M_t` comes
//! from the attention response itself and changes form over the denoising
//! trajectory:
//!
//! * [`extract`]: L2-norm relevance, Gaussian smoothing, soft-hard blend, dilation
//! * [`schedule`]: center prior early, extracted mask mid, floored mask late
//! * [`inject`]: uniform and masked residual injection, injected energy
//! * [`harness`]: synthetic trajectories with a planted face region
//! * [`io`]: SIDT tensors, PGM masks, metrics CSV, run configuration
//!
//! Inner loops run on rayon when the default `parallel` feature is enabled.

pub mod attention;
pub mod config;
pub mod error;
pub mod extract;
pub mod grid;
pub mod harness;
pub mod inject;
pub mod io;
pub mod mask;
pub mod matrix;
pub mod par;
pub mod rng;
pub mod schedule;
pub mod states;

pub use attention::{cross_attention, init_params, softmax_row, AttentionOutput, CrossAttentionParams};
pub use config::ScheduleConfig;
pub use error::{Error, Result};
pub use extract::{dilate, extract_mask, gaussian_blur, l2_relevance, soft_hard_combine, RelevanceMap};
pub use grid::{normalized_timestep, PatchGrid};
pub use harness::{
    compare_uniform_vs_spatial, mask_iou, run_trajectory, synth_attention_output, PatchSet,
    StepRecord, SyntheticScenario, TrajectoryReport,
};
pub use inject::{inject_masked, inject_uniform, injection_energy};
pub use mask::SpatialMask;
pub use matrix::Matrix;
pub use rng::Rng;
pub use schedule::{
    apply_global_floor, center_gaussian_prior, phase_of, relax_late, schedule_mask, Phase,
};
pub use states::{HiddenStates, IdentityTokens};
