//! Fits of interferograms and auxiliary data.

mod angles;
mod counts;
mod cross_section;
mod fringe;
pub(crate) mod lm;

pub use angles::{
    divergence_from_width, extract_angles, period_from_tilt, tilt_from_period, width_from_divergence, BeamAngles,
};
pub use counts::{
    classify_frames, normalized_signal_from_counts, poisson_counts, CountEstimate, FrameClassification, NEAR_SATURATION,
};
pub use cross_section::{fit_cross_section, saturation_model, CrossSectionFit, FluencePoint};
pub use fringe::{
    fit_fringe, fit_fringe_model, fit_fringe_model_free, fringe_noise_trials, noisy_fringe_fits, synthetic_curve,
    FringeFit, FringeParams, FringeUncertainties, NoiseTrials, PhaseMode,
};
