//! Brute-force checks: uniform scatterer sampling, weighted histograms and
//! synthetic channel realizations with empirical correlation estimators.

mod channel;
mod sampling;

pub use channel::{
    estimate_ph, estimate_rl, pearson, synthesize_channel, synthesize_from_scatterers, transfer_function, ChannelRealization,
    ChannelSpec, LagAxis, PhEstimate,
};
pub use sampling::{
    empirical_surface, l1_distance, mc_weighted_area, sample_scatterers, weighted_histogram, Histogram, ScattererSample, Weighting,
    CHUNK,
};
