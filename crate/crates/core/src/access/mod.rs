//! Initial access: SSB composition and burst scheduling, cell search and
//! random-access preambles.

pub mod burst;
pub mod cellsearch;
pub mod prach;
pub mod ssb;

pub use burst::{burst_positions, BurstCase, BurstPosition, SsbConfig};
pub use cellsearch::{cell_search, generate_burst, CellSearchResult, SearchConfig};
pub use prach::{detect_prach, generate_prach, PrachDetection, PrachFormat, PrachKind, PrachZoneConfig};
pub use ssb::{build_ssb, SsBlock};

/// Threshold giving a false-alarm rate of `pfa` over the supplied pure-noise
/// detection statistics (their `1 - pfa` quantile).
pub fn calibrate_threshold(noise_metrics: &[f64], pfa: f64) -> f64 {
    crate::dsp::percentile(noise_metrics, 1.0 - pfa)
}
