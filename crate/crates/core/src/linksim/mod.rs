//! Waveform engine, channel, shared-channel chains and the Monte-Carlo
//! harness.

pub mod channel;
pub mod config;
pub mod io;
pub mod ofdm;
pub mod receiver;
pub mod shared;
pub mod sim;

pub use channel::{channel_apply, trial_rng, ChannelConfig, MimoChannel};
pub use config::RawConfig;
pub use io::{read_iq, read_iq_meta, write_csv, write_iq, CsvRow, IqMeta, CSV_HEADER};
pub use ofdm::{ofdm_demodulate, ofdm_modulate, OfdmConfig};
pub use receiver::Equalizer;
pub use shared::{run_trial, SharedChannelConfig, SharedPlan};
pub use sim::{run_scenario, run_sim, Scenario, SimConfig, SimResult};
