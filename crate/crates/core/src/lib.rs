//! Link-level simulation of the 5G NR physical layer.
//!
//! Transmit chains build resource grids and time-domain waveforms for the
//! synchronization, random-access, control and shared channels; receive chains
//! recover them after an AWGN/CFO/delay channel. [`linksim`] ties the pieces
//! into seeded Monte-Carlo runs.

pub mod access;
pub mod coding;
pub mod control;
pub mod dsp;
pub mod error;
pub mod linksim;
pub mod modulation;
pub mod numerology;
pub mod par;
pub mod refsignals;
pub mod sequences;

pub use error::{Error, Result};

pub type Cplx = num_complex::Complex64;
