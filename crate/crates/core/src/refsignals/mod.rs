//! Reference signals: DMRS, PTRS, CSI-RS and SRS placement and values.

pub mod csirs;
pub mod dmrs;
pub mod ptrs;
pub mod srs;

pub use csirs::{csirs_map, CsirsConfig, CsirsMapping, CsirsPattern, CsirsPeriodicity};
pub use dmrs::{dmrs_map, dmrs_port_params, dmrs_symbols, DmrsConfig, DmrsMapping, DmrsSequenceMode};
pub use ptrs::{ptrs_density_for, ptrs_map, ptrs_symbols, PtrsConfig};
pub use srs::{srs_map, SrsConfig, SrsMapping};
