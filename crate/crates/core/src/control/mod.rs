//! Downlink and uplink control channels: CORESETs, PDCCH blind decoding and
//! the PUCCH formats.

pub mod coreset;
pub mod pdcch;
pub mod pucch;
pub mod resources;

pub use coreset::{cce_to_regs, CceRegMapping, Coreset, Reg};
pub use pdcch::{
    assemble_pdcch, blind_search, candidate_cces, dci_decode, dci_encode, DecodedDci, PdcchCandidate, PdcchConfig,
    SearchSpace,
};
pub use pucch::{build_pucch, decode_pucch, PucchContext, PucchFormat, PucchResource};
pub use resources::{select_pucch_resource, PucchResourceSet, PucchResourceSets};
