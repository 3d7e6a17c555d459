//! Channel coding: CRC, LDPC data chain, polar and Reed-Muller control codes.

pub mod chain;
pub mod crc;
pub mod ldpc;
pub mod polar;
pub mod ratematch;
pub mod segment;
pub mod smallblock;

pub use chain::{descramble_llr, scramble, uci_decode, uci_encode, TbChain, TbDecoded};
pub use crc::{crc_attach, crc_check, CrcPoly};
pub use ldpc::{BaseGraphId, LdpcCode, LdpcOutput};
pub use polar::{polar_decode, polar_encode, PolarCode, PolarSpec};
pub use ratematch::{concat, rate_match, rate_recover, BufferLayout, RateMatchSpec};
pub use segment::{desegment, segment, select_base_graph, CodeBlock, Segmentation};
pub use smallblock::{small_block_decode, small_block_encode};

use crate::error::{domain, Result};

/// LLR given to filler bits, which are known zeros.
const FILLER_LLR: f32 = 1e6;

/// Encodes one code block, returning the N = (cols - 2) * Z transmitted bits.
pub fn ldpc_encode(cb: &CodeBlock, bg: BaseGraphId) -> Result<Vec<u8>> {
    if cb.bg != bg {
        return Err(domain!("code block was segmented for {:?}, not {bg:?}", cb.bg));
    }
    LdpcCode::get(bg, cb.lifting_size)?.encode(&cb.bits)
}

/// Rate recovery plus decoding of one code block from its E received LLRs.
/// Returns the K' decoded bits (payload and CB CRC) and the convergence flag.
pub fn ldpc_decode(
    llr: &[f64],
    layout: &BufferLayout,
    k_prime: usize,
    spec: &RateMatchSpec,
    max_iters: usize,
) -> Result<LdpcOutput> {
    let code = LdpcCode::get(layout.bg, layout.z)?;
    let part: Vec<f32> = llr.iter().map(|&v| v as f32).collect();
    let buf = rate_recover(&part, layout, spec)?;
    let mut full = vec![0f32; code.n_full()];
    full[2 * layout.z..].copy_from_slice(&buf);
    for i in layout.filler.clone() {
        full[i] = FILLER_LLR;
    }
    let mut out = code.decode_full(&full, max_iters);
    out.bits.truncate(k_prime);
    Ok(out)
}
