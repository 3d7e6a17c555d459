//! Synchronization signal / PBCH block composition.
//!
//! Layout over 4 symbols x 240 subcarriers: PSS on symbol 0 and SSS on
//! symbol 2, both on subcarriers 56..=182; PBCH on symbols 1 and 3 and on the
//! SSS symbol outside 48..192, with PBCH DMRS on every fourth of those
//! subcarriers starting at `pci mod 4`.

use crate::coding::chain::{descramble_llr, scramble};
use crate::coding::crc::CrcPoly;
use crate::coding::polar::{PolarCode, PolarSpec};
use crate::error::{domain, Result};
use crate::linksim::ofdm::{ofdm_modulate_port, OfdmConfig};
use crate::modulation::{modulate, soft_demod, ModOrder};
use crate::numerology::{Numerology, ResourceGrid};
use crate::sequences::{gold_qpsk, pss_sequence, sss_sequence, CellId};
use crate::Cplx;

pub const SSB_SYMBOLS: usize = 4;
pub const SSB_SUBCARRIERS: usize = 240;
pub const SSB_RB: usize = 20;
/// First subcarrier of PSS/SSS inside the block.
pub const SYNC_START: usize = 56;
pub const PBCH_PAYLOAD_BITS: usize = 32;
/// Coded PBCH bits per block (432 QPSK REs).
pub const PBCH_E: usize = 864;
pub const MAX_SSB_INDEX: usize = 64;

#[derive(Debug, Clone)]
pub struct SsBlock {
    pub grid: ResourceGrid,
    pub pci: CellId,
    pub ssb_index: usize,
    pub pbch_payload: Vec<u8>,
}

fn is_pbch_re(k: usize, l: usize) -> bool {
    match l {
        1 | 3 => true,
        2 => !(48..192).contains(&k),
        _ => false,
    }
}

/// PBCH REs in mapping order (frequency first), split into DMRS and data.
pub fn pbch_res(pci: CellId) -> (Vec<(usize, usize)>, Vec<(usize, usize)>) {
    let v = pci.pci as usize % 4;
    let mut dmrs = Vec::with_capacity(144);
    let mut data = Vec::with_capacity(432);
    for l in 1..SSB_SYMBOLS {
        for k in (0..SSB_SUBCARRIERS).filter(|&k| is_pbch_re(k, l)) {
            if k % 4 == v {
                dmrs.push((k, l));
            } else {
                data.push((k, l));
            }
        }
    }
    (dmrs, data)
}

pub fn pbch_dmrs_c_init(pci: CellId, ssb_index: usize) -> u32 {
    let i = (ssb_index % 8) as u32 + 1;
    let n = u32::from(pci.pci);
    ((i * (n / 4 + 1)) << 11) + (i << 6) + n % 4
}

pub fn pbch_dmrs(pci: CellId, ssb_index: usize) -> Vec<Cplx> {
    gold_qpsk(pbch_dmrs_c_init(pci, ssb_index), 0, 144)
}

fn pbch_polar() -> PolarCode {
    PolarCode::new(PolarSpec::new(PBCH_PAYLOAD_BITS, PBCH_E, CrcPoly::Crc24C).with_n_max(9))
        .expect("valid PBCH polar parameters")
}

/// Polar-coded, scrambled and QPSK-modulated PBCH symbols.
pub fn pbch_encode(pci: CellId, payload: &[u8]) -> Result<Vec<Cplx>> {
    if payload.len() != PBCH_PAYLOAD_BITS {
        return Err(domain!(
            "PBCH payload must be {PBCH_PAYLOAD_BITS} bits, got {}",
            payload.len()
        ));
    }
    let coded = pbch_polar().encode(payload)?;
    modulate(&scramble(&coded, u32::from(pci.pci)), ModOrder::Qpsk)
}

/// Recovers the PBCH payload from equalized data symbols; `None` on CRC failure.
pub fn pbch_decode(pci: CellId, symbols: &[Cplx], noise_var: f64) -> Result<Option<Vec<u8>>> {
    if symbols.len() != PBCH_E / 2 {
        return Err(domain!("PBCH needs {} symbols, got {}", PBCH_E / 2, symbols.len()));
    }
    let llr = descramble_llr(&soft_demod(symbols, ModOrder::Qpsk, noise_var), u32::from(pci.pci));
    pbch_polar().decode(&llr)
}

pub fn build_ssb(pci: CellId, payload: &[u8], ssb_index: usize) -> Result<SsBlock> {
    if ssb_index >= MAX_SSB_INDEX {
        return Err(domain!("SSB index {ssb_index} outside 0..{MAX_SSB_INDEX}"));
    }
    let pbch = pbch_encode(pci, payload)?;
    let mut grid = ResourceGrid::new(1, SSB_RB, SSB_SYMBOLS)?;
    let place = |seq: &[Cplx], l: usize| -> Vec<(usize, usize, Cplx)> {
        seq.iter().enumerate().map(|(i, &v)| (SYNC_START + i, l, v)).collect()
    };
    grid.map_res(0, &place(&pss_sequence(pci.nid2)?, 0), "pss")?;
    grid.map_res(0, &place(&sss_sequence(pci), 2), "sss")?;
    let (dmrs_res, data_res) = pbch_res(pci);
    let dmrs: Vec<_> = dmrs_res
        .iter()
        .zip(pbch_dmrs(pci, ssb_index))
        .map(|(&(k, l), v)| (k, l, v))
        .collect();
    grid.map_res(0, &dmrs, "pbch-dmrs")?;
    let data: Vec<_> = data_res.iter().zip(pbch).map(|(&(k, l), v)| (k, l, v)).collect();
    grid.map_res(0, &data, "pbch")?;
    Ok(SsBlock {
        grid,
        pci,
        ssb_index,
        pbch_payload: payload.to_vec(),
    })
}

/// OFDM config for an SSB-only capture: 240 subcarriers centred on DC.
pub fn ssb_ofdm_config(scs_khz: u32, fft_size: usize) -> Result<OfdmConfig> {
    let num = Numerology::from_scs_khz(scs_khz)?;
    // keep clear of the long-CP symbols at the half-subframe boundaries
    Ok(OfdmConfig::with_fft_size(&num, SSB_SUBCARRIERS, fft_size)?.starting_at(2))
}

/// Time samples of one block, starting at the CP of the PSS symbol.
pub fn ssb_waveform(block: &SsBlock, cfg: &OfdmConfig) -> Result<Vec<Cplx>> {
    ofdm_modulate_port(&block.grid, 0, cfg)
}
