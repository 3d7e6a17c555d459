//! SS burst set scheduling: which slots and symbols carry each SSB index.

use crate::error::{domain, Result};
use crate::numerology::{Numerology, SYMBOLS_PER_SLOT};

pub const MAX_SSB_PER_BURST: usize = 64;
pub const HALF_FRAME_MS: f64 = 5.0;
pub const BURST_PERIODS_MS: [u32; 6] = [5, 10, 20, 40, 80, 160];

/// Candidate position patterns, one per numerology family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BurstCase {
    A,
    B,
    C,
    D,
    E,
}

impl BurstCase {
    pub fn default_for_scs(scs_khz: u32) -> Result<Self> {
        match scs_khz {
            15 => Ok(BurstCase::A),
            30 => Ok(BurstCase::B),
            120 => Ok(BurstCase::D),
            240 => Ok(BurstCase::E),
            _ => Err(domain!(
                "SSB subcarrier spacing must be 15, 30, 120 or 240 kHz, got {scs_khz}"
            )),
        }
    }

    pub fn scs_khz(self) -> u32 {
        match self {
            BurstCase::A => 15,
            BurstCase::B | BurstCase::C => 30,
            BurstCase::D => 120,
            BurstCase::E => 240,
        }
    }

    pub fn max_ssb(self) -> usize {
        match self {
            BurstCase::A | BurstCase::B | BurstCase::C => 8,
            BurstCase::D | BurstCase::E => 64,
        }
    }

    /// First symbols (counted over the half frame) of all candidate blocks.
    pub fn candidates(self) -> Vec<usize> {
        let (base, step, ns): (&[usize], usize, &[usize]) = match self {
            BurstCase::A | BurstCase::C => (&[2, 8], 14, &[0, 1, 2, 3]),
            BurstCase::B => (&[4, 8, 16, 20], 28, &[0, 1]),
            BurstCase::D => (
                &[4, 8, 16, 20],
                28,
                &[0, 1, 2, 3, 5, 6, 7, 8, 10, 11, 12, 13, 15, 16, 17, 18],
            ),
            BurstCase::E => (&[8, 12, 16, 20, 32, 36, 40, 44], 56, &[0, 1, 2, 3, 5, 6, 7, 8]),
        };
        ns.iter()
            .flat_map(|&n| base.iter().map(move |&s| s + step * n))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsbConfig {
    pub scs_khz: u32,
    pub burst_periodicity_ms: u32,
    pub num_ssb: usize,
    pub frequency_offset_rb: usize,
    pub case: Option<BurstCase>,
}

impl Default for SsbConfig {
    fn default() -> Self {
        Self {
            scs_khz: 15,
            burst_periodicity_ms: 20,
            num_ssb: 4,
            frequency_offset_rb: 0,
            case: None,
        }
    }
}

impl SsbConfig {
    pub fn burst_case(&self) -> Result<BurstCase> {
        let case = match self.case {
            Some(c) => c,
            None => BurstCase::default_for_scs(self.scs_khz)?,
        };
        if case.scs_khz() != self.scs_khz {
            return Err(domain!("burst case {case:?} does not use {} kHz", self.scs_khz));
        }
        Ok(case)
    }

    pub fn validate(&self) -> Result<()> {
        let case = self.burst_case()?;
        if !BURST_PERIODS_MS.contains(&self.burst_periodicity_ms) {
            return Err(domain!(
                "unsupported burst periodicity {} ms",
                self.burst_periodicity_ms
            ));
        }
        if self.num_ssb == 0 || self.num_ssb > case.max_ssb() {
            return Err(domain!(
                "{} SSBs requested, {} kHz allows at most {}",
                self.num_ssb,
                self.scs_khz,
                case.max_ssb()
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BurstPosition {
    pub ssb_index: usize,
    pub slot: usize,
    pub start_symbol: usize,
}

impl BurstPosition {
    /// Start of the block relative to the burst period, in seconds.
    pub fn start_time_s(&self, num: &Numerology) -> f64 {
        let l = self.slot * SYMBOLS_PER_SLOT + self.start_symbol;
        let per_subframe = num.symbols_per_subframe();
        let subframes = l / per_subframe;
        let tc: u64 = (0..l % per_subframe).map(|i| num.symbol_duration_tc(i)).sum();
        subframes as f64 * 1e-3 + tc as f64 * crate::numerology::TC_SECONDS
    }

    /// End of the block's last symbol, in seconds.
    pub fn end_time_s(&self, num: &Numerology) -> f64 {
        let last = BurstPosition {
            start_symbol: self.start_symbol + 4,
            ..*self
        };
        last.start_time_s(num)
    }
}

pub fn burst_positions(cfg: &SsbConfig) -> Result<Vec<BurstPosition>> {
    cfg.validate()?;
    Ok(cfg
        .burst_case()?
        .candidates()
        .into_iter()
        .take(cfg.num_ssb)
        .enumerate()
        .map(|(i, s)| BurstPosition {
            ssb_index: i,
            slot: s / SYMBOLS_PER_SLOT,
            start_symbol: s % SYMBOLS_PER_SLOT,
        })
        .collect())
}
