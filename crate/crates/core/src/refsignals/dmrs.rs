//! Demodulation reference signals for the shared channels.
//!
//! One pattern serves up to 12 ports: three CDM groups occupy subcarrier
//! pairs `{6n + 2g, 6n + 2g + 1}`; within a group, ports are separated by a
//! length-2 frequency cover over the pair and, for double-symbol DMRS, a
//! length-2 time cover over the two symbols.

use crate::error::{domain, Result};
use crate::numerology::{Allocation, Re, ReSet, SUBCARRIERS_PER_RB};
use crate::sequences::{gold_qpsk, low_papr_sequence, NUM_LOW_PAPR_GROUPS};
use crate::Cplx;

pub const MAX_DMRS_PORTS: usize = 12;
pub const NUM_CDM_GROUPS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DmrsSequenceMode {
    GoldQpsk,
    /// Low-PAPR sequence for DFT-s-OFDM; single port over every subcarrier.
    ZcLowPapr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DmrsConfig {
    pub num_front_symbols: usize,
    pub additional_positions: usize,
    pub num_ports: usize,
    pub sequence_mode: DmrsSequenceMode,
}

impl Default for DmrsConfig {
    fn default() -> Self {
        Self {
            num_front_symbols: 1,
            additional_positions: 0,
            num_ports: 1,
            sequence_mode: DmrsSequenceMode::GoldQpsk,
        }
    }
}

impl DmrsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=2).contains(&self.num_front_symbols) || self.additional_positions > 3 {
            return Err(domain!("unsupported DMRS symbol configuration {self:?}"));
        }
        if self.num_ports == 0 || self.num_ports > MAX_DMRS_PORTS {
            return Err(domain!(
                "DMRS supports 1..={MAX_DMRS_PORTS} ports, got {}",
                self.num_ports
            ));
        }
        if self.num_ports > 6 && self.num_front_symbols < 2 {
            return Err(domain!("more than 6 DMRS ports need double-symbol DMRS"));
        }
        if self.sequence_mode == DmrsSequenceMode::ZcLowPapr && self.num_ports != 1 {
            return Err(domain!("low-PAPR DMRS carries a single port"));
        }
        Ok(())
    }
}

/// Cover code assignment of a port.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DmrsPortParams {
    pub cdm_group: usize,
    /// Sign applied to the second subcarrier of each pair.
    pub fd_occ: i8,
    /// Sign applied to the second DMRS symbol.
    pub td_occ: i8,
}

pub fn dmrs_port_params(port: usize) -> DmrsPortParams {
    let q = port % 6;
    DmrsPortParams {
        cdm_group: q / 2,
        fd_occ: if q.is_multiple_of(2) { 1 } else { -1 },
        td_occ: if port < 6 { 1 } else { -1 },
    }
}

/// Subcarriers (absolute) of `group` inside the allocation.
pub fn cdm_group_subcarriers(alloc: &Allocation, group: usize) -> Vec<usize> {
    alloc.subcarriers().filter(|k| (k % 6) / 2 == group).collect()
}

/// DMRS symbols (absolute) for `cfg` inside `alloc`.
pub fn dmrs_symbols(cfg: &DmrsConfig, alloc: &Allocation) -> Result<Vec<usize>> {
    cfg.validate()?;
    let nf = cfg.num_front_symbols;
    let d = alloc.num_symbols;
    let a = cfg.additional_positions;
    let step = d / (a + 1);
    if d < nf || (a > 0 && step < 2 * nf) {
        return Err(domain!(
            "{a} additional DMRS position(s) with {nf} front symbol(s) do not fit {d} symbols"
        ));
    }
    Ok((0..=a)
        .flat_map(|i| (0..nf).map(move |j| alloc.start_symbol + i * step + j))
        .collect())
}

pub fn dmrs_c_init(slot: usize, symbol: usize, n_id: u16) -> u32 {
    let a = (14 * slot as u64 + symbol as u64 + 1) * (2 * u64::from(n_id) + 1);
    (((a << 17) + 2 * u64::from(n_id)) % (1 << 31)) as u32
}

#[derive(Debug, Clone, PartialEq)]
pub struct DmrsMapping {
    pub alloc: Allocation,
    pub cfg: DmrsConfig,
    /// All DMRS symbols; for double-symbol DMRS pairs are consecutive.
    pub symbols: Vec<usize>,
    /// Per port: (subcarrier, symbol, value).
    pub ports: Vec<Vec<(usize, usize, Cplx)>>,
}

impl DmrsMapping {
    /// Every RE of the DMRS symbols inside the allocation; none carries data.
    pub fn occupied(&self) -> ReSet {
        self.symbols
            .iter()
            .flat_map(|&l| self.alloc.subcarriers().map(move |k| Re::new(k, l)))
            .collect()
    }

    /// Index of the DMRS symbol pair (or single symbol) containing `symbol`.
    pub fn front_index(&self, symbol: usize) -> Option<usize> {
        self.symbols
            .iter()
            .position(|&l| l == symbol)
            .map(|i| i / self.cfg.num_front_symbols)
    }

    pub fn num_occasions(&self) -> usize {
        self.symbols.len() / self.cfg.num_front_symbols
    }

    /// Base sequence value at DMRS RE (k, l) before cover codes.
    pub fn value_at(&self, port: usize, k: usize, l: usize) -> Option<Cplx> {
        self.ports
            .get(port)?
            .iter()
            .find(|&&(kk, ll, _)| kk == k && ll == l)
            .map(|&(_, _, v)| v)
    }
}

pub fn dmrs_map(cfg: &DmrsConfig, alloc: &Allocation, scrambling_id: u16, slot: usize) -> Result<DmrsMapping> {
    let symbols = dmrs_symbols(cfg, alloc)?;
    let nf = cfg.num_front_symbols;
    let ports = match cfg.sequence_mode {
        DmrsSequenceMode::ZcLowPapr => {
            let m = alloc.num_rb * SUBCARRIERS_PER_RB;
            let r = low_papr_sequence(scrambling_id as usize % NUM_LOW_PAPR_GROUPS, m)?;
            let res = symbols
                .iter()
                .flat_map(|&l| alloc.subcarriers().zip(&r).map(move |(k, &v)| (k, l, v)))
                .collect();
            vec![res]
        }
        DmrsSequenceMode::GoldQpsk => (0..cfg.num_ports)
            .map(|p| {
                let pp = dmrs_port_params(p);
                let mut res = Vec::new();
                for (si, &l) in symbols.iter().enumerate() {
                    let wt = if si % nf == 1 { f64::from(pp.td_occ) } else { 1.0 };
                    let ks = cdm_group_subcarriers(alloc, pp.cdm_group);
                    let (first, last) = (ks[0], ks[ks.len() - 1]);
                    // sequence index 2n + k' with n = k / 6, referenced to subcarrier 0
                    let m0 = 2 * (first / 6);
                    let m1 = 2 * (last / 6) + 1;
                    let r = gold_qpsk(dmrs_c_init(slot, l, scrambling_id), m0, m1 - m0 + 1);
                    for k in ks {
                        let kp = k % 2;
                        let wf = if kp == 1 { f64::from(pp.fd_occ) } else { 1.0 };
                        let m = 2 * (k / 6) + kp;
                        res.push((k, l, r[m - m0] * (wf * wt)));
                    }
                }
                res
            })
            .collect(),
    };
    Ok(DmrsMapping {
        alloc: *alloc,
        cfg: *cfg,
        symbols,
        ports,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn front_loaded_single_position() {
        let alloc = Allocation::new(0, 4, 0, 14);
        let m = dmrs_map(&DmrsConfig::default(), &alloc, 1, 0).unwrap();
        assert_eq!(m.symbols, vec![0]);
        assert_eq!(m.ports[0].len(), 4 * 4);
    }

    #[test]
    fn additional_positions_spread_evenly() {
        let alloc = Allocation::new(0, 1, 2, 12);
        let cfg = DmrsConfig {
            additional_positions: 2,
            ..DmrsConfig::default()
        };
        assert_eq!(dmrs_symbols(&cfg, &alloc).unwrap(), vec![2, 6, 10]);
        let cfg = DmrsConfig {
            num_front_symbols: 2,
            additional_positions: 3,
            ..DmrsConfig::default()
        };
        assert!(dmrs_symbols(&cfg, &alloc).is_err());
    }

    #[test]
    fn port_limits() {
        let bad = DmrsConfig {
            num_ports: 8,
            ..DmrsConfig::default()
        };
        assert!(bad.validate().is_err());
        let zc = DmrsConfig {
            num_ports: 2,
            sequence_mode: DmrsSequenceMode::ZcLowPapr,
            ..DmrsConfig::default()
        };
        assert!(zc.validate().is_err());
    }
}
