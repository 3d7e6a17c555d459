//! Phase-tracking reference signals: sparse in frequency, dense in time.

use super::dmrs::{dmrs_port_params, DmrsMapping};
use crate::error::{domain, Result};
use crate::numerology::{Allocation, SUBCARRIERS_PER_RB};
use crate::Cplx;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PtrsConfig {
    /// One PTRS subcarrier every K resource blocks (2 or 4).
    pub freq_density_krb: usize,
    /// Present every L symbols (1, 2 or 4).
    pub time_density: usize,
    pub assoc_dmrs_port: usize,
}

impl PtrsConfig {
    pub fn validate(&self) -> Result<()> {
        if ![2, 4].contains(&self.freq_density_krb) || ![1, 2, 4].contains(&self.time_density) {
            return Err(domain!("unsupported PTRS density {self:?}"));
        }
        Ok(())
    }
}

/// Density lookup by SNR and scheduled bandwidth: returns (K, L). Higher SNR
/// and wider allocations use sparser patterns.
pub fn ptrs_density_for(snr_db: f64, num_rb: usize) -> (usize, usize) {
    let k = if num_rb < 32 { 2 } else { 4 };
    let l = if snr_db < 15.0 {
        1
    } else if snr_db < 25.0 {
        2
    } else {
        4
    };
    (k, l)
}

/// Symbols (absolute) carrying PTRS: every L-th symbol counted from the most
/// recent DMRS symbol, never on DMRS symbols.
pub fn ptrs_symbols(l_step: usize, alloc: &Allocation, dmrs_symbols: &[usize]) -> Vec<usize> {
    let rel: Vec<usize> = dmrs_symbols
        .iter()
        .filter(|&&l| alloc.symbols().contains(&l))
        .map(|&l| l - alloc.start_symbol)
        .collect();
    let mut out = Vec::new();
    let mut i = 0usize;
    let mut l_ref = 0usize;
    loop {
        let cand = l_ref + i * l_step;
        if cand >= alloc.num_symbols {
            break;
        }
        let lo = if i == 0 {
            l_ref
        } else {
            (l_ref + (i - 1) * l_step + 1).max(l_ref)
        };
        if let Some(&d) = rel.iter().filter(|&&d| (lo..=cand).contains(&d)).max() {
            i = 1;
            l_ref = d;
            continue;
        }
        out.push(alloc.start_symbol + cand);
        i += 1;
    }
    out
}

/// PTRS REs with values copied from the associated DMRS port.
pub fn ptrs_map(cfg: &PtrsConfig, alloc: &Allocation, dmrs: &DmrsMapping) -> Result<Vec<(usize, usize, Cplx)>> {
    cfg.validate()?;
    if cfg.assoc_dmrs_port >= dmrs.ports.len() {
        return Err(domain!(
            "PTRS associated with missing DMRS port {}",
            cfg.assoc_dmrs_port
        ));
    }
    let group = dmrs_port_params(cfg.assoc_dmrs_port).cdm_group;
    let first_dmrs = dmrs.symbols[0];
    let symbols = ptrs_symbols(cfg.time_density, alloc, &dmrs.symbols);
    let num_ptrs_rb = alloc.num_rb.div_ceil(cfg.freq_density_krb);
    let mut out = Vec::with_capacity(num_ptrs_rb * symbols.len());
    for l in symbols {
        for i in 0..num_ptrs_rb {
            let rb = alloc.start_rb + i * cfg.freq_density_krb;
            let k = rb * SUBCARRIERS_PER_RB + 2 * group;
            let v = dmrs
                .value_at(cfg.assoc_dmrs_port, k, first_dmrs)
                .unwrap_or(Cplx::new(1.0, 0.0));
            out.push((k, l, v));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::super::dmrs::{dmrs_map, DmrsConfig};
    use super::*;

    #[test]
    fn counts_follow_density() {
        let alloc = Allocation::new(0, 8, 0, 14);
        let dmrs = dmrs_map(&DmrsConfig::default(), &alloc, 0, 0).unwrap();
        let cfg = PtrsConfig {
            freq_density_krb: 2,
            time_density: 1,
            assoc_dmrs_port: 0,
        };
        assert_eq!(ptrs_map(&cfg, &alloc, &dmrs).unwrap().len(), 4 * 13);
        let sparse = PtrsConfig { time_density: 4, ..cfg };
        assert_eq!(ptrs_symbols(4, &alloc, &dmrs.symbols), vec![4, 8, 12]);
        assert_eq!(ptrs_map(&sparse, &alloc, &dmrs).unwrap().len(), 4 * 3);
    }

    #[test]
    fn restarts_after_additional_dmrs() {
        let alloc = Allocation::new(0, 1, 0, 14);
        assert_eq!(ptrs_symbols(2, &alloc, &[0, 7]), vec![2, 4, 6, 9, 11, 13]);
    }

    #[test]
    fn narrow_allocation_keeps_one_subcarrier() {
        let alloc = Allocation::new(3, 1, 0, 14);
        let dmrs = dmrs_map(&DmrsConfig::default(), &alloc, 0, 0).unwrap();
        let cfg = PtrsConfig {
            freq_density_krb: 4,
            time_density: 1,
            assoc_dmrs_port: 0,
        };
        let res = ptrs_map(&cfg, &alloc, &dmrs).unwrap();
        assert_eq!(res.len(), 13);
        assert!(res.iter().all(|&(k, _, _)| k == 36));
    }
}
