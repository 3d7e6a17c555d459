//! Sounding reference signals: cyclically shifted low-PAPR sequences on a
//! transmission comb in the last symbols of a slot.

use std::f64::consts::PI;

use crate::error::{domain, Result};
use crate::numerology::{Re, ReSet, SUBCARRIERS_PER_RB, SYMBOLS_PER_SLOT};
use crate::sequences::{low_papr_sequence, phase_ramp, NUM_LOW_PAPR_GROUPS};
use crate::Cplx;

/// SRS symbols must lie within this many trailing symbols of the slot.
pub const SRS_TAIL_SYMBOLS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SrsConfig {
    pub num_symbols: usize,
    pub start_symbol: usize,
    pub num_ports: usize,
    /// Transmission comb (2 or 4) and the occupied comb offset.
    pub comb: usize,
    pub comb_offset: usize,
    pub cyclic_shift: usize,
    pub start_rb: usize,
    /// Sounding bandwidth of one symbol.
    pub num_rb: usize,
    /// Bandwidth swept when hopping; a multiple of `num_rb`.
    pub hopping_rb: Option<usize>,
    pub period_slots: usize,
    pub offset: usize,
    pub sequence_id: u16,
}

impl Default for SrsConfig {
    fn default() -> Self {
        Self {
            num_symbols: 1,
            start_symbol: 13,
            num_ports: 1,
            comb: 2,
            comb_offset: 0,
            cyclic_shift: 0,
            start_rb: 0,
            num_rb: 4,
            hopping_rb: None,
            period_slots: 1,
            offset: 0,
            sequence_id: 0,
        }
    }
}

impl SrsConfig {
    pub fn max_cyclic_shifts(&self) -> usize {
        if self.comb == 4 {
            12
        } else {
            8
        }
    }

    pub fn validate(&self) -> Result<()> {
        if ![1, 2, 4].contains(&self.num_symbols) {
            return Err(domain!("SRS spans 1, 2 or 4 symbols, got {}", self.num_symbols));
        }
        let first_allowed = SYMBOLS_PER_SLOT - SRS_TAIL_SYMBOLS;
        if self.start_symbol < first_allowed || self.start_symbol + self.num_symbols > SYMBOLS_PER_SLOT {
            return Err(domain!(
                "SRS symbols {}..{} leave the last {SRS_TAIL_SYMBOLS} symbols of the slot",
                self.start_symbol,
                self.start_symbol + self.num_symbols
            ));
        }
        if ![2, 4].contains(&self.comb) || self.comb_offset >= self.comb {
            return Err(domain!("invalid SRS comb {} offset {}", self.comb, self.comb_offset));
        }
        if ![1, 2, 4].contains(&self.num_ports) || self.cyclic_shift >= self.max_cyclic_shifts() {
            return Err(domain!(
                "invalid SRS ports {} / cyclic shift {}",
                self.num_ports,
                self.cyclic_shift
            ));
        }
        if self.num_rb == 0 || !self.num_rb.is_multiple_of(4) {
            return Err(domain!(
                "SRS bandwidth must be a positive multiple of 4 RBs, got {}",
                self.num_rb
            ));
        }
        if let Some(h) = self.hopping_rb {
            if h < self.num_rb || h % self.num_rb != 0 {
                return Err(domain!("hopping bandwidth {h} is not a multiple of {}", self.num_rb));
            }
        }
        if self.period_slots == 0 || self.offset >= self.period_slots {
            return Err(domain!("invalid SRS periodicity {}/{}", self.period_slots, self.offset));
        }
        Ok(())
    }

    pub fn symbols(&self) -> std::ops::Range<usize> {
        self.start_symbol..self.start_symbol + self.num_symbols
    }

    pub fn sequence_len(&self) -> usize {
        self.num_rb * SUBCARRIERS_PER_RB / self.comb
    }

    fn occasion(&self, slot: usize) -> Option<usize> {
        (slot >= self.offset && (slot - self.offset).is_multiple_of(self.period_slots))
            .then(|| (slot - self.offset) / self.period_slots)
    }

    /// First RB sounded by symbol `i` of occasion `n`.
    pub fn hop_start_rb(&self, n: usize, i: usize) -> usize {
        match self.hopping_rb {
            Some(h) => {
                let positions = h / self.num_rb;
                self.start_rb + ((n * self.num_symbols + i) % positions) * self.num_rb
            }
            None => self.start_rb,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SrsMapping {
    /// Per port: (subcarrier, symbol, value).
    pub ports: Vec<Vec<(usize, usize, Cplx)>>,
}

impl SrsMapping {
    pub fn positions(&self) -> ReSet {
        self.ports.iter().flatten().map(|&(k, l, _)| Re::new(k, l)).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.ports.iter().all(Vec::is_empty)
    }
}

pub fn srs_map(cfg: &SrsConfig, slot: usize) -> Result<SrsMapping> {
    cfg.validate()?;
    let Some(n) = cfg.occasion(slot) else {
        return Ok(SrsMapping {
            ports: vec![Vec::new(); cfg.num_ports],
        });
    };
    let base = low_papr_sequence(cfg.sequence_id as usize % NUM_LOW_PAPR_GROUPS, cfg.sequence_len())?;
    let n_cs_max = cfg.max_cyclic_shifts();
    let ports = (0..cfg.num_ports)
        .map(|p| {
            let n_cs = (cfg.cyclic_shift + n_cs_max * p / cfg.num_ports) % n_cs_max;
            let seq = phase_ramp(&base, 2.0 * PI * n_cs as f64 / n_cs_max as f64);
            let mut res = Vec::with_capacity(seq.len() * cfg.num_symbols);
            for (i, l) in cfg.symbols().enumerate() {
                let k0 = cfg.hop_start_rb(n, i) * SUBCARRIERS_PER_RB + cfg.comb_offset;
                res.extend(seq.iter().enumerate().map(|(m, &v)| (k0 + m * cfg.comb, l, v)));
            }
            res
        })
        .collect();
    Ok(SrsMapping { ports })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tail_symbol_rule() {
        let ok = SrsConfig {
            start_symbol: 10,
            num_symbols: 4,
            ..SrsConfig::default()
        };
        let m = srs_map(&ok, 0).unwrap();
        let symbols: std::collections::BTreeSet<usize> = m.positions().iter().map(|re| re.symbol).collect();
        assert_eq!(symbols.into_iter().collect::<Vec<_>>(), vec![10, 11, 12, 13]);
        let bad = SrsConfig { start_symbol: 7, ..ok };
        assert!(srs_map(&bad, 0).is_err());
    }

    #[test]
    fn cyclic_shift_ports_are_orthogonal() {
        for comb in [2, 4] {
            let cfg = SrsConfig {
                num_ports: 4,
                comb,
                num_rb: 8,
                ..SrsConfig::default()
            };
            let m = srs_map(&cfg, 0).unwrap();
            for a in 0..4 {
                for b in (a + 1)..4 {
                    let ip: Cplx = m.ports[a].iter().zip(&m.ports[b]).map(|(x, y)| x.2 * y.2.conj()).sum();
                    assert!(ip.norm() < 1e-9, "comb {comb} ports {a},{b}: {ip}");
                }
            }
        }
    }

    #[test]
    fn hopping_sweeps_the_band() {
        let cfg = SrsConfig {
            hopping_rb: Some(16),
            ..SrsConfig::default()
        };
        let starts: Vec<usize> = (0..4)
            .map(|slot| {
                let m = srs_map(&cfg, slot).unwrap();
                m.ports[0].iter().map(|&(k, _, _)| k).min().unwrap() / SUBCARRIERS_PER_RB
            })
            .collect();
        assert_eq!(starts, vec![0, 4, 8, 12]);
    }
}
