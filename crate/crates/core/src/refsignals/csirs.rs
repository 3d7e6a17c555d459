//! CSI reference signals: port patterns from a small table, zero-power
//! masking and tracking bursts.

use std::sync::OnceLock;

use crate::error::{domain, Result};
use crate::numerology::{Re, ReSet, ReservedPattern, SUBCARRIERS_PER_RB, SYMBOLS_PER_SLOT};
use crate::sequences::gold_qpsk;
use crate::Cplx;

pub const MAX_CSIRS_PORTS: usize = 32;

/// One row of the port pattern table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CsirsPattern {
    pub ports: usize,
    pub symbols: usize,
    pub res_per_symbol: usize,
    pub cdm_freq: usize,
    pub cdm_time: usize,
}

pub fn parse_csirs_patterns(text: &str) -> Result<Vec<CsirsPattern>> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            let v: Vec<usize> = l
                .split_whitespace()
                .map(|t| t.parse().map_err(|e| domain!("bad CSI-RS pattern token `{t}`: {e}")))
                .collect::<Result<_>>()?;
            let [ports, symbols, res_per_symbol, cdm_freq, cdm_time] = v[..] else {
                return Err(domain!("CSI-RS pattern line needs 5 columns: `{l}`"));
            };
            let p = CsirsPattern {
                ports,
                symbols,
                res_per_symbol,
                cdm_freq,
                cdm_time,
            };
            let groups = (res_per_symbol * symbols) / (cdm_freq * cdm_time);
            if groups * cdm_freq * cdm_time != ports || res_per_symbol % cdm_freq != 0 || symbols % cdm_time != 0 {
                return Err(domain!("inconsistent CSI-RS pattern {p:?}"));
            }
            Ok(p)
        })
        .collect()
}

pub fn csirs_patterns() -> &'static [CsirsPattern] {
    static TABLE: OnceLock<Vec<CsirsPattern>> = OnceLock::new();
    TABLE.get_or_init(|| {
        parse_csirs_patterns(include_str!("../../data/csirs_patterns.txt")).expect("bundled CSI-RS table")
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsirsPeriodicity {
    Periodic {
        period_slots: usize,
        offset: usize,
    },
    SemiPersistent {
        period_slots: usize,
        offset: usize,
        active: bool,
    },
    Aperiodic {
        trigger_slot: usize,
    },
}

impl CsirsPeriodicity {
    /// Whether slot `slot` is `k` slots after an occasion start.
    fn hits(&self, slot: usize, k: usize) -> bool {
        if slot < k {
            return false;
        }
        let s = slot - k;
        match *self {
            CsirsPeriodicity::Periodic { period_slots, offset }
            | CsirsPeriodicity::SemiPersistent {
                period_slots,
                offset,
                active: true,
            } => period_slots > 0 && s >= offset && (s - offset).is_multiple_of(period_slots),
            CsirsPeriodicity::SemiPersistent { active: false, .. } => false,
            CsirsPeriodicity::Aperiodic { trigger_slot } => s == trigger_slot,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CsirsConfig {
    pub num_ports: usize,
    pub num_symbols: usize,
    pub start_symbol: usize,
    /// First subcarrier of the pattern inside each RB.
    pub freq_offset: usize,
    pub start_rb: usize,
    pub num_rb: usize,
    pub periodicity: CsirsPeriodicity,
    pub zero_power: bool,
    /// Tracking burst length in symbols (2 or 4), single port, 3 REs per RB.
    pub tracking_burst: Option<usize>,
    pub scrambling_id: u16,
}

impl CsirsConfig {
    pub fn pattern(&self) -> Result<CsirsPattern> {
        if self.tracking_burst.is_some() {
            return Ok(CsirsPattern {
                ports: 1,
                symbols: 1,
                res_per_symbol: 3,
                cdm_freq: 1,
                cdm_time: 1,
            });
        }
        csirs_patterns()
            .iter()
            .find(|p| p.ports == self.num_ports && p.symbols == self.num_symbols)
            .copied()
            .ok_or_else(|| {
                domain!(
                    "no CSI-RS pattern for {} ports over {} symbols",
                    self.num_ports,
                    self.num_symbols
                )
            })
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_ports == 0 || self.num_ports > MAX_CSIRS_PORTS || ![1, 2, 4].contains(&self.num_symbols) {
            return Err(domain!(
                "unsupported CSI-RS size {} ports x {} symbols",
                self.num_ports,
                self.num_symbols
            ));
        }
        if self.num_rb == 0 {
            return Err(domain!("CSI-RS needs at least one RB"));
        }
        if let Some(b) = self.tracking_burst {
            if self.num_ports != 1 || ![2, 4].contains(&b) {
                return Err(domain!("tracking CSI-RS is single port with a 2 or 4 symbol burst"));
            }
            if self.freq_offset >= 4 || self.start_symbol + TRS_SPACING >= SYMBOLS_PER_SLOT {
                return Err(domain!("tracking CSI-RS does not fit the slot"));
            }
            return Ok(());
        }
        let p = self.pattern()?;
        if self.freq_offset + p.res_per_symbol > SUBCARRIERS_PER_RB || self.start_symbol + p.symbols > SYMBOLS_PER_SLOT
        {
            return Err(domain!("CSI-RS pattern does not fit inside an RB and slot"));
        }
        Ok(())
    }
}

/// Symbol spacing of the two tracking symbols within one slot.
pub const TRS_SPACING: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct CsirsMapping {
    /// Per port: (subcarrier, symbol, value); values are zero for zero-power.
    pub ports: Vec<Vec<(usize, usize, Cplx)>>,
}

impl CsirsMapping {
    pub fn positions(&self) -> ReSet {
        self.ports.iter().flatten().map(|&(k, l, _)| Re::new(k, l)).collect()
    }

    /// REs to exclude from shared-channel mapping.
    pub fn as_reserved(&self) -> ReservedPattern {
        ReservedPattern::re_level(self.positions())
    }

    pub fn is_empty(&self) -> bool {
        self.ports.iter().all(Vec::is_empty)
    }
}

fn walsh(len: usize, idx: usize, pos: usize) -> f64 {
    if (idx & pos).count_ones().is_multiple_of(2) || len == 1 {
        1.0
    } else {
        -1.0
    }
}

pub fn csirs_c_init(slot: usize, symbol: usize, n_id: u16) -> u32 {
    let a = (14 * slot as u64 + symbol as u64 + 1) * (2 * u64::from(n_id) + 1);
    (((a << 10) + u64::from(n_id)) % (1 << 31)) as u32
}

/// Resource elements (and values) of `cfg` in absolute slot `slot`; empty when
/// the resource is not scheduled there.
pub fn csirs_map(cfg: &CsirsConfig, slot: usize) -> Result<CsirsMapping> {
    cfg.validate()?;
    let p = cfg.pattern()?;
    let rb_range = cfg.start_rb..cfg.start_rb + cfg.num_rb;
    if let Some(burst) = cfg.tracking_burst {
        let slots_in_burst = burst / 2;
        let Some(_) = (0..slots_in_burst).find(|&k| cfg.periodicity.hits(slot, k)) else {
            return Ok(CsirsMapping {
                ports: vec![Vec::new()],
            });
        };
        let mut res = Vec::new();
        for l in [cfg.start_symbol, cfg.start_symbol + TRS_SPACING] {
            let r = gold_qpsk(csirs_c_init(slot, l, cfg.scrambling_id), 0, rb_range.end);
            for rb in rb_range.clone() {
                for j in 0..3 {
                    let k = rb * SUBCARRIERS_PER_RB + cfg.freq_offset + 4 * j;
                    let v = if cfg.zero_power { Cplx::new(0.0, 0.0) } else { r[rb] };
                    res.push((k, l, v));
                }
            }
        }
        return Ok(CsirsMapping { ports: vec![res] });
    }
    if !cfg.periodicity.hits(slot, 0) {
        return Ok(CsirsMapping {
            ports: vec![Vec::new(); cfg.num_ports],
        });
    }
    let group_size = p.cdm_freq * p.cdm_time;
    let groups_per_symbol_block = p.res_per_symbol / p.cdm_freq;
    let seqs: Vec<Vec<Cplx>> = (0..p.symbols)
        .map(|i| {
            let l = cfg.start_symbol + i;
            gold_qpsk(csirs_c_init(slot, l, cfg.scrambling_id), 0, rb_range.end)
        })
        .collect();
    let ports = (0..cfg.num_ports)
        .map(|port| {
            let group = port / group_size;
            let code = port % group_size;
            let (wf_idx, wt_idx) = (code % p.cdm_freq, code / p.cdm_freq);
            let g_freq = group % groups_per_symbol_block;
            let g_time = group / groups_per_symbol_block;
            let mut res = Vec::new();
            for rb in rb_range.clone() {
                for ti in 0..p.cdm_time {
                    let sym_idx = g_time * p.cdm_time + ti;
                    let l = cfg.start_symbol + sym_idx;
                    for fi in 0..p.cdm_freq {
                        let k = rb * SUBCARRIERS_PER_RB + cfg.freq_offset + g_freq * p.cdm_freq + fi;
                        let w = walsh(p.cdm_freq, wf_idx, fi) * walsh(p.cdm_time, wt_idx, ti);
                        let v = if cfg.zero_power {
                            Cplx::new(0.0, 0.0)
                        } else {
                            seqs[sym_idx][rb] * w
                        };
                        res.push((k, l, v));
                    }
                }
            }
            res
        })
        .collect();
    Ok(CsirsMapping { ports })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(ports: usize, symbols: usize) -> CsirsConfig {
        CsirsConfig {
            num_ports: ports,
            num_symbols: symbols,
            start_symbol: 5,
            freq_offset: 0,
            start_rb: 0,
            num_rb: 4,
            periodicity: CsirsPeriodicity::Periodic {
                period_slots: 10,
                offset: 0,
            },
            zero_power: false,
            tracking_burst: None,
            scrambling_id: 7,
        }
    }

    #[test]
    fn table_is_consistent() {
        assert_eq!(csirs_patterns().len(), 5);
        assert_eq!(csirs_patterns().iter().map(|p| p.ports).max(), Some(32));
    }

    #[test]
    fn thirty_two_ports_span_four_symbols() {
        let m = csirs_map(&cfg(32, 4), 0).unwrap();
        let symbols: std::collections::BTreeSet<usize> = m.positions().iter().map(|re| re.symbol).collect();
        assert_eq!(symbols.into_iter().collect::<Vec<_>>(), vec![5, 6, 7, 8]);
        assert_eq!(m.positions().len(), 32 * 4);
        assert!(csirs_map(&cfg(32, 2), 0).is_err());
    }

    #[test]
    fn ports_sharing_res_are_orthogonal() {
        let m = csirs_map(&cfg(8, 2), 0).unwrap();
        for a in 0..8 {
            for b in 0..8 {
                let ip: Cplx = m.ports[a]
                    .iter()
                    .filter_map(|&(k, l, va)| {
                        m.ports[b]
                            .iter()
                            .find(|&&(kb, lb, _)| kb == k && lb == l)
                            .map(|&(_, _, vb)| va * vb.conj())
                    })
                    .sum();
                let expect = if a == b { m.ports[a].len() as f64 } else { 0.0 };
                assert!((ip.norm() - expect).abs() < 1e-9, "{a} {b} {ip}");
            }
        }
    }

    #[test]
    fn periodicity_and_tracking() {
        assert!(csirs_map(&cfg(1, 1), 3).unwrap().is_empty());
        assert!(!csirs_map(&cfg(1, 1), 10).unwrap().is_empty());
        let trs = CsirsConfig {
            tracking_burst: Some(4),
            ..cfg(1, 1)
        };
        for slot in [10, 11] {
            let m = csirs_map(&trs, slot).unwrap();
            let symbols: std::collections::BTreeSet<usize> = m.positions().iter().map(|re| re.symbol).collect();
            assert_eq!(symbols.len(), 2);
        }
        assert!(csirs_map(&trs, 12).unwrap().is_empty());
        let ap = CsirsConfig {
            periodicity: CsirsPeriodicity::Aperiodic { trigger_slot: 4 },
            ..cfg(2, 1)
        };
        assert!(!csirs_map(&ap, 4).unwrap().is_empty());
        assert!(csirs_map(&ap, 14).unwrap().is_empty());
    }
}
