//! Control resource sets: REG numbering and CCE-to-REG mapping.
//!
//! REGs are numbered time first: REG `j` is symbol `j % num_symbols` of the
//! `j / num_symbols`-th RB of the CORESET. A CCE takes `6 / L` bundles of `L`
//! consecutive REGs.

use std::collections::BTreeSet;

use crate::error::{domain, Result};
use crate::numerology::SUBCARRIERS_PER_RB;

pub const REGS_PER_CCE: usize = 6;
pub const RES_PER_REG: usize = SUBCARRIERS_PER_RB;
pub const MAX_CORESET_SYMBOLS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Reg {
    pub rb: usize,
    pub symbol: usize,
}

impl Reg {
    pub fn subcarriers(&self) -> std::ops::Range<usize> {
        self.rb * SUBCARRIERS_PER_RB..(self.rb + 1) * SUBCARRIERS_PER_RB
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CceRegMapping {
    NonInterleaved,
    Interleaved {
        bundle_size: usize,
        rows: usize,
        shift: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coreset {
    /// Absolute RB indices, strictly increasing; gaps are allowed.
    pub rb_set: Vec<usize>,
    pub start_symbol: usize,
    pub num_symbols: usize,
    pub mapping: CceRegMapping,
}

impl Coreset {
    pub fn contiguous(start_rb: usize, num_rb: usize, num_symbols: usize, mapping: CceRegMapping) -> Result<Self> {
        let c = Self {
            rb_set: (start_rb..start_rb + num_rb).collect(),
            start_symbol: 0,
            num_symbols,
            mapping,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=MAX_CORESET_SYMBOLS).contains(&self.num_symbols) {
            return Err(domain!("CORESET spans 1..=3 symbols, got {}", self.num_symbols));
        }
        if self.rb_set.is_empty() || self.rb_set.windows(2).any(|w| w[0] >= w[1]) {
            return Err(domain!("CORESET RB set must be non-empty and strictly increasing"));
        }
        let regs = self.num_regs();
        if !regs.is_multiple_of(REGS_PER_CCE) {
            return Err(domain!("{regs} REGs do not form whole CCEs"));
        }
        if let CceRegMapping::Interleaved {
            bundle_size,
            rows,
            shift,
        } = self.mapping
        {
            if ![2, 3, 6].contains(&bundle_size) || bundle_size % self.num_symbols != 0 {
                return Err(domain!(
                    "bundle size {bundle_size} is not a multiple of {} symbols",
                    self.num_symbols
                ));
            }
            if ![2, 3, 6].contains(&rows) {
                return Err(domain!("interleaver rows must be 2, 3 or 6, got {rows}"));
            }
            let bundles = regs / bundle_size;
            if !bundles.is_multiple_of(rows) {
                return Err(domain!("{bundles} REG bundles do not fill {rows} interleaver rows"));
            }
            if shift >= bundles {
                return Err(domain!("interleaver shift {shift} outside 0..{bundles}"));
            }
        }
        Ok(())
    }

    pub fn num_regs(&self) -> usize {
        self.rb_set.len() * self.num_symbols
    }

    pub fn num_cces(&self) -> usize {
        self.num_regs() / REGS_PER_CCE
    }

    pub fn reg(&self, j: usize) -> Reg {
        Reg {
            rb: self.rb_set[j / self.num_symbols],
            symbol: self.start_symbol + j % self.num_symbols,
        }
    }

    pub fn regs(&self) -> BTreeSet<Reg> {
        (0..self.num_regs()).map(|j| self.reg(j)).collect()
    }

    fn bundle_size(&self) -> usize {
        match self.mapping {
            CceRegMapping::NonInterleaved => REGS_PER_CCE,
            CceRegMapping::Interleaved { bundle_size, .. } => bundle_size,
        }
    }

    /// Interleaver permutation of bundle indices.
    fn bundle_map(&self, x: usize) -> usize {
        match self.mapping {
            CceRegMapping::NonInterleaved => x,
            CceRegMapping::Interleaved {
                bundle_size,
                rows,
                shift,
            } => {
                let n = self.num_regs() / bundle_size;
                let cols = n / rows;
                let (c, r) = (x / rows, x % rows);
                (r * cols + c + shift) % n
            }
        }
    }
}

/// The 6 REGs of CCE `cce`, in bundle order.
pub fn cce_to_regs(coreset: &Coreset, cce: usize) -> Result<Vec<Reg>> {
    coreset.validate()?;
    if cce >= coreset.num_cces() {
        return Err(domain!("CCE {cce} outside 0..{}", coreset.num_cces()));
    }
    let l = coreset.bundle_size();
    let per_cce = REGS_PER_CCE / l;
    Ok((0..per_cce)
        .flat_map(|i| {
            let b = coreset.bundle_map(cce * per_cce + i);
            (b * l..(b + 1) * l).map(|j| coreset.reg(j))
        })
        .collect())
}
