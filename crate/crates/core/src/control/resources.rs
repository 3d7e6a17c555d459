//! PUCCH resource sets and the resource indicator rule.

use super::pucch::{PucchFormat, PucchResource};
use crate::error::{domain, Result};

pub const MAX_SET0_RESOURCES: usize = 32;
pub const MAX_SET_RESOURCES: usize = 8;
pub const MAX_RESOURCE_SETS: usize = 4;
/// Values of the 3-bit resource indicator.
pub const INDICATOR_VALUES: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct PucchResourceSet {
    pub resources: Vec<PucchResource>,
    /// Largest UCI payload the set serves; set 0 always serves 2 bits.
    pub max_bits: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PucchResourceSets {
    pub sets: Vec<PucchResourceSet>,
}

impl PucchResourceSets {
    pub fn validate(&self) -> Result<()> {
        if self.sets.is_empty() || self.sets.len() > MAX_RESOURCE_SETS {
            return Err(domain!(
                "1..={MAX_RESOURCE_SETS} resource sets required, got {}",
                self.sets.len()
            ));
        }
        let mut prev_max = 0;
        for (i, set) in self.sets.iter().enumerate() {
            let (limit, short) = if i == 0 {
                (MAX_SET0_RESOURCES, true)
            } else {
                (MAX_SET_RESOURCES, false)
            };
            if set.resources.is_empty() || set.resources.len() > limit {
                return Err(domain!(
                    "resource set {i} holds {} resources, limit {limit}",
                    set.resources.len()
                ));
            }
            if i == 0 && set.max_bits != 2 {
                return Err(domain!("resource set 0 serves up to 2 bits"));
            }
            if set.max_bits <= prev_max {
                return Err(domain!("resource set {i} payload limits must increase"));
            }
            prev_max = set.max_bits;
            for r in &set.resources {
                r.validate()?;
                let small = matches!(r.format, PucchFormat::F0 | PucchFormat::F1);
                if small != short {
                    return Err(domain!("{:?} resource placed in resource set {i}", r.format));
                }
            }
        }
        Ok(())
    }

    /// Index of the set serving `uci_bits`.
    pub fn set_for(&self, uci_bits: usize) -> Result<usize> {
        if uci_bits == 0 {
            return Err(domain!("no UCI to send"));
        }
        self.sets
            .iter()
            .position(|s| uci_bits <= s.max_bits)
            .ok_or_else(|| domain!("no resource set serves {uci_bits} UCI bits"))
    }
}

/// Picks the PUCCH resource from the DCI resource indicator. Set 0 with more
/// than eight resources also uses the first CCE of the scheduling PDCCH.
pub fn select_pucch_resource(
    uci_bits: usize,
    sets: &PucchResourceSets,
    indicator: usize,
    first_cce: usize,
    num_cces: usize,
) -> Result<PucchResource> {
    sets.validate()?;
    if indicator >= INDICATOR_VALUES {
        return Err(domain!("resource indicator {indicator} outside 0..{INDICATOR_VALUES}"));
    }
    let s = sets.set_for(uci_bits)?;
    let set = &sets.sets[s];
    let r = set.resources.len();
    let index = if s == 0 && r > INDICATOR_VALUES {
        if num_cces == 0 || first_cce >= num_cces {
            return Err(domain!("first CCE {first_cce} outside a CORESET of {num_cces} CCEs"));
        }
        let small = r % INDICATOR_VALUES;
        if indicator < small {
            let group = r.div_ceil(INDICATOR_VALUES);
            indicator * group + first_cce * group / num_cces
        } else {
            let group = r / INDICATOR_VALUES;
            indicator * group + small + first_cce * group / num_cces
        }
    } else if indicator < r {
        indicator
    } else {
        return Err(domain!(
            "resource indicator {indicator} exceeds the {r} resources of set {s}"
        ));
    };
    Ok(set.resources[index])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sets(n0: usize) -> PucchResourceSets {
        let f1 = |i: usize| PucchResource {
            initial_cyclic_shift: i % 12,
            ..PucchResource::new(PucchFormat::F1, 0, 14, i / 12)
        };
        let f2 = |i: usize| PucchResource::new(PucchFormat::F2, 12, 2, 10 + i);
        PucchResourceSets {
            sets: vec![
                PucchResourceSet {
                    resources: (0..n0).map(f1).collect(),
                    max_bits: 2,
                },
                PucchResourceSet {
                    resources: (0..4).map(f2).collect(),
                    max_bits: 11,
                },
            ],
        }
    }

    #[test]
    fn payload_picks_set() {
        let s = sets(8);
        assert_eq!(select_pucch_resource(1, &s, 5, 0, 8).unwrap().format, PucchFormat::F1);
        assert_eq!(select_pucch_resource(7, &s, 3, 0, 8).unwrap().start_rb, 13);
        assert!(select_pucch_resource(7, &s, 4, 0, 8).is_err());
        assert!(select_pucch_resource(12, &s, 0, 0, 8).is_err());
    }

    #[test]
    fn large_set0_reaches_every_resource() {
        for n in [9, 16, 19, 32] {
            let s = sets(n);
            let mut seen = std::collections::BTreeSet::new();
            for ind in 0..8 {
                for cce in 0..16 {
                    let r = select_pucch_resource(2, &s, ind, cce, 16).unwrap();
                    let idx = s.sets[0].resources.iter().position(|x| *x == r).unwrap();
                    seen.insert(idx);
                }
            }
            assert_eq!(seen.len(), n, "set of {n}");
        }
    }

    #[test]
    fn rejects_misplaced_formats() {
        let mut s = sets(4);
        s.sets[1].resources[0] = PucchResource::new(PucchFormat::F0, 13, 1, 0);
        assert!(s.validate().is_err());
    }
}
