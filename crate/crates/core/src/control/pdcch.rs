//! PDCCH: DCI coding, candidate placement inside a CORESET and blind search.
//!
//! Each REG carries DMRS on its subcarriers 1, 5 and 9 and QPSK data on the
//! other 9, so one CCE holds 108 coded bits.

use std::collections::{BTreeMap, BTreeSet};

use super::coreset::{cce_to_regs, Coreset, Reg};
use crate::coding::chain::{descramble_llr, scramble};
use crate::coding::crc::{crc_bits, crc_compute, CrcPoly};
use crate::coding::polar::{PolarCode, PolarSpec};
use crate::error::{domain, Result};
use crate::modulation::{modulate, soft_demod, ModOrder};
use crate::par::map_range;
use crate::sequences::gold_qpsk;
use crate::Cplx;

pub const AGGREGATION_LEVELS: [usize; 5] = [1, 2, 4, 8, 16];
pub const DMRS_PER_REG: usize = 3;
pub const DATA_PER_REG: usize = 9;
pub const BITS_PER_CCE: usize = 2 * DATA_PER_REG * 6;
const DCI_CRC: CrcPoly = CrcPoly::Crc24C;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct PdcchCandidate {
    pub aggregation_level: usize,
    pub candidate_index: usize,
    pub rnti: u16,
}

/// Candidates monitored per aggregation level and the DCI sizes tried.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchSpace {
    pub candidates: Vec<(usize, usize)>,
    pub dci_sizes: Vec<usize>,
}

impl SearchSpace {
    pub fn num_candidates(&self, level: usize) -> usize {
        self.candidates
            .iter()
            .find(|&&(l, _)| l == level)
            .map_or(0, |&(_, n)| n)
    }
}

/// Scrambling and DMRS identity of the PDCCH.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PdcchConfig {
    pub scrambling_id: u16,
    pub slot: usize,
}

fn check_level(level: usize) -> Result<()> {
    if AGGREGATION_LEVELS.contains(&level) {
        Ok(())
    } else {
        Err(domain!("aggregation level {level} not in {AGGREGATION_LEVELS:?}"))
    }
}

/// Search-space offset: `Y = rnti * 39827 mod 65537`.
pub fn hash_offset(rnti: u16) -> usize {
    (u64::from(rnti) * 39827 % 65537) as usize
}

/// CCEs of a candidate: `L * ((Y + floor(m * N / (L * M))) mod floor(N / L)) + i`.
pub fn candidate_cces(coreset: &Coreset, ss: &SearchSpace, cand: &PdcchCandidate) -> Result<Vec<usize>> {
    let l = cand.aggregation_level;
    check_level(l)?;
    let m_total = ss.num_candidates(l);
    if cand.candidate_index >= m_total {
        return Err(domain!(
            "candidate {} outside the {m_total} monitored at level {l}",
            cand.candidate_index
        ));
    }
    let n = coreset.num_cces();
    let slots = n / l;
    if slots == 0 {
        return Err(domain!("level {l} does not fit {n} CCEs"));
    }
    let start = l * ((hash_offset(cand.rnti) + cand.candidate_index * n / (l * m_total)) % slots);
    Ok((start..start + l).collect())
}

fn dci_info(payload: &[u8], rnti: u16) -> Vec<u8> {
    // the CRC is computed as if 24 ones preceded the payload
    let reg = crc_compute(&[1u8; 24], DCI_CRC);
    let reg = crate::coding::crc::crc_compute_from(reg, payload, DCI_CRC);
    let mut info = payload.to_vec();
    info.extend(crc_bits(reg ^ u32::from(rnti), DCI_CRC.len()));
    info
}

fn dci_polar(payload_len: usize, level: usize) -> Result<PolarCode> {
    PolarCode::new(PolarSpec::new(payload_len, level * BITS_PER_CCE, DCI_CRC))
}

pub fn dci_encode(payload: &[u8], rnti: u16, level: usize) -> Result<Vec<u8>> {
    check_level(level)?;
    dci_polar(payload.len(), level)?.encode_info(&dci_info(payload, rnti))
}

/// Returns the payload whose RNTI-masked CRC checks, if any list path does.
pub fn dci_decode(llr: &[f64], payload_len: usize, rnti: u16, level: usize) -> Result<Option<Vec<u8>>> {
    let code = dci_polar(payload_len, level)?;
    Ok(code
        .decode_with(llr, |info| dci_info(&info[..payload_len], rnti) == info)?
        .map(|mut info| {
            info.truncate(payload_len);
            info
        }))
}

pub fn pdcch_dmrs_c_init(slot: usize, symbol: usize, n_id: u16) -> u32 {
    let a = (14 * slot as u64 + symbol as u64 + 1) * (2 * u64::from(n_id) + 1);
    (((a << 17) + 2 * u64::from(n_id)) % (1 << 31)) as u32
}

fn is_dmrs(k_in_reg: usize) -> bool {
    k_in_reg % 4 == 1
}

/// REGs of the candidate sorted frequency first within each symbol.
fn ordered_regs(coreset: &Coreset, cces: &[usize]) -> Result<Vec<Reg>> {
    let mut regs = Vec::with_capacity(cces.len() * 6);
    for &c in cces {
        regs.extend(cce_to_regs(coreset, c)?);
    }
    regs.sort_by_key(|r| (r.symbol, r.rb));
    Ok(regs)
}

/// DMRS sequences of every symbol touched by `regs`, indexed `3 * rb + j`.
fn dmrs_rows(cfg: &PdcchConfig, regs: &[Reg]) -> BTreeMap<usize, Vec<Cplx>> {
    let max_rb = regs.iter().map(|r| r.rb).max().unwrap_or(0);
    regs.iter()
        .map(|r| r.symbol)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .map(|l| {
            (
                l,
                gold_qpsk(pdcch_dmrs_c_init(cfg.slot, l, cfg.scrambling_id), 0, 3 * (max_rb + 1)),
            )
        })
        .collect()
}

/// Data and DMRS REs of one PDCCH as `(subcarrier, symbol, value)`.
pub fn assemble_pdcch(
    dci: &[u8],
    cand: &PdcchCandidate,
    coreset: &Coreset,
    ss: &SearchSpace,
    cfg: &PdcchConfig,
) -> Result<Vec<(usize, usize, Cplx)>> {
    let cces = candidate_cces(coreset, ss, cand)?;
    let coded = dci_encode(dci, cand.rnti, cand.aggregation_level)?;
    let symbols = modulate(&scramble(&coded, u32::from(cfg.scrambling_id)), ModOrder::Qpsk)?;
    let mut data = symbols.into_iter();
    let mut out = Vec::with_capacity(cces.len() * 72);
    let regs = ordered_regs(coreset, &cces)?;
    let dmrs = dmrs_rows(cfg, &regs);
    for reg in regs {
        let mut j = 0;
        for (i, k) in reg.subcarriers().enumerate() {
            let v = if is_dmrs(i) {
                j += 1;
                dmrs[&reg.symbol][3 * reg.rb + j - 1]
            } else {
                data.next().expect("coded length matches REG capacity")
            };
            out.push((k, reg.symbol, v));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodedDci {
    pub candidate: PdcchCandidate,
    pub cces: Vec<usize>,
    pub payload: Vec<u8>,
}

/// Equalized data symbols of a candidate, using one LS estimate per REG.
fn equalize(rx: &[Vec<Cplx>], cfg: &PdcchConfig, regs: &[Reg]) -> Option<Vec<Cplx>> {
    let mut out = Vec::with_capacity(regs.len() * DATA_PER_REG);
    let mut pilot_energy = 0.0;
    let dmrs = dmrs_rows(cfg, regs);
    for reg in regs {
        let row = rx.get(reg.symbol)?;
        let res: Vec<Cplx> = reg.subcarriers().map(|k| row.get(k).copied()).collect::<Option<_>>()?;
        let mut h = Cplx::new(0.0, 0.0);
        for (j, i) in (0..12).filter(|&i| is_dmrs(i)).enumerate() {
            h += res[i] * dmrs[&reg.symbol][3 * reg.rb + j].conj();
        }
        h /= DMRS_PER_REG as f64;
        pilot_energy += h.norm_sqr();
        out.extend((0..12).filter(|&i| !is_dmrs(i)).map(|i| res[i] * h.conj()));
    }
    (pilot_energy > 0.0).then_some(out)
}

/// Tries every candidate of `ss` and DCI size for `rnti`. Results are sorted by
/// aggregation level, then candidate index.
pub fn blind_search(
    rx: &[Vec<Cplx>],
    coreset: &Coreset,
    ss: &SearchSpace,
    rnti: u16,
    cfg: &PdcchConfig,
) -> Result<Vec<DecodedDci>> {
    let jobs: Vec<(PdcchCandidate, usize)> = ss
        .candidates
        .iter()
        .flat_map(|&(level, count)| {
            (0..count).flat_map(move |m| {
                ss.dci_sizes.iter().map(move |&size| {
                    (
                        PdcchCandidate {
                            aggregation_level: level,
                            candidate_index: m,
                            rnti,
                        },
                        size,
                    )
                })
            })
        })
        .collect();
    let results = map_range(jobs.len(), |i| -> Result<Option<DecodedDci>> {
        let (cand, size) = jobs[i];
        let cces = candidate_cces(coreset, ss, &cand)?;
        let regs = ordered_regs(coreset, &cces)?;
        let Some(eq) = equalize(rx, cfg, &regs) else {
            return Ok(None);
        };
        let llr = descramble_llr(&soft_demod(&eq, ModOrder::Qpsk, 1.0), u32::from(cfg.scrambling_id));
        if size + DCI_CRC.len() > llr.len() {
            return Ok(None);
        }
        Ok(
            dci_decode(&llr, size, rnti, cand.aggregation_level)?.map(|payload| DecodedDci {
                candidate: cand,
                cces,
                payload,
            }),
        )
    });
    let mut found: Vec<DecodedDci> = results
        .into_iter()
        .filter_map(Result::transpose)
        .collect::<Result<_>>()?;
    found.sort_by_key(|d| (d.candidate.aggregation_level, d.candidate.candidate_index));
    found.dedup_by(|a, b| a.candidate == b.candidate);
    Ok(found)
}

#[cfg(test)]
mod tests {
    use super::super::coreset::CceRegMapping;
    use super::*;
    use crate::numerology::ResourceGrid;

    fn setup() -> (Coreset, SearchSpace, PdcchConfig) {
        let cs = Coreset::contiguous(0, 96, 2, CceRegMapping::NonInterleaved).unwrap();
        let ss = SearchSpace {
            candidates: vec![(1, 4), (2, 4), (4, 2), (8, 2), (16, 1)],
            dci_sizes: vec![40],
        };
        (
            cs,
            ss,
            PdcchConfig {
                scrambling_id: 11,
                slot: 3,
            },
        )
    }

    fn payload(seed: usize) -> Vec<u8> {
        (0..40).map(|i| ((i * 31 + seed * 7) % 5 < 2) as u8).collect()
    }

    #[test]
    fn re_counts_per_level() {
        let (cs, ss, cfg) = setup();
        for (level, res) in [(1, 72), (16, 1152)] {
            let cand = PdcchCandidate {
                aggregation_level: level,
                candidate_index: 0,
                rnti: 0x4601,
            };
            assert_eq!(assemble_pdcch(&payload(0), &cand, &cs, &ss, &cfg).unwrap().len(), res);
        }
    }

    #[test]
    fn blind_search_finds_only_matching_rnti() {
        let (cs, ss, cfg) = setup();
        let cand = PdcchCandidate {
            aggregation_level: 4,
            candidate_index: 1,
            rnti: 0x1234,
        };
        let mut grid = ResourceGrid::new(1, 96, 14).unwrap();
        grid.map_res(0, &assemble_pdcch(&payload(1), &cand, &cs, &ss, &cfg).unwrap(), "pdcch")
            .unwrap();
        let rx = grid.to_rows(0);
        let found = blind_search(&rx, &cs, &ss, 0x1234, &cfg).unwrap();
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].candidate, cand);
        assert_eq!(found[0].payload, payload(1));
        assert!(blind_search(&rx, &cs, &ss, 0x1235, &cfg).unwrap().is_empty());
        let empty = ResourceGrid::new(1, 96, 14).unwrap().to_rows(0);
        assert!(blind_search(&empty, &cs, &ss, 0x1234, &cfg).unwrap().is_empty());
    }
}
