//! PUCCH formats 0 to 4: transmit mapping and matching receivers.

use std::f64::consts::PI;

use crate::coding::chain::{descramble_llr, scramble, uci_decode, uci_encode};
use crate::coding::smallblock::MAX_SMALL_BLOCK_BITS;
use crate::dsp::dft_unitary;
use crate::error::{domain, Result};
use crate::modulation::{modulate, soft_demod, ModOrder};
use crate::numerology::{SUBCARRIERS_PER_RB, SYMBOLS_PER_SLOT};
use crate::sequences::{gold_qpsk, gold_sequence, low_papr_sequence, NUM_LOW_PAPR_GROUPS};
use crate::Cplx;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PucchFormat {
    F0,
    F1,
    F2,
    F3,
    F4,
}

impl PucchFormat {
    pub const ALL: [PucchFormat; 5] = [
        PucchFormat::F0,
        PucchFormat::F1,
        PucchFormat::F2,
        PucchFormat::F3,
        PucchFormat::F4,
    ];

    pub fn is_short(self) -> bool {
        matches!(self, PucchFormat::F0 | PucchFormat::F2)
    }

    /// Allowed number of symbols.
    pub fn symbol_range(self) -> std::ops::RangeInclusive<usize> {
        if self.is_short() {
            1..=2
        } else {
            4..=14
        }
    }

    /// Allowed UCI payload sizes.
    pub fn payload_range(self) -> std::ops::RangeInclusive<usize> {
        match self {
            PucchFormat::F0 | PucchFormat::F1 => 1..=2,
            _ => 3..=usize::MAX,
        }
    }

    /// Whether several users can share the same REs.
    pub fn supports_multiplexing(self) -> bool {
        matches!(self, PucchFormat::F0 | PucchFormat::F1 | PucchFormat::F4)
    }
}

const F3_RB_SIZES: [usize; 12] = [1, 2, 3, 4, 5, 6, 8, 9, 10, 12, 15, 16];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PucchResource {
    pub format: PucchFormat,
    pub start_symbol: usize,
    pub num_symbols: usize,
    pub start_rb: usize,
    pub num_rb: usize,
    pub initial_cyclic_shift: usize,
    pub occ_index: usize,
    /// Spreading factor of format 4 (2 or 4).
    pub occ_length: usize,
    /// Capacity limit for formats 2 to 4.
    pub max_code_rate: f64,
}

impl PucchResource {
    pub fn new(format: PucchFormat, start_symbol: usize, num_symbols: usize, start_rb: usize) -> Self {
        Self {
            format,
            start_symbol,
            num_symbols,
            start_rb,
            num_rb: 1,
            initial_cyclic_shift: 0,
            occ_index: 0,
            occ_length: 2,
            max_code_rate: 0.8,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let f = self.format;
        if !f.symbol_range().contains(&self.num_symbols) {
            return Err(domain!(
                "{f:?} uses {:?} symbols, got {}",
                f.symbol_range(),
                self.num_symbols
            ));
        }
        if self.start_symbol + self.num_symbols > SYMBOLS_PER_SLOT {
            return Err(domain!(
                "PUCCH symbols {}+{} exceed the slot",
                self.start_symbol,
                self.num_symbols
            ));
        }
        let rb_ok = match f {
            PucchFormat::F0 | PucchFormat::F1 | PucchFormat::F4 => self.num_rb == 1,
            PucchFormat::F2 => (1..=16).contains(&self.num_rb),
            PucchFormat::F3 => F3_RB_SIZES.contains(&self.num_rb),
        };
        if !rb_ok {
            return Err(domain!("{f:?} cannot span {} RBs", self.num_rb));
        }
        if self.initial_cyclic_shift >= 12 {
            return Err(domain!(
                "initial cyclic shift {} outside 0..12",
                self.initial_cyclic_shift
            ));
        }
        match f {
            PucchFormat::F1 if self.occ_index >= self.num_symbols / 2 => Err(domain!(
                "OCC index {} outside 0..{}",
                self.occ_index,
                self.num_symbols / 2
            )),
            PucchFormat::F4 if ![2, 4].contains(&self.occ_length) || self.occ_index >= self.occ_length => Err(domain!(
                "format 4 OCC {} of length {} is invalid",
                self.occ_index,
                self.occ_length
            )),
            _ => Ok(()),
        }
    }

    pub fn symbols(&self) -> std::ops::Range<usize> {
        self.start_symbol..self.start_symbol + self.num_symbols
    }

    /// Symbols (absolute) carrying DMRS for formats 1, 3 and 4.
    pub fn dmrs_symbols(&self) -> Vec<usize> {
        let rel: Vec<usize> = match self.format {
            PucchFormat::F1 => (0..self.num_symbols).step_by(2).collect(),
            PucchFormat::F3 | PucchFormat::F4 => long_dmrs_positions(self.num_symbols).to_vec(),
            _ => Vec::new(),
        };
        rel.into_iter().map(|l| self.start_symbol + l).collect()
    }

    pub fn data_symbols(&self) -> Vec<usize> {
        let dmrs = self.dmrs_symbols();
        self.symbols().filter(|l| !dmrs.contains(l)).collect()
    }

    /// Coded UCI bits the resource carries (formats 2 to 4).
    pub fn coded_bits(&self) -> usize {
        let n_data = self.data_symbols().len();
        match self.format {
            PucchFormat::F0 | PucchFormat::F1 => 0,
            PucchFormat::F2 => 16 * self.num_rb * self.num_symbols,
            PucchFormat::F3 => 2 * SUBCARRIERS_PER_RB * self.num_rb * n_data,
            PucchFormat::F4 => 2 * SUBCARRIERS_PER_RB / self.occ_length * n_data,
        }
    }

    /// Largest UCI payload within the code rate limit.
    pub fn max_payload(&self) -> usize {
        match self.format {
            PucchFormat::F0 | PucchFormat::F1 => 2,
            _ => {
                let limit = (self.max_code_rate * self.coded_bits() as f64).floor() as usize;
                (3..=limit).rev().find(|&k| k + uci_crc_len(k) <= limit).unwrap_or(0)
            }
        }
    }

    pub fn check_payload(&self, bits: usize) -> Result<()> {
        self.validate()?;
        if !self.format.payload_range().contains(&bits) {
            return Err(domain!("{:?} cannot carry {bits} UCI bits", self.format));
        }
        if !matches!(self.format, PucchFormat::F0 | PucchFormat::F1) && bits > self.max_payload() {
            return Err(domain!(
                "{bits} UCI bits exceed the {} bit capacity of this {:?} resource",
                self.max_payload(),
                self.format
            ));
        }
        Ok(())
    }
}

fn uci_crc_len(k: usize) -> usize {
    if k <= MAX_SMALL_BLOCK_BITS {
        0
    } else if k < 20 {
        6
    } else {
        11
    }
}

/// DMRS symbol offsets of formats 3 and 4 without hopping or additional DMRS.
pub fn long_dmrs_positions(num_symbols: usize) -> &'static [usize] {
    match num_symbols {
        4 => &[1],
        5 => &[0, 3],
        6 | 7 => &[1, 4],
        8 => &[1, 5],
        9 => &[1, 6],
        10 | 11 => &[2, 7],
        12 => &[2, 8],
        13 => &[2, 9],
        _ => &[3, 10],
    }
}

/// Cell- and UE-specific parameters shared by all formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PucchContext {
    pub n_id: u16,
    pub rnti: u16,
    pub slot: usize,
}

impl PucchContext {
    fn group(&self) -> usize {
        self.n_id as usize % NUM_LOW_PAPR_GROUPS
    }

    /// Cell-specific cyclic shift hopping term of absolute symbol `l`.
    fn n_cs(&self, l: usize) -> usize {
        let start = 8 * SYMBOLS_PER_SLOT * self.slot + 8 * l;
        let c = gold_sequence(u32::from(self.n_id), start + 8);
        (0..8).map(|m| usize::from(c[start + m]) << m).sum()
    }

    fn alpha(&self, m0: usize, m_cs: usize, l: usize) -> f64 {
        2.0 * PI * ((m0 + m_cs + self.n_cs(l)) % 12) as f64 / 12.0
    }

    fn scrambling_init(&self) -> u32 {
        (u32::from(self.rnti) << 15) + u32::from(self.n_id)
    }

    fn dmrs_init(&self, l: usize) -> u32 {
        let a = (14 * self.slot as u64 + l as u64 + 1) * (2 * u64::from(self.n_id) + 1);
        (((a << 17) + 2 * u64::from(self.n_id)) % (1 << 31)) as u32
    }
}

fn shifted_base(ctx: &PucchContext, len: usize, alpha: f64) -> Result<Vec<Cplx>> {
    let r = low_papr_sequence(ctx.group(), len)?;
    Ok(r.iter()
        .enumerate()
        .map(|(n, &v)| v * Cplx::from_polar(1.0, alpha * n as f64))
        .collect())
}

/// Format 0 cyclic shift offset for the UCI value.
pub fn f0_m_cs(bits: &[u8]) -> usize {
    match bits {
        [0] => 0,
        [_] => 6,
        [0, 0] => 0,
        [0, 1] => 3,
        [1, 1] => 6,
        _ => 9,
    }
}

fn occ_dft(len: usize, i: usize, m: usize) -> Cplx {
    Cplx::from_polar(1.0, 2.0 * PI * (i * m % len) as f64 / len as f64)
}

/// Format 4 pre-DFT cover of subcarrier `k`.
pub fn f4_occ(sf: usize, n: usize, k: usize) -> Cplx {
    let block = k / (SUBCARRIERS_PER_RB / sf);
    let one = Cplx::new(1.0, 0.0);
    let j = Cplx::new(0.0, 1.0);
    match (sf, n) {
        (2, 1) if block == 1 => -one,
        (4, 1) => [one, -j, -one, j][block],
        (4, 2) => [one, -one, one, -one][block],
        (4, 3) => [one, j, -one, -j][block],
        _ => one,
    }
}

/// Format 4 DMRS cyclic shift per OCC index.
pub fn f4_m0(sf: usize, n: usize) -> usize {
    if sf == 2 {
        [0, 6][n]
    } else {
        [0, 6, 3, 9][n]
    }
}

fn rb_subcarriers(res: &PucchResource) -> std::ops::Range<usize> {
    res.start_rb * SUBCARRIERS_PER_RB..(res.start_rb + res.num_rb) * SUBCARRIERS_PER_RB
}

/// REs of one PUCCH as `(subcarrier, symbol, value)`.
pub fn build_pucch(res: &PucchResource, uci: &[u8], ctx: &PucchContext) -> Result<Vec<(usize, usize, Cplx)>> {
    res.check_payload(uci.len())?;
    let ks = rb_subcarriers(res);
    let m0 = res.initial_cyclic_shift;
    let mut out = Vec::new();
    match res.format {
        PucchFormat::F0 => {
            let m_cs = f0_m_cs(uci);
            for l in res.symbols() {
                let seq = shifted_base(ctx, 12, ctx.alpha(m0, m_cs, l))?;
                out.extend(ks.clone().zip(seq).map(|(k, v)| (k, l, v)));
            }
        }
        PucchFormat::F1 => {
            let order = if uci.len() == 1 { ModOrder::Bpsk } else { ModOrder::Qpsk };
            let d = modulate(uci, order)?[0];
            let dmrs = res.dmrs_symbols();
            let n_dmrs = dmrs.len();
            let n_data = res.num_symbols - n_dmrs;
            let (mut i_dmrs, mut i_data) = (0, 0);
            for l in res.symbols() {
                let seq = shifted_base(ctx, 12, ctx.alpha(m0, 0, l))?;
                let w = if dmrs.contains(&l) {
                    i_dmrs += 1;
                    occ_dft(n_dmrs, res.occ_index, i_dmrs - 1)
                } else {
                    i_data += 1;
                    occ_dft(n_data, res.occ_index, i_data - 1) * d
                };
                out.extend(ks.clone().zip(seq).map(|(k, v)| (k, l, v * w)));
            }
        }
        PucchFormat::F2 => {
            let coded = uci_encode(uci, res.coded_bits())?;
            let mut data = modulate(&scramble(&coded, ctx.scrambling_init()), ModOrder::Qpsk)?.into_iter();
            for l in res.symbols() {
                let r = gold_qpsk(ctx.dmrs_init(l), 4 * res.start_rb, 4 * res.num_rb);
                let mut j = 0;
                for k in ks.clone() {
                    if k % 3 == 1 {
                        out.push((k, l, r[j]));
                        j += 1;
                    } else {
                        out.push((k, l, data.next().expect("capacity matches")));
                    }
                }
            }
        }
        PucchFormat::F3 | PucchFormat::F4 => {
            let coded = uci_encode(uci, res.coded_bits())?;
            let symbols = modulate(&scramble(&coded, ctx.scrambling_init()), ModOrder::Qpsk)?;
            let m = ks.len();
            let (per_symbol, m0_dmrs) = match res.format {
                PucchFormat::F3 => (m, 0),
                _ => (m / res.occ_length, f4_m0(res.occ_length, res.occ_index)),
            };
            let mut chunks = symbols.chunks_exact(per_symbol);
            let dmrs = res.dmrs_symbols();
            for l in res.symbols() {
                let values = if dmrs.contains(&l) {
                    shifted_base(ctx, m, ctx.alpha(m0_dmrs, 0, l))?
                } else {
                    let chunk = chunks.next().expect("capacity matches");
                    let mut y: Vec<Cplx> = if res.format == PucchFormat::F3 {
                        chunk.to_vec()
                    } else {
                        (0..m)
                            .map(|k| f4_occ(res.occ_length, res.occ_index, k) * chunk[k % per_symbol])
                            .collect()
                    };
                    dft_unitary(&mut y, false);
                    y
                };
                out.extend(ks.clone().zip(values).map(|(k, v)| (k, l, v)));
            }
        }
    }
    Ok(out)
}

fn rx_re(rx: &[Vec<Cplx>], k: usize, l: usize) -> Result<Cplx> {
    rx.get(l)
        .and_then(|row| row.get(k))
        .copied()
        .ok_or_else(|| domain!("received grid lacks RE ({k}, {l})"))
}

fn bpsk_qpsk_llr(z: Cplx, bits: usize) -> Vec<f64> {
    // the BPSK point sits on the diagonal, so both components carry the bit
    if bits == 1 {
        vec![z.re + z.im]
    } else {
        vec![z.re, z.im]
    }
}

/// Recovers `num_bits` UCI bits from a received grid `[symbol][subcarrier]`;
/// `None` when a CRC-protected payload fails its check.
pub fn decode_pucch(
    rx: &[Vec<Cplx>],
    res: &PucchResource,
    num_bits: usize,
    ctx: &PucchContext,
) -> Result<Option<Vec<u8>>> {
    res.check_payload(num_bits)?;
    let ks: Vec<usize> = rb_subcarriers(res).collect();
    let m0 = res.initial_cyclic_shift;
    match res.format {
        PucchFormat::F0 => {
            let mut best = (Vec::new(), -1.0);
            for value in 0..1u8 << num_bits {
                let bits: Vec<u8> = (0..num_bits).map(|i| (value >> (num_bits - 1 - i)) & 1).collect();
                let m_cs = f0_m_cs(&bits);
                let mut metric = 0.0;
                for l in res.symbols() {
                    let seq = shifted_base(ctx, 12, ctx.alpha(m0, m_cs, l))?;
                    let c: Cplx = ks
                        .iter()
                        .zip(&seq)
                        .map(|(&k, s)| Ok(rx_re(rx, k, l)? * s.conj()))
                        .sum::<Result<Cplx>>()?;
                    metric += c.norm_sqr();
                }
                if metric > best.1 {
                    best = (bits, metric);
                }
            }
            Ok(Some(best.0))
        }
        PucchFormat::F1 => {
            let dmrs = res.dmrs_symbols();
            let n_dmrs = dmrs.len();
            let n_data = res.num_symbols - n_dmrs;
            let (mut h, mut z) = (Cplx::new(0.0, 0.0), Cplx::new(0.0, 0.0));
            let (mut i_dmrs, mut i_data) = (0, 0);
            for l in res.symbols() {
                let seq = shifted_base(ctx, 12, ctx.alpha(m0, 0, l))?;
                let c: Cplx = ks
                    .iter()
                    .zip(&seq)
                    .map(|(&k, s)| Ok(rx_re(rx, k, l)? * s.conj()))
                    .sum::<Result<Cplx>>()?;
                if dmrs.contains(&l) {
                    h += c * occ_dft(n_dmrs, res.occ_index, i_dmrs).conj();
                    i_dmrs += 1;
                } else {
                    z += c * occ_dft(n_data, res.occ_index, i_data).conj();
                    i_data += 1;
                }
            }
            let d = z / n_data as f64 * (h / n_dmrs as f64).conj();
            Ok(Some(
                bpsk_qpsk_llr(d, num_bits).iter().map(|&v| u8::from(v < 0.0)).collect(),
            ))
        }
        PucchFormat::F2 => {
            let mut eq = Vec::new();
            for l in res.symbols() {
                let r = gold_qpsk(ctx.dmrs_init(l), 4 * res.start_rb, 4 * res.num_rb);
                let pilots: Vec<Cplx> = ks
                    .iter()
                    .filter(|&&k| k % 3 == 1)
                    .map(|&k| rx_re(rx, k, l))
                    .collect::<Result<_>>()?;
                let h: Cplx = pilots.iter().zip(&r).map(|(y, s)| y * s.conj()).sum::<Cplx>() / r.len() as f64;
                for &k in ks.iter().filter(|&&k| k % 3 != 1) {
                    eq.push(rx_re(rx, k, l)? * h.conj());
                }
            }
            let llr = descramble_llr(&soft_demod(&eq, ModOrder::Qpsk, 1.0), ctx.scrambling_init());
            uci_decode(&llr, num_bits)
        }
        PucchFormat::F3 | PucchFormat::F4 => {
            let m = ks.len();
            let (per_symbol, m0_dmrs) = match res.format {
                PucchFormat::F3 => (m, 0),
                _ => (m / res.occ_length, f4_m0(res.occ_length, res.occ_index)),
            };
            let dmrs = res.dmrs_symbols();
            let mut h = Cplx::new(0.0, 0.0);
            for &l in &dmrs {
                let seq = shifted_base(ctx, m, ctx.alpha(m0_dmrs, 0, l))?;
                for (&k, s) in ks.iter().zip(&seq) {
                    h += rx_re(rx, k, l)? * s.conj();
                }
            }
            h /= (m * dmrs.len()) as f64;
            let mut eq = Vec::new();
            for l in res.data_symbols() {
                let mut y: Vec<Cplx> = ks
                    .iter()
                    .map(|&k| Ok(rx_re(rx, k, l)? * h.conj()))
                    .collect::<Result<_>>()?;
                dft_unitary(&mut y, true);
                if res.format == PucchFormat::F3 {
                    eq.extend(y);
                } else {
                    eq.extend((0..per_symbol).map(|i| {
                        (0..res.occ_length)
                            .map(|b| {
                                let k = b * per_symbol + i;
                                y[k] * f4_occ(res.occ_length, res.occ_index, k).conj()
                            })
                            .sum::<Cplx>()
                    }));
                }
            }
            let llr = descramble_llr(&soft_demod(&eq, ModOrder::Qpsk, 1.0), ctx.scrambling_init());
            uci_decode(&llr, num_bits)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerology::ResourceGrid;

    fn ctx() -> PucchContext {
        PucchContext {
            n_id: 201,
            rnti: 0x3a1,
            slot: 4,
        }
    }

    fn bits(n: usize) -> Vec<u8> {
        (0..n).map(|i| (i * 5 % 7 < 3) as u8).collect()
    }

    fn loopback(res: &PucchResource, uci: &[u8]) -> Option<Vec<u8>> {
        let mut grid = ResourceGrid::new(1, 20, 14).unwrap();
        grid.map_res(0, &build_pucch(res, uci, &ctx()).unwrap(), "pucch")
            .unwrap();
        decode_pucch(&grid.to_rows(0), res, uci.len(), &ctx()).unwrap()
    }

    #[test]
    fn format0_shape() {
        let res = PucchResource::new(PucchFormat::F0, 13, 1, 2);
        let re = build_pucch(&res, &[1], &ctx()).unwrap();
        assert_eq!(re.len(), 12);
        assert!(re.iter().all(|&(_, _, v)| (v.norm() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn format1_alternates_dmrs_and_data() {
        let res = PucchResource::new(PucchFormat::F1, 4, 10, 0);
        assert_eq!(res.dmrs_symbols(), vec![4, 6, 8, 10, 12]);
        assert_eq!(res.data_symbols(), vec![5, 7, 9, 11, 13]);
        assert!(build_pucch(&res, &bits(3), &ctx()).is_err());
    }

    #[test]
    fn format2_pilots_share_symbols() {
        let res = PucchResource {
            num_rb: 2,
            ..PucchResource::new(PucchFormat::F2, 12, 2, 1)
        };
        let re = build_pucch(&res, &bits(9), &ctx()).unwrap();
        assert_eq!(re.len(), 48);
        assert_eq!(res.coded_bits(), 64);
    }

    #[test]
    fn every_format_round_trips() {
        let cases = [
            (PucchResource::new(PucchFormat::F0, 12, 2, 3), 2),
            (PucchResource::new(PucchFormat::F1, 0, 14, 3), 1),
            (PucchResource::new(PucchFormat::F1, 0, 7, 3), 2),
            (
                PucchResource {
                    num_rb: 4,
                    ..PucchResource::new(PucchFormat::F2, 12, 2, 3)
                },
                20,
            ),
            (
                PucchResource {
                    num_rb: 3,
                    ..PucchResource::new(PucchFormat::F3, 0, 14, 0)
                },
                3,
            ),
            (
                PucchResource {
                    num_rb: 2,
                    ..PucchResource::new(PucchFormat::F3, 0, 14, 0)
                },
                40,
            ),
            (
                PucchResource {
                    occ_length: 4,
                    occ_index: 3,
                    ..PucchResource::new(PucchFormat::F4, 2, 12, 5)
                },
                8,
            ),
        ];
        for (res, n) in cases {
            assert_eq!(loopback(&res, &bits(n)), Some(bits(n)), "{res:?}");
        }
    }

    #[test]
    fn capacity_limits() {
        let res = PucchResource::new(PucchFormat::F3, 0, 4, 0);
        assert_eq!(res.coded_bits(), 72);
        assert!(res.check_payload(res.max_payload()).is_ok());
        assert!(res.check_payload(res.max_payload() + 1).is_err());
        assert!(PucchResource::new(PucchFormat::F3, 0, 14, 0).check_payload(3).is_ok());
    }
}
