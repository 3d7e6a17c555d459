//! Base sequences: m-sequences, the NR Gold generator, Zadoff-Chu,
//! PSS/SSS and low-PAPR sequences.

use std::f64::consts::PI;

use crate::error::{domain, Result};
use crate::Cplx;

pub type BinarySeq = Vec<u8>;
pub type ComplexSeq = Vec<Cplx>;

pub const PSS_LEN: usize = 127;
pub const NUM_PCI: u16 = 1008;
pub const NUM_NID1: u16 = 336;
pub const NUM_LOW_PAPR_GROUPS: usize = 30;

/// Linear feedback shift register in recurrence form:
/// `x(n + degree) = XOR_{t in taps} x(n + t)`, with `x(0..degree) = init`.
/// Output bit `n` is `x(n)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LfsrSpec {
    pub degree: usize,
    pub taps: Vec<usize>,
    pub init: Vec<u8>,
}

pub fn m_sequence(spec: &LfsrSpec, length: usize) -> Result<BinarySeq> {
    if spec.degree < 2 {
        return Err(domain!("LFSR degree must be at least 2"));
    }
    if spec.init.len() != spec.degree {
        return Err(domain!(
            "LFSR init has {} bits, degree is {}",
            spec.init.len(),
            spec.degree
        ));
    }
    if spec.taps.iter().any(|&t| t >= spec.degree) {
        return Err(domain!("LFSR tap outside register"));
    }
    if spec.init.iter().all(|&b| b & 1 == 0) {
        return Err(domain!("all-zero LFSR state"));
    }
    let mut x: Vec<u8> = spec.init.iter().map(|b| b & 1).collect();
    x.reserve(length);
    while x.len() < length + spec.degree {
        let n = x.len() - spec.degree;
        let bit = spec.taps.iter().fold(0, |acc, &t| acc ^ x[n + t]);
        x.push(bit);
    }
    x.truncate(length);
    Ok(x)
}

/// Offset applied to both constituent sequences of the Gold generator.
pub const GOLD_NC: usize = 1600;

/// Streaming NR pseudo-random generator. Bit `i` of each 31-bit register
/// holds `x(n + i)`.
#[derive(Debug, Clone)]
pub struct GoldGenerator {
    x1: u32,
    x2: u32,
}

impl GoldGenerator {
    pub fn new(c_init: u32) -> Self {
        let mut g = Self {
            x1: 1,
            x2: c_init & 0x7fff_ffff,
        };
        for _ in 0..GOLD_NC {
            g.step();
        }
        g
    }

    #[inline]
    fn step(&mut self) -> (u8, u8) {
        let (a, b) = ((self.x1 & 1) as u8, (self.x2 & 1) as u8);
        let f1 = (self.x1 ^ (self.x1 >> 3)) & 1;
        let f2 = (self.x2 ^ (self.x2 >> 1) ^ (self.x2 >> 2) ^ (self.x2 >> 3)) & 1;
        self.x1 = (self.x1 >> 1) | (f1 << 30);
        self.x2 = (self.x2 >> 1) | (f2 << 30);
        (a, b)
    }

    /// Next bits of the two constituent sequences.
    pub fn next_pair(&mut self) -> (u8, u8) {
        self.step()
    }

    pub fn advance(&mut self, n: usize) {
        for _ in 0..n {
            self.step();
        }
    }
}

impl Iterator for GoldGenerator {
    type Item = u8;

    fn next(&mut self) -> Option<u8> {
        let (a, b) = self.step();
        Some(a ^ b)
    }
}

pub fn gold_sequence(c_init: u32, length: usize) -> BinarySeq {
    GoldGenerator::new(c_init).take(length).collect()
}

/// The two constituent sequences (after the offset) whose XOR is
/// [`gold_sequence`].
pub fn gold_constituents(c_init: u32, length: usize) -> (BinarySeq, BinarySeq) {
    let mut g = GoldGenerator::new(c_init);
    (0..length).map(|_| g.next_pair()).unzip()
}

/// QPSK symbols `((1 - 2c(2m)) + j(1 - 2c(2m+1))) / sqrt(2)` for
/// `m in start..start + count`.
pub fn gold_qpsk(c_init: u32, start: usize, count: usize) -> ComplexSeq {
    let mut g = GoldGenerator::new(c_init);
    g.advance(2 * start);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    (0..count)
        .map(|_| {
            let a = g.next().unwrap_or(0);
            let b = g.next().unwrap_or(0);
            Cplx::new(s * bpsk_value(a), s * bpsk_value(b))
        })
        .collect()
}

#[inline]
pub fn bpsk_value(bit: u8) -> f64 {
    1.0 - 2.0 * f64::from(bit & 1)
}

pub fn bpsk(bits: &[u8]) -> ComplexSeq {
    bits.iter().map(|&b| Cplx::new(bpsk_value(b), 0.0)).collect()
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

pub fn is_prime(n: usize) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d))
}

/// `exp(-j * pi * m / n)`, evaluated with `m` already reduced modulo `2n`.
#[inline]
fn unit_phase(m: u64, n: u64) -> Cplx {
    let theta = -PI * (m % (2 * n)) as f64 / n as f64;
    Cplx::new(theta.cos(), theta.sin())
}

/// Zadoff-Chu sequence `x[n] = exp(-j pi u n (n+1) / n_zc)`, read from
/// position `cyclic_shift` onwards: `y[n] = x[(n + cyclic_shift) mod n_zc]`.
pub fn zadoff_chu(u: u64, n_zc: usize, cyclic_shift: usize) -> Result<ComplexSeq> {
    if n_zc == 0 {
        return Err(domain!("Zadoff-Chu length must be positive"));
    }
    let n = n_zc as u64;
    if gcd(u % n, n) != 1 {
        return Err(domain!("root {u} is not coprime with length {n_zc}"));
    }
    if cyclic_shift >= n_zc {
        return Err(domain!("cyclic shift {cyclic_shift} outside 0..{n_zc}"));
    }
    let u = u % n;
    Ok((0..n)
        .map(|i| {
            let m = (i + cyclic_shift as u64) % n;
            // m(m+1) is even, so reducing it modulo 2n first keeps the product small
            let q = (m * (m + 1)) % (2 * n);
            unit_phase(u * q, n)
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellId {
    pub pci: u16,
    pub nid1: u16,
    pub nid2: u8,
}

impl CellId {
    pub fn new(pci: u16) -> Result<Self> {
        if pci >= NUM_PCI {
            return Err(domain!("physical cell id {pci} outside 0..{NUM_PCI}"));
        }
        Ok(Self {
            pci,
            nid1: pci / 3,
            nid2: (pci % 3) as u8,
        })
    }

    pub fn from_parts(nid1: u16, nid2: u8) -> Result<Self> {
        if nid1 >= NUM_NID1 || nid2 > 2 {
            return Err(domain!("cell id parts ({nid1}, {nid2}) out of range"));
        }
        Self::new(3 * nid1 + u16::from(nid2))
    }
}

fn pss_m_sequence() -> BinarySeq {
    let spec = LfsrSpec {
        degree: 7,
        taps: vec![0, 4],
        init: vec![0, 1, 1, 0, 1, 1, 1],
    };
    m_sequence(&spec, PSS_LEN).expect("valid PSS generator")
}

pub fn pss_sequence(nid2: u8) -> Result<ComplexSeq> {
    if nid2 > 2 {
        return Err(domain!("nid2 {nid2} outside 0..=2"));
    }
    let x = pss_m_sequence();
    let shift = 43 * nid2 as usize;
    Ok((0..PSS_LEN)
        .map(|n| Cplx::new(bpsk_value(x[(n + shift) % PSS_LEN]), 0.0))
        .collect())
}

pub fn sss_sequence(cell: CellId) -> ComplexSeq {
    let init = vec![1, 0, 0, 0, 0, 0, 0];
    let x0 = m_sequence(
        &LfsrSpec {
            degree: 7,
            taps: vec![0, 4],
            init: init.clone(),
        },
        PSS_LEN,
    )
    .expect("valid SSS generator");
    let x1 = m_sequence(
        &LfsrSpec {
            degree: 7,
            taps: vec![0, 1],
            init,
        },
        PSS_LEN,
    )
    .expect("valid SSS generator");
    let nid1 = cell.nid1 as usize;
    let m0 = 15 * (nid1 / 112) + 5 * cell.nid2 as usize;
    let m1 = nid1 % 112;
    (0..PSS_LEN)
        .map(|n| {
            let v = bpsk_value(x0[(n + m0) % PSS_LEN]) * bpsk_value(x1[(n + m1) % PSS_LEN]);
            Cplx::new(v, 0.0)
        })
        .collect()
}

fn largest_prime_below(m: usize) -> usize {
    (2..m).rev().find(|&p| is_prime(p)).unwrap_or(2)
}

/// Cyclically extended Zadoff-Chu base sequence of group `group` (0..30),
/// used for DFT-s-OFDM DMRS, SRS and PUCCH.
pub fn low_papr_sequence(group: usize, length: usize) -> Result<ComplexSeq> {
    if length < 12 || !length.is_multiple_of(12) {
        return Err(domain!(
            "low-PAPR sequence length {length} must be a positive multiple of 12"
        ));
    }
    if group >= NUM_LOW_PAPR_GROUPS {
        return Err(domain!("sequence group {group} outside 0..{NUM_LOW_PAPR_GROUPS}"));
    }
    let n_zc = largest_prime_below(length);
    let q_bar = n_zc as f64 * (group + 1) as f64 / 31.0;
    let q = (((q_bar + 0.5).floor() as u64) % n_zc as u64).max(1);
    let base = zadoff_chu(q, n_zc, 0)?;
    Ok((0..length).map(|n| base[n % n_zc]).collect())
}

/// Applies a cyclic shift `alpha` in the frequency domain: `r[n] e^{j alpha n}`.
pub fn phase_ramp(seq: &[Cplx], alpha: f64) -> ComplexSeq {
    seq.iter()
        .enumerate()
        .map(|(n, &v)| v * Cplx::from_polar(1.0, alpha * n as f64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lfsr7() -> LfsrSpec {
        LfsrSpec {
            degree: 7,
            taps: vec![0, 4],
            init: vec![1, 0, 1, 1, 0, 0, 1],
        }
    }

    #[test]
    fn m_sequence_balance_and_period() {
        let s = m_sequence(&lfsr7(), 254).unwrap();
        assert_eq!(s[..127].iter().filter(|&&b| b == 1).count(), 64);
        assert_eq!(s[..127], s[127..]);
        assert_eq!(s[0], 1);
        let zero = LfsrSpec {
            init: vec![0; 7],
            ..lfsr7()
        };
        assert!(m_sequence(&zero, 10).is_err());
    }

    #[test]
    fn gold_matches_plain_recurrence() {
        let c_init = 0x1234_5678 & 0x7fff_ffff;
        let n = 300;
        let x1 = m_sequence(
            &LfsrSpec {
                degree: 31,
                taps: vec![0, 3],
                init: (0..31).map(|i| u8::from(i == 0)).collect(),
            },
            GOLD_NC + n,
        )
        .unwrap();
        let x2 = m_sequence(
            &LfsrSpec {
                degree: 31,
                taps: vec![0, 1, 2, 3],
                init: (0..31).map(|i| ((c_init >> i) & 1) as u8).collect(),
            },
            GOLD_NC + n,
        )
        .unwrap();
        let oracle: Vec<u8> = (0..n).map(|i| x1[GOLD_NC + i] ^ x2[GOLD_NC + i]).collect();
        assert_eq!(gold_sequence(c_init, n), oracle);
    }

    #[test]
    fn gold_basic_properties() {
        assert_eq!(gold_sequence(77, 500), gold_sequence(77, 500));
        assert_ne!(gold_sequence(0, 64), gold_sequence(1, 64));
        let long = gold_sequence(999, 1000);
        assert_eq!(gold_sequence(999, 400)[..], long[..400]);
        let (a, b) = gold_constituents(999, 1000);
        let xored: Vec<u8> = long.iter().zip(&a).map(|(c, a)| c ^ a).collect();
        assert_eq!(xored, b);
    }

    #[test]
    fn zc_unit_modulus_and_autocorrelation() {
        let x = zadoff_chu(25, 839, 0).unwrap();
        assert!((x[0] - Cplx::new(1.0, 0.0)).norm() < 1e-15);
        assert!(x.iter().all(|v| (v.norm() - 1.0).abs() < 1e-12));
        for lag in [1usize, 2, 100, 838] {
            let r: Cplx = (0..839).map(|n| x[n] * x[(n + lag) % 839].conj()).sum();
            assert!(r.norm() < 1e-9 * 839.0, "lag {lag}: {}", r.norm());
        }
        assert!(zadoff_chu(839, 839, 0).is_err());
        assert!(zadoff_chu(2, 10, 0).is_err());
        let shifted = zadoff_chu(25, 839, 5).unwrap();
        assert_eq!(shifted[0], x[5]);
    }

    #[test]
    fn pss_shape() {
        let p: Vec<_> = (0..3).map(|n| pss_sequence(n).unwrap()).collect();
        for s in &p {
            assert_eq!(s.len(), 127);
            assert!(s.iter().all(|v| v.im == 0.0 && v.re.abs() == 1.0));
        }
        assert!(pss_sequence(3).is_err());
        // nid2 = 0 starts with x(0), x(1), ... = 0,1,1,0 -> +1,-1,-1,+1
        assert_eq!(
            p[0][..4].iter().map(|v| v.re).collect::<Vec<_>>(),
            vec![1.0, -1.0, -1.0, 1.0]
        );
    }

    #[test]
    fn cell_id_decomposition() {
        let c = CellId::new(1007).unwrap();
        assert_eq!((c.nid1, c.nid2), (335, 2));
        assert_eq!(CellId::from_parts(335, 2).unwrap(), c);
        assert!(CellId::new(1008).is_err());
        assert!(CellId::from_parts(336, 0).is_err());
    }

    #[test]
    fn low_papr_lengths() {
        let s = low_papr_sequence(3, 24).unwrap();
        assert_eq!(s.len(), 24);
        assert!(s.iter().all(|v| (v.norm() - 1.0).abs() < 1e-12));
        assert_eq!(s[23], s[0]);
        assert!(low_papr_sequence(0, 18).is_err());
        assert!(low_papr_sequence(30, 12).is_err());
    }
}
