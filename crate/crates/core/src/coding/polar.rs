//! CRC-aided polar codes with successive-cancellation list decoding.
//!
//! The transform is `x = u F^{(x)n}` in natural bit order. Rate matching
//! shortens the tail of the codeword, punctures its head, or repeats it
//! circularly; bits forced to be known by shortening or unobservable by
//! puncturing are frozen.

use std::sync::OnceLock;

use super::crc::{crc_bits, crc_compute, CrcPoly};
use crate::error::{domain, Result};

pub const MAX_POLAR_N: usize = 1024;
pub const DEFAULT_LIST_SIZE: usize = 8;

/// Channel indices of the length-1024 reliability sequence, least reliable first.
pub fn reliability_sequence() -> &'static [u16] {
    static SEQ: OnceLock<Vec<u16>> = OnceLock::new();
    SEQ.get_or_init(|| {
        parse_reliability(include_str!("../../data/polar_reliability.txt")).expect("bundled polar reliability table")
    })
}

pub fn parse_reliability(text: &str) -> Result<Vec<u16>> {
    let mut nums = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .flat_map(str::split_whitespace)
        .map(|t| {
            t.parse::<u16>()
                .map_err(|e| domain!("bad reliability token `{t}`: {e}"))
        });
    let n = nums.next().ok_or_else(|| domain!("empty reliability file"))?? as usize;
    let seq: Vec<u16> = nums.collect::<Result<_>>()?;
    let mut seen = vec![false; n];
    if seq.len() != n
        || !seq
            .iter()
            .all(|&i| (i as usize) < n && !std::mem::replace(&mut seen[i as usize], true))
    {
        return Err(domain!("reliability sequence is not a permutation of 0..{n}"));
    }
    Ok(seq)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolarRateMatch {
    Repetition,
    Puncturing,
    Shortening,
}

/// Parameters of one polar code instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PolarSpec {
    pub payload_len: usize,
    /// Rate-matched output length E.
    pub coded_len: usize,
    pub crc: CrcPoly,
    pub list_size: usize,
    /// log2 of the largest mother code length.
    pub n_max: u32,
}

impl PolarSpec {
    pub fn new(payload_len: usize, coded_len: usize, crc: CrcPoly) -> Self {
        Self {
            payload_len,
            coded_len,
            crc,
            list_size: DEFAULT_LIST_SIZE,
            n_max: 9,
        }
    }

    pub fn with_list_size(mut self, list_size: usize) -> Self {
        self.list_size = list_size;
        self
    }

    pub fn with_n_max(mut self, n_max: u32) -> Self {
        self.n_max = n_max;
        self
    }

    /// Information bits K = payload + CRC.
    pub fn k(&self) -> usize {
        self.payload_len + self.crc.len()
    }

    /// Mother code length N (a power of two).
    pub fn mother_len(&self) -> usize {
        let e = self.coded_len.max(1);
        let k = self.k().max(1);
        let ceil_log2 = |x: usize| usize::BITS - (x - 1).leading_zeros();
        let le = ceil_log2(e);
        let n1 = if le > 0 && 8 * e <= 9 * (1 << (le - 1)) && 16 * k < 9 * e {
            le - 1
        } else {
            le
        };
        let n2 = ceil_log2(8 * k);
        1 << n1.min(n2).min(self.n_max).max(5)
    }
}

/// Frozen set and rate matching of a [`PolarSpec`].
#[derive(Debug, Clone)]
pub struct PolarCode {
    pub spec: PolarSpec,
    pub n: usize,
    pub mode: PolarRateMatch,
    /// Information positions in increasing index order.
    pub info_positions: Vec<usize>,
    frozen: Vec<bool>,
}

impl PolarCode {
    pub fn new(spec: PolarSpec) -> Result<Self> {
        let k = spec.k();
        if spec.payload_len == 0 || k > spec.coded_len {
            return Err(domain!(
                "polar payload {} + CRC {} does not fit {} coded bits",
                spec.payload_len,
                spec.crc.len(),
                spec.coded_len
            ));
        }
        if spec.list_size == 0 {
            return Err(domain!("list size must be at least 1"));
        }
        let n = spec.mother_len();
        if n > MAX_POLAR_N || k > n {
            return Err(domain!("polar mother code {n} cannot carry {k} bits"));
        }
        let e = spec.coded_len;
        let mode = if e >= n {
            PolarRateMatch::Repetition
        } else if 16 * k > 7 * e {
            PolarRateMatch::Shortening
        } else {
            PolarRateMatch::Puncturing
        };
        let mut frozen = vec![false; n];
        match mode {
            PolarRateMatch::Repetition => {}
            PolarRateMatch::Shortening => frozen[e..].iter_mut().for_each(|f| *f = true),
            PolarRateMatch::Puncturing => frozen[..n - e].iter_mut().for_each(|f| *f = true),
        }
        let candidates: Vec<usize> = reliability_sequence()
            .iter()
            .map(|&i| i as usize)
            .filter(|&i| i < n && !frozen[i])
            .collect();
        if candidates.len() < k {
            return Err(domain!("only {} usable polar channels for {k} bits", candidates.len()));
        }
        frozen.iter_mut().for_each(|f| *f = true);
        let mut info_positions: Vec<usize> = candidates[candidates.len() - k..].to_vec();
        info_positions.sort_unstable();
        for &i in &info_positions {
            frozen[i] = false;
        }
        Ok(Self {
            spec,
            n,
            mode,
            info_positions,
            frozen,
        })
    }

    pub fn is_frozen(&self, i: usize) -> bool {
        self.frozen[i]
    }

    /// Encodes K information bits (payload with CRC already attached) to E bits.
    pub fn encode_info(&self, info: &[u8]) -> Result<Vec<u8>> {
        if info.len() != self.spec.k() {
            return Err(domain!(
                "polar encoder expects {} bits, got {}",
                self.spec.k(),
                info.len()
            ));
        }
        let mut u = vec![0u8; self.n];
        for (&p, &b) in self.info_positions.iter().zip(info) {
            u[p] = b & 1;
        }
        polar_transform(&mut u);
        let e = self.spec.coded_len;
        Ok(match self.mode {
            PolarRateMatch::Repetition => (0..e).map(|i| u[i % self.n]).collect(),
            PolarRateMatch::Shortening => u[..e].to_vec(),
            PolarRateMatch::Puncturing => u[self.n - e..].to_vec(),
        })
    }

    /// Attaches the CRC and encodes.
    pub fn encode(&self, payload: &[u8]) -> Result<Vec<u8>> {
        if payload.len() != self.spec.payload_len {
            return Err(domain!(
                "polar payload has {} bits, spec says {}",
                payload.len(),
                self.spec.payload_len
            ));
        }
        let crc = crc_compute(payload, self.spec.crc);
        let mut info = payload.to_vec();
        info.extend(crc_bits(crc, self.spec.crc.len()));
        self.encode_info(&info)
    }

    /// Mother-code LLRs from E received LLRs.
    fn recover(&self, llr: &[f64]) -> Result<Vec<f64>> {
        let e = self.spec.coded_len;
        if llr.len() != e {
            return Err(domain!("polar decoder expects {e} LLRs, got {}", llr.len()));
        }
        let n = self.n;
        Ok(match self.mode {
            PolarRateMatch::Repetition => {
                let mut out = vec![0.0; n];
                for (i, &v) in llr.iter().enumerate() {
                    out[i % n] += v;
                }
                out
            }
            PolarRateMatch::Shortening => {
                let mut out = vec![KNOWN_ZERO_LLR; n];
                out[..e].copy_from_slice(llr);
                out
            }
            PolarRateMatch::Puncturing => {
                let mut out = vec![0.0; n];
                out[n - e..].copy_from_slice(llr);
                out
            }
        })
    }

    /// Surviving list paths as (information bits, path metric), best first.
    pub fn decode_list(&self, llr: &[f64]) -> Result<Vec<(Vec<u8>, f64)>> {
        let mother = self.recover(llr)?;
        let paths = scl_decode(&mother, &self.frozen, self.spec.list_size);
        Ok(paths
            .into_iter()
            .map(|(u, pm)| (self.info_positions.iter().map(|&p| u[p]).collect(), pm))
            .collect())
    }

    /// First list candidate (best metric first) accepted by `accept`, which
    /// receives the K information bits.
    pub fn decode_with<F: Fn(&[u8]) -> bool>(&self, llr: &[f64], accept: F) -> Result<Option<Vec<u8>>> {
        Ok(self
            .decode_list(llr)?
            .into_iter()
            .find(|(info, _)| accept(info))
            .map(|(info, _)| info))
    }

    /// CRC-aided decoding; returns the payload without CRC.
    pub fn decode(&self, llr: &[f64]) -> Result<Option<Vec<u8>>> {
        let crc = self.spec.crc;
        Ok(self
            .decode_with(llr, |info| crc_compute(info, crc) == 0)?
            .map(|mut info| {
                info.truncate(self.spec.payload_len);
                info
            }))
    }
}

const KNOWN_ZERO_LLR: f64 = 1e9;

/// In-place `x = u F^{(x)n}`, natural order.
pub fn polar_transform(u: &mut [u8]) {
    let n = u.len();
    let mut h = 1;
    while h < n {
        for blk in (0..n).step_by(2 * h) {
            for i in blk..blk + h {
                u[i] ^= u[i + h];
            }
        }
        h *= 2;
    }
}

pub fn polar_encode(payload: &[u8], spec: &PolarSpec) -> Result<Vec<u8>> {
    PolarCode::new(*spec)?.encode(payload)
}

pub fn polar_decode(llr: &[f64], spec: &PolarSpec) -> Result<Option<Vec<u8>>> {
    PolarCode::new(*spec)?.decode(llr)
}

#[derive(Clone)]
struct Path {
    // llr[d] has N >> d entries, bits[d] likewise
    llr: Vec<Vec<f64>>,
    bits: Vec<Vec<u8>>,
    u: Vec<u8>,
    pm: f64,
}

#[inline]
fn f_op(a: f64, b: f64) -> f64 {
    a.signum() * b.signum() * a.abs().min(b.abs())
}

#[inline]
fn g_op(a: f64, b: f64, v: u8) -> f64 {
    if v == 0 {
        b + a
    } else {
        b - a
    }
}

#[inline]
fn penalty(llr: f64, bit: u8) -> f64 {
    if (llr < 0.0) != (bit == 1) {
        llr.abs()
    } else {
        0.0
    }
}

/// Successive-cancellation list decoding; returns (u, metric) sorted by
/// increasing metric (lower is better).
fn scl_decode(llr: &[f64], frozen: &[bool], list_size: usize) -> Vec<(Vec<u8>, f64)> {
    let n = llr.len();
    let depth = n.trailing_zeros() as usize;
    let mut root = Path {
        llr: (0..=depth).map(|d| vec![0.0; n >> d]).collect(),
        bits: (0..=depth).map(|d| vec![0u8; n >> d]).collect(),
        u: vec![0; n],
        pm: 0.0,
    };
    root.llr[0].copy_from_slice(llr);
    let mut paths = vec![root];
    descend(&mut paths, 0, 0, frozen, list_size);
    paths.sort_by(|a, b| a.pm.total_cmp(&b.pm));
    paths.into_iter().map(|p| (p.u, p.pm)).collect()
}

fn descend(paths: &mut Vec<Path>, d: usize, offset: usize, frozen: &[bool], list_size: usize) {
    let m = paths[0].llr[d].len();
    if m == 1 {
        leaf(paths, d, offset, frozen, list_size);
        return;
    }
    let h = m / 2;
    if frozen[offset..offset + m].iter().all(|&f| f) {
        for p in paths.iter_mut() {
            // rate-0 node: all bits zero, penalty of every negative leaf LLR
            let mut node = p.llr[d].clone();
            p.pm += rate0_penalty(&mut node);
            p.bits[d].fill(0);
            p.u[offset..offset + m].fill(0);
        }
        return;
    }
    for p in paths.iter_mut() {
        let (upper, lower) = p.llr.split_at_mut(d + 1);
        let src = &upper[d];
        for (j, o) in lower[0][..h].iter_mut().enumerate() {
            *o = f_op(src[j], src[j + h]);
        }
    }
    descend(paths, d + 1, offset, frozen, list_size);
    for p in paths.iter_mut() {
        let left: Vec<u8> = p.bits[d + 1][..h].to_vec();
        p.bits[d][..h].copy_from_slice(&left);
        let (upper, lower) = p.llr.split_at_mut(d + 1);
        let src = &upper[d];
        for (j, o) in lower[0][..h].iter_mut().enumerate() {
            *o = g_op(src[j], src[j + h], left[j]);
        }
    }
    descend(paths, d + 1, offset + h, frozen, list_size);
    for p in paths.iter_mut() {
        let (upper, lower) = p.bits.split_at_mut(d + 1);
        let right = &lower[0];
        let cur = &mut upper[d];
        for j in 0..h {
            cur[j] ^= right[j];
            cur[j + h] = right[j];
        }
    }
}

/// Metric increase of deciding an all-frozen subtree with node LLRs `node`
/// by recursing the f/g updates down to the leaves with every bit zero.
fn rate0_penalty(node: &mut [f64]) -> f64 {
    if node.len() == 1 {
        return penalty(node[0], 0);
    }
    let h = node.len() / 2;
    let mut left: Vec<f64> = (0..h).map(|j| f_op(node[j], node[j + h])).collect();
    let mut right: Vec<f64> = (0..h).map(|j| node[j] + node[j + h]).collect();
    rate0_penalty(&mut left) + rate0_penalty(&mut right)
}

fn leaf(paths: &mut Vec<Path>, d: usize, i: usize, frozen: &[bool], list_size: usize) {
    if frozen[i] {
        for p in paths.iter_mut() {
            p.pm += penalty(p.llr[d][0], 0);
            p.bits[d][0] = 0;
            p.u[i] = 0;
        }
        return;
    }
    let mut cands: Vec<(f64, usize, u8)> = Vec::with_capacity(2 * paths.len());
    for (pi, p) in paths.iter().enumerate() {
        let l = p.llr[d][0];
        for b in 0..2u8 {
            cands.push((p.pm + penalty(l, b), pi, b));
        }
    }
    cands.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    cands.truncate(list_size);
    let mut next = Vec::with_capacity(cands.len());
    for (pm, pi, b) in cands {
        let mut p = paths[pi].clone();
        p.pm = pm;
        p.bits[d][0] = b;
        p.u[i] = b;
        next.push(p);
    }
    *paths = next;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reliability_table_is_a_permutation() {
        let s = reliability_sequence();
        assert_eq!(s.len(), 1024);
        assert_eq!(&s[..4], &[0, 1, 2, 4]);
        assert_eq!(s[1023], 1023);
    }

    #[test]
    fn mother_length_selection() {
        assert_eq!(PolarSpec::new(32, 864, CrcPoly::Crc24C).mother_len(), 512);
        assert_eq!(PolarSpec::new(40, 108, CrcPoly::Crc24C).mother_len(), 128);
        assert_eq!(PolarSpec::new(12, 40, CrcPoly::Crc6).with_n_max(10).mother_len(), 64);
    }

    #[test]
    fn transform_is_an_involution() {
        let mut u: Vec<u8> = (0..64).map(|i| (i * 5 % 3 % 2) as u8).collect();
        let orig = u.clone();
        polar_transform(&mut u);
        polar_transform(&mut u);
        assert_eq!(u, orig);
    }

    #[test]
    fn noiseless_round_trip_all_rate_matching_modes() {
        for (payload, e) in [(32, 864), (40, 108), (20, 200), (60, 100), (40, 432)] {
            let spec = PolarSpec::new(payload, e, CrcPoly::Crc24C);
            let code = PolarCode::new(spec).unwrap();
            let bits: Vec<u8> = (0..payload).map(|i| ((i * 13 + e) % 7 % 2) as u8).collect();
            let cw = code.encode(&bits).unwrap();
            assert_eq!(cw.len(), e);
            let llr: Vec<f64> = cw.iter().map(|&b| if b == 0 { 4.0 } else { -4.0 }).collect();
            assert_eq!(code.decode(&llr).unwrap(), Some(bits), "{:?}", code.mode);
        }
    }

    #[test]
    fn oversized_payload_is_rejected() {
        assert!(PolarCode::new(PolarSpec::new(100, 64, CrcPoly::Crc24C)).is_err());
    }
}
