//! Transport block chain (CRC, segmentation, LDPC, rate matching), bit
//! scrambling and UCI coding.

use super::crc::{crc_attach, crc_check, CrcPoly};
use super::ldpc::{BaseGraphId, LdpcCode, DEFAULT_MAX_ITERS};
use super::polar::{PolarCode, PolarSpec};
use super::ratematch::{rate_match, split_e, BufferLayout, RateMatchSpec};
use super::segment::{desegment, segment, select_base_graph, tb_crc, Segmentation};
use super::smallblock::{small_block_decode, small_block_encode, MAX_SMALL_BLOCK_BITS};
use crate::error::{domain, Result};
use crate::sequences::GoldGenerator;

/// Everything needed to move one transport block through the data chain.
#[derive(Debug, Clone)]
pub struct TbChain {
    pub size_a: usize,
    pub bg: BaseGraphId,
    pub crc: CrcPoly,
    pub seg: Segmentation,
    /// Rate-matched length of each code block.
    pub es: Vec<usize>,
    pub rv: u8,
    pub qm: usize,
    pub max_iters: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TbDecoded {
    pub bits: Vec<u8>,
    pub tb_crc_ok: bool,
    pub cb_crc_ok: Vec<bool>,
    pub converged: Vec<bool>,
}

impl TbChain {
    /// Plans a transport block of `size_a` bits onto `g` coded bits carried by
    /// `num_layers` layers of `qm`-bit symbols. `code_rate` only drives the
    /// base graph choice.
    pub fn new(size_a: usize, code_rate: f64, g: usize, qm: usize, num_layers: usize, rv: u8) -> Result<Self> {
        Self::with_base_graph(size_a, select_base_graph(size_a, code_rate), g, qm, num_layers, rv)
    }

    pub fn with_base_graph(
        size_a: usize,
        bg: BaseGraphId,
        g: usize,
        qm: usize,
        num_layers: usize,
        rv: u8,
    ) -> Result<Self> {
        if size_a == 0 {
            return Err(domain!("transport block must carry at least one bit"));
        }
        if rv > 3 || qm == 0 || num_layers == 0 {
            return Err(domain!("invalid chain parameters rv={rv} qm={qm} layers={num_layers}"));
        }
        if g == 0 || !g.is_multiple_of(qm * num_layers) {
            return Err(domain!(
                "{g} coded bits do not fill whole symbols on {num_layers} layers"
            ));
        }
        let crc = tb_crc(size_a);
        let seg = Segmentation::new(size_a + crc.len(), bg)?;
        let es = split_e(g, seg.c, num_layers, qm);
        if es.contains(&0) {
            return Err(domain!("{g} coded bits cannot serve {} code blocks", seg.c));
        }
        Ok(Self {
            size_a,
            bg,
            crc,
            seg,
            es,
            rv,
            qm,
            max_iters: DEFAULT_MAX_ITERS,
        })
    }

    pub fn g(&self) -> usize {
        self.es.iter().sum()
    }

    pub fn layout(&self, r: usize) -> BufferLayout {
        BufferLayout {
            bg: self.bg,
            z: self.seg.z,
            filler: self.seg.filler(r),
        }
    }

    fn rm_spec(&self, r: usize) -> RateMatchSpec {
        RateMatchSpec::new(self.es[r], self.rv).with_qm(self.qm)
    }

    pub fn encode(&self, tb: &[u8]) -> Result<Vec<u8>> {
        if tb.len() != self.size_a {
            return Err(domain!(
                "transport block has {} bits, chain expects {}",
                tb.len(),
                self.size_a
            ));
        }
        let with_crc = crc_attach(tb, self.crc)?;
        let (_, blocks) = segment(&with_crc, self.bg)?;
        let code = LdpcCode::get(self.bg, self.seg.z)?;
        let mut out = Vec::with_capacity(self.g());
        for (r, cb) in blocks.iter().enumerate() {
            let coded = code.encode(&cb.bits)?;
            out.extend(rate_match(&coded, &self.layout(r), &self.rm_spec(r))?);
        }
        Ok(out)
    }

    pub fn decode(&self, llr: &[f64]) -> Result<TbDecoded> {
        if llr.len() != self.g() {
            return Err(domain!("expected {} LLRs, got {}", self.g(), llr.len()));
        }
        let mut contents = Vec::with_capacity(self.seg.c);
        let mut converged = Vec::with_capacity(self.seg.c);
        let mut pos = 0;
        for r in 0..self.seg.c {
            let e = self.es[r];
            let out = super::ldpc_decode(
                &llr[pos..pos + e],
                &self.layout(r),
                self.seg.k_primes[r],
                &self.rm_spec(r),
                self.max_iters,
            )?;
            pos += e;
            converged.push(out.converged);
            contents.push(out.bits);
        }
        let (with_crc, cb_crc_ok) = desegment(&self.seg, &contents);
        let tb_crc_ok = crc_check(&with_crc, self.crc);
        Ok(TbDecoded {
            bits: with_crc[..self.size_a].to_vec(),
            tb_crc_ok,
            cb_crc_ok,
            converged,
        })
    }
}

/// XORs `bits` with the Gold sequence of `c_init`.
pub fn scramble(bits: &[u8], c_init: u32) -> Vec<u8> {
    bits.iter()
        .zip(GoldGenerator::new(c_init))
        .map(|(b, c)| b ^ c)
        .collect()
}

/// Undoes [`scramble`] on LLRs by flipping signs where the sequence is 1.
pub fn descramble_llr(llr: &[f64], c_init: u32) -> Vec<f64> {
    llr.iter()
        .zip(GoldGenerator::new(c_init))
        .map(|(&v, c)| if c == 1 { -v } else { v })
        .collect()
}

/// Polar spec for UCI payloads above the small block range.
pub fn uci_polar_spec(k: usize, e: usize) -> PolarSpec {
    let crc = if k >= 20 { CrcPoly::Crc11 } else { CrcPoly::Crc6 };
    PolarSpec::new(k, e, crc).with_n_max(10)
}

/// Encodes UCI: small block code up to 11 bits, CRC-aided polar above.
pub fn uci_encode(bits: &[u8], e: usize) -> Result<Vec<u8>> {
    if bits.is_empty() {
        return Err(domain!("empty UCI payload"));
    }
    if bits.len() <= MAX_SMALL_BLOCK_BITS {
        small_block_encode(bits, e)
    } else {
        PolarCode::new(uci_polar_spec(bits.len(), e))?.encode(bits)
    }
}

/// Decodes `k` UCI bits; `None` when the polar CRC fails.
pub fn uci_decode(llr: &[f64], k: usize) -> Result<Option<Vec<u8>>> {
    if k <= MAX_SMALL_BLOCK_BITS {
        small_block_decode(llr, k).map(Some)
    } else {
        PolarCode::new(uci_polar_spec(k, llr.len()))?.decode(llr)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits(n: usize, seed: usize) -> Vec<u8> {
        (0..n).map(|i| ((i * 2654435761usize + seed) >> 7 & 1) as u8).collect()
    }

    fn noiseless(cw: &[u8]) -> Vec<f64> {
        cw.iter().map(|&b| if b == 0 { 10.0 } else { -10.0 }).collect()
    }

    #[test]
    fn single_block_round_trip() {
        let chain = TbChain::new(1000, 0.5, 2400, 2, 1, 0).unwrap();
        assert_eq!(chain.bg, BaseGraphId::Bg2);
        let tb = bits(1000, 3);
        let cw = chain.encode(&tb).unwrap();
        assert_eq!(cw.len(), 2400);
        let out = chain.decode(&noiseless(&cw)).unwrap();
        assert!(out.tb_crc_ok);
        assert_eq!(out.bits, tb);
    }

    #[test]
    fn multi_block_round_trip_every_rv() {
        for rv in 0..4 {
            let chain = TbChain::with_base_graph(9000, BaseGraphId::Bg1, 2 * 66 * 208, 6, 1, rv).unwrap();
            assert!(chain.seg.c >= 2);
            let tb = bits(9000, rv as usize);
            let cw = chain.encode(&tb).unwrap();
            let out = chain.decode(&noiseless(&cw)).unwrap();
            assert!(out.tb_crc_ok && out.cb_crc_ok.iter().all(|&x| x), "rv {rv}");
            assert_eq!(out.bits, tb);
        }
    }

    #[test]
    fn scrambling_is_an_involution() {
        let b = bits(300, 1);
        assert_eq!(scramble(&scramble(&b, 1234), 1234), b);
        let llr = noiseless(&scramble(&b, 99));
        let back: Vec<u8> = descramble_llr(&llr, 99).iter().map(|&v| u8::from(v < 0.0)).collect();
        assert_eq!(back, b);
    }

    #[test]
    fn uci_round_trip_both_codes() {
        for k in [3, 11, 12, 25] {
            let b = bits(k, k);
            let cw = uci_encode(&b, 96).unwrap();
            assert_eq!(uci_decode(&noiseless(&cw), k).unwrap(), Some(b));
        }
    }
}
