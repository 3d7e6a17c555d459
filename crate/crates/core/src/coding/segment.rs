//! Base graph selection and code block segmentation.

use super::crc::{crc_attach, crc_check, CrcPoly};
use super::ldpc::{lifting_sizes, BaseGraphId};
use crate::error::{domain, Result};

/// BG2 for small payloads or low rates, BG1 otherwise.
pub fn select_base_graph(size_a: usize, code_rate: f64) -> BaseGraphId {
    if size_a <= 292 || (size_a <= 3824 && code_rate <= 0.67) || code_rate <= 0.25 {
        BaseGraphId::Bg2
    } else {
        BaseGraphId::Bg1
    }
}

/// CRC protecting a whole transport block of `size_a` payload bits.
pub fn tb_crc(size_a: usize) -> CrcPoly {
    if size_a > 3824 {
        CrcPoly::Crc24A
    } else {
        CrcPoly::Crc16
    }
}

pub const CB_CRC: CrcPoly = CrcPoly::Crc24B;

/// Dimensions shared by all code blocks of one segmented input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segmentation {
    pub bg: BaseGraphId,
    /// Input length B (transport block plus its CRC).
    pub b: usize,
    /// Number of code blocks C.
    pub c: usize,
    /// Per-block CRC length L (0 when C = 1).
    pub l: usize,
    /// Bits of each block before filler (payload part plus CB CRC).
    pub k_primes: Vec<usize>,
    /// Lifting size Z_c.
    pub z: usize,
    /// Encoder input length K, equal for every block.
    pub k: usize,
}

impl Segmentation {
    pub fn new(b: usize, bg: BaseGraphId) -> Result<Self> {
        if b == 0 {
            return Err(domain!("cannot segment an empty input"));
        }
        let kcb = bg.max_code_block();
        let (c, l) = if b <= kcb {
            (1, 0)
        } else {
            (b.div_ceil(kcb - CB_CRC.len()), CB_CRC.len())
        };
        let b_prime = b + c * l;
        // leftover bits go to the leading blocks, one each
        let k_primes: Vec<usize> = (0..c).map(|r| b_prime / c + usize::from(r < b_prime % c)).collect();
        let k_prime_max = k_primes[0];
        let kb = match bg {
            BaseGraphId::Bg1 => 22,
            BaseGraphId::Bg2 if b > 640 => 10,
            BaseGraphId::Bg2 if b > 560 => 9,
            BaseGraphId::Bg2 if b > 192 => 8,
            BaseGraphId::Bg2 => 6,
        };
        let z = lifting_sizes()
            .into_iter()
            .find(|&z| kb * z >= k_prime_max)
            .ok_or_else(|| domain!("no lifting size fits a {k_prime_max}-bit code block"))?;
        Ok(Self {
            bg,
            b,
            c,
            l,
            k_primes,
            z,
            k: bg.info_cols() * z,
        })
    }

    /// Coded length per block after puncturing the first 2Z bits.
    pub fn n(&self) -> usize {
        (self.bg.cols() - 2) * self.z
    }

    /// Filler positions of block `r` within the encoder input.
    pub fn filler(&self, r: usize) -> std::ops::Range<usize> {
        self.k_primes[r]..self.k
    }

    /// Payload bits carried by block `r`.
    pub fn payload_len(&self, r: usize) -> usize {
        self.k_primes[r] - self.l
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeBlock {
    /// Encoder input of length K: payload, optional CB CRC, zero filler.
    pub bits: Vec<u8>,
    pub k_prime: usize,
    pub lifting_size: usize,
    pub bg: BaseGraphId,
}

impl CodeBlock {
    /// Payload plus CB CRC, without filler.
    pub fn content(&self) -> &[u8] {
        &self.bits[..self.k_prime]
    }
}

pub fn segment(input: &[u8], bg: BaseGraphId) -> Result<(Segmentation, Vec<CodeBlock>)> {
    let seg = Segmentation::new(input.len(), bg)?;
    let mut blocks = Vec::with_capacity(seg.c);
    let mut pos = 0;
    for r in 0..seg.c {
        let take = seg.payload_len(r);
        let part = &input[pos..pos + take];
        pos += take;
        let mut bits = if seg.c > 1 {
            crc_attach(part, CB_CRC)?
        } else {
            part.to_vec()
        };
        bits.resize(seg.k, 0);
        blocks.push(CodeBlock {
            bits,
            k_prime: seg.k_primes[r],
            lifting_size: seg.z,
            bg,
        });
    }
    Ok((seg, blocks))
}

/// Reassembles the segmented input from decoded block contents (payload plus
/// CB CRC, filler already removed or not). Returns the input and per-block CRC
/// verdicts (all `true` for a single block).
pub fn desegment(seg: &Segmentation, blocks: &[Vec<u8>]) -> (Vec<u8>, Vec<bool>) {
    let mut out = Vec::with_capacity(seg.b);
    let mut ok = Vec::with_capacity(seg.c);
    for (r, blk) in blocks.iter().enumerate().take(seg.c) {
        let content = &blk[..seg.k_primes[r]];
        ok.push(seg.c == 1 || crc_check(content, CB_CRC));
        out.extend_from_slice(&content[..seg.payload_len(r)]);
    }
    (out, ok)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn base_graph_rule() {
        assert_eq!(select_base_graph(100, 0.2), BaseGraphId::Bg2);
        assert_eq!(select_base_graph(8448, 0.8), BaseGraphId::Bg1);
        assert_eq!(select_base_graph(292, 0.7), BaseGraphId::Bg2);
        assert_eq!(select_base_graph(293, 0.7), BaseGraphId::Bg1);
        assert_eq!(select_base_graph(3824, 0.67), BaseGraphId::Bg2);
        assert_eq!(select_base_graph(3825, 0.5), BaseGraphId::Bg1);
        assert_eq!(select_base_graph(100_000, 0.2), BaseGraphId::Bg2);
    }

    #[test]
    fn single_block_has_no_block_crc() {
        let input = vec![1u8; 500];
        let (seg, blocks) = segment(&input, BaseGraphId::Bg1).unwrap();
        assert_eq!((seg.c, seg.l), (1, 0));
        assert_eq!(blocks[0].content(), &input[..]);
        assert_eq!(seg.z, 24);
        assert_eq!(seg.k, 22 * 24);
    }

    #[test]
    fn two_blocks_split_evenly() {
        let input: Vec<u8> = (0..8500).map(|i| (i % 3 == 0) as u8).collect();
        let (seg, blocks) = segment(&input, BaseGraphId::Bg1).unwrap();
        assert_eq!(seg.c, 2);
        assert_eq!(seg.k_primes, vec![4274, 4274]);
        assert!(blocks.iter().all(|b| crc_check(b.content(), CB_CRC)));
        let contents: Vec<Vec<u8>> = blocks.iter().map(|b| b.bits.clone()).collect();
        let (back, ok) = desegment(&seg, &contents);
        assert_eq!(back, input);
        assert!(ok.iter().all(|&x| x));
    }

    #[test]
    fn uneven_split_gives_leading_blocks_one_more_bit() {
        let (seg, _) = segment(&vec![0u8; 3841], BaseGraphId::Bg2).unwrap();
        assert_eq!(seg.c, 2);
        assert_eq!(seg.k_primes, vec![1945, 1944]);
    }
}
