//! Reed-Muller block code for 1 to 11 UCI bits: a (32, K) subcode of the
//! second-order Reed-Muller code RM(2, 5), decoded by exhaustive correlation.

use std::sync::OnceLock;

use crate::error::{domain, Result};

pub const SMALL_BLOCK_LEN: usize = 32;
pub const MAX_SMALL_BLOCK_BITS: usize = 11;

/// Generator rows as 32-bit masks: x1..x5, the all-ones word, then the
/// quadratic monomials x1x2, x3x4, x1x3, x2x4, x5x1. The first six rows span
/// RM(1, 5), so codes with K <= 6 have minimum distance 16.
fn generator() -> &'static [u32; MAX_SMALL_BLOCK_BITS] {
    static G: OnceLock<[u32; MAX_SMALL_BLOCK_BITS]> = OnceLock::new();
    G.get_or_init(|| {
        let var = |v: usize| -> u32 { (0..32u32).filter(|&i| (i >> v) & 1 == 1).fold(0, |m, i| m | (1 << i)) };
        let x: Vec<u32> = (0..5).map(var).collect();
        [
            x[0],
            x[1],
            x[2],
            x[3],
            x[4],
            u32::MAX,
            x[0] & x[1],
            x[2] & x[3],
            x[0] & x[2],
            x[1] & x[3],
            x[4] & x[0],
        ]
    })
}

/// Guaranteed minimum Hamming distance of the (32, K) code.
pub fn design_distance(k: usize) -> usize {
    if k <= 6 {
        16
    } else {
        8
    }
}

fn check_k(k: usize) -> Result<()> {
    if (1..=MAX_SMALL_BLOCK_BITS).contains(&k) {
        Ok(())
    } else {
        Err(domain!(
            "small block code carries 1..={MAX_SMALL_BLOCK_BITS} bits, got {k}"
        ))
    }
}

fn codeword_mask(bits: &[u8]) -> u32 {
    bits.iter()
        .zip(generator())
        .filter(|(&b, _)| b & 1 == 1)
        .fold(0, |acc, (_, &row)| acc ^ row)
}

/// The 32-bit codeword of `bits`.
pub fn small_block_codeword(bits: &[u8]) -> Result<Vec<u8>> {
    check_k(bits.len())?;
    let m = codeword_mask(bits);
    Ok((0..SMALL_BLOCK_LEN).map(|i| ((m >> i) & 1) as u8).collect())
}

/// Encodes and cyclically extends (or truncates) the codeword to `e` bits.
pub fn small_block_encode(bits: &[u8], e: usize) -> Result<Vec<u8>> {
    let cw = small_block_codeword(bits)?;
    Ok((0..e).map(|i| cw[i % SMALL_BLOCK_LEN]).collect())
}

/// Maximum-likelihood decoding of `k` bits from `e` LLRs (positive favours 0).
pub fn small_block_decode(llr: &[f64], k: usize) -> Result<Vec<u8>> {
    check_k(k)?;
    let mut folded = [0.0f64; SMALL_BLOCK_LEN];
    for (i, &v) in llr.iter().enumerate() {
        folded[i % SMALL_BLOCK_LEN] += v;
    }
    let g = generator();
    let mut best = (f64::NEG_INFINITY, 0u32);
    for msg in 0..(1u32 << k) {
        let mask = (0..k).filter(|&j| (msg >> j) & 1 == 1).fold(0, |acc, j| acc ^ g[j]);
        let score: f64 = folded
            .iter()
            .enumerate()
            .map(|(i, &v)| if (mask >> i) & 1 == 1 { -v } else { v })
            .sum();
        if score > best.0 {
            best = (score, msg);
        }
    }
    Ok((0..k).map(|j| ((best.1 >> j) & 1) as u8).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn min_distance(k: usize) -> u32 {
        (1..(1u32 << k))
            .map(|m| {
                let bits: Vec<u8> = (0..k).map(|j| ((m >> j) & 1) as u8).collect();
                codeword_mask(&bits).count_ones()
            })
            .min()
            .unwrap()
    }

    #[test]
    fn codebook_meets_design_distance() {
        for k in 1..=MAX_SMALL_BLOCK_BITS {
            assert!(min_distance(k) as usize >= design_distance(k), "K={k}");
        }
    }

    #[test]
    fn exhaustive_round_trip() {
        let k = 11;
        for m in 0..(1u32 << k) {
            let bits: Vec<u8> = (0..k).map(|j| ((m >> j) & 1) as u8).collect();
            let cw = small_block_encode(&bits, 48).unwrap();
            let llr: Vec<f64> = cw.iter().map(|&b| 1.0 - 2.0 * f64::from(b)).collect();
            assert_eq!(small_block_decode(&llr, k).unwrap(), bits);
        }
    }

    #[test]
    fn limits() {
        assert!(small_block_encode(&[0; 12], 32).is_err());
        assert!(small_block_encode(&[], 32).is_err());
        assert!(small_block_encode(&[0; 5], 32).unwrap().iter().all(|&b| b == 0));
    }
}
