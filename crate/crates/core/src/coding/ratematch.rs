//! LDPC circular-buffer rate matching, bit interleaving and their inverses.

use std::ops::Range;

use super::ldpc::BaseGraphId;
use crate::error::{domain, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RateMatchSpec {
    /// Output length E.
    pub e: usize,
    /// Redundancy version 0..=3.
    pub rv: u8,
    /// Modulation bits per symbol for the row/column bit interleaver (1 = off).
    pub qm: usize,
}

impl RateMatchSpec {
    pub fn new(e: usize, rv: u8) -> Self {
        Self { e, rv, qm: 1 }
    }

    pub fn with_qm(mut self, qm: usize) -> Self {
        self.qm = qm;
        self
    }
}

/// Circular buffer geometry of one code block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BufferLayout {
    pub bg: BaseGraphId,
    pub z: usize,
    /// Filler positions in the encoder input (shifted by 2Z in the buffer).
    pub filler: Range<usize>,
}

impl BufferLayout {
    pub fn n_cb(&self) -> usize {
        (self.bg.cols() - 2) * self.z
    }

    fn filler_in_buffer(&self) -> Range<usize> {
        let s = 2 * self.z;
        self.filler.start.saturating_sub(s)..self.filler.end.saturating_sub(s)
    }

    /// Starting position k0 of redundancy version `rv`.
    pub fn k0(&self, rv: u8) -> usize {
        let (num, den) = match (self.bg, rv) {
            (_, 0) => (0, 1),
            (BaseGraphId::Bg1, 1) => (17, 66),
            (BaseGraphId::Bg1, 2) => (33, 66),
            (BaseGraphId::Bg1, _) => (56, 66),
            (BaseGraphId::Bg2, 1) => (13, 50),
            (BaseGraphId::Bg2, 2) => (25, 50),
            (BaseGraphId::Bg2, _) => (43, 50),
        };
        (num * self.n_cb()) / (den * self.z) * self.z
    }

    /// Buffer indices read, in output order, for `e` bits from version `rv`.
    pub fn selection(&self, e: usize, rv: u8) -> Result<Vec<usize>> {
        let n_cb = self.n_cb();
        let filler = self.filler_in_buffer();
        if filler.len() >= n_cb {
            return Err(domain!("circular buffer holds only filler bits"));
        }
        let k0 = self.k0(rv);
        let mut out = Vec::with_capacity(e);
        let mut j = 0;
        while out.len() < e {
            let idx = (k0 + j) % n_cb;
            if !filler.contains(&idx) {
                out.push(idx);
            }
            j += 1;
        }
        Ok(out)
    }
}

fn check_spec(spec: &RateMatchSpec) -> Result<()> {
    if spec.e == 0 || spec.rv > 3 || spec.qm == 0 || !spec.e.is_multiple_of(spec.qm) {
        return Err(domain!("invalid rate matching spec {spec:?}"));
    }
    Ok(())
}

pub fn rate_match(coded: &[u8], layout: &BufferLayout, spec: &RateMatchSpec) -> Result<Vec<u8>> {
    check_spec(spec)?;
    if coded.len() != layout.n_cb() {
        return Err(domain!(
            "coded block has {} bits, buffer needs {}",
            coded.len(),
            layout.n_cb()
        ));
    }
    let e: Vec<u8> = layout
        .selection(spec.e, spec.rv)?
        .into_iter()
        .map(|i| coded[i])
        .collect();
    Ok(bit_interleave(&e, spec.qm))
}

/// Soft inverse of [`rate_match`]: LLRs of repeated bits are added, untouched
/// positions stay 0 and filler positions are absent from the result's
/// meaning (they are set by the caller).
pub fn rate_recover(llr: &[f32], layout: &BufferLayout, spec: &RateMatchSpec) -> Result<Vec<f32>> {
    check_spec(spec)?;
    if llr.len() != spec.e {
        return Err(domain!("expected {} LLRs, got {}", spec.e, llr.len()));
    }
    let e = bit_deinterleave(llr, spec.qm);
    let mut buf = vec![0f32; layout.n_cb()];
    for (idx, v) in layout.selection(spec.e, spec.rv)?.into_iter().zip(e) {
        buf[idx] += v;
    }
    Ok(buf)
}

/// `f[i + j*qm] = e[i*E/qm + j]`.
pub fn bit_interleave<T: Copy>(e: &[T], qm: usize) -> Vec<T> {
    if qm <= 1 {
        return e.to_vec();
    }
    let cols = e.len() / qm;
    let mut f = Vec::with_capacity(e.len());
    for j in 0..cols {
        for i in 0..qm {
            f.push(e[i * cols + j]);
        }
    }
    f
}

pub fn bit_deinterleave<T: Copy + Default>(f: &[T], qm: usize) -> Vec<T> {
    if qm <= 1 {
        return f.to_vec();
    }
    let cols = f.len() / qm;
    let mut e = vec![T::default(); f.len()];
    for j in 0..cols {
        for i in 0..qm {
            e[i * cols + j] = f[i + j * qm];
        }
    }
    e
}

/// Rate-matched lengths E_r of `c` blocks sharing `g` coded bits over
/// `nl` layers with `qm` bits per symbol.
pub fn split_e(g: usize, c: usize, nl: usize, qm: usize) -> Vec<usize> {
    let unit = nl * qm;
    let symbols = g / unit;
    let small = c - symbols % c;
    (0..c)
        .map(|r| {
            if r < small {
                unit * (symbols / c)
            } else {
                unit * symbols.div_ceil(c)
            }
        })
        .collect()
}

pub fn concat(blocks: &[Vec<u8>]) -> Vec<u8> {
    blocks.concat()
}
