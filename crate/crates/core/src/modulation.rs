//! Gray-mapped modulation, max-log soft demodulation, layer mapping and DFT
//! transform precoding.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::dsp::dft_unitary;
use crate::error::{domain, Result};
use crate::numerology::LinkDirection;
use crate::Cplx;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModOrder {
    Bpsk,
    Qpsk,
    Qam16,
    Qam64,
    Qam256,
}

impl ModOrder {
    pub const ALL: [ModOrder; 5] = [
        ModOrder::Bpsk,
        ModOrder::Qpsk,
        ModOrder::Qam16,
        ModOrder::Qam64,
        ModOrder::Qam256,
    ];

    pub fn bits_per_symbol(self) -> usize {
        match self {
            ModOrder::Bpsk => 1,
            ModOrder::Qpsk => 2,
            ModOrder::Qam16 => 4,
            ModOrder::Qam64 => 6,
            ModOrder::Qam256 => 8,
        }
    }

    pub fn from_bits_per_symbol(qm: usize) -> Result<Self> {
        ModOrder::ALL
            .into_iter()
            .find(|m| m.bits_per_symbol() == qm)
            .ok_or_else(|| domain!("no modulation with {qm} bits per symbol"))
    }

    pub fn name(self) -> &'static str {
        match self {
            ModOrder::Bpsk => "bpsk",
            ModOrder::Qpsk => "qpsk",
            ModOrder::Qam16 => "qam16",
            ModOrder::Qam64 => "qam64",
            ModOrder::Qam256 => "qam256",
        }
    }

    /// Accepts `qam16` as well as `16qam` spellings.
    pub fn from_name(name: &str) -> Result<Self> {
        let n = name.to_ascii_lowercase().replace(['-', '_'], "");
        let n = match n.strip_suffix("qam") {
            Some(order) if !order.is_empty() => format!("qam{order}"),
            _ => n,
        };
        ModOrder::ALL
            .into_iter()
            .find(|m| m.name() == n)
            .ok_or_else(|| domain!("unknown modulation `{name}`"))
    }

    /// Bits per real dimension for the square QAM orders.
    fn bits_per_dim(self) -> usize {
        self.bits_per_symbol() / 2
    }

    fn scale(self) -> f64 {
        match self {
            ModOrder::Bpsk => FRAC_1_SQRT_2,
            _ => {
                let m = self.bits_per_dim() as i32;
                1.0 / (2.0 * (4f64.powi(m) - 1.0) / 3.0).sqrt()
            }
        }
    }

    /// All constellation points indexed by their label (first bit is the MSB of
    /// the index).
    pub fn constellation(self) -> Vec<Cplx> {
        let q = self.bits_per_symbol();
        (0..1usize << q)
            .map(|label| {
                let bits: Vec<u8> = (0..q).map(|i| ((label >> (q - 1 - i)) & 1) as u8).collect();
                map_symbol(&bits, self)
            })
            .collect()
    }
}

/// Unnormalized PAM amplitude of the Gray label `c` (first bit is the sign).
fn pam_amplitude(c: &[u8]) -> f64 {
    let m = c.len();
    let mut w = 1.0;
    for j in (1..m).rev() {
        w = f64::from(1u32 << (m - j)) - (1.0 - 2.0 * f64::from(c[j])) * w;
    }
    (1.0 - 2.0 * f64::from(c[0])) * w
}

fn map_symbol(bits: &[u8], order: ModOrder) -> Cplx {
    let s = order.scale();
    match order {
        ModOrder::Bpsk => {
            let v = 1.0 - 2.0 * f64::from(bits[0]);
            Cplx::new(v * s, v * s)
        }
        _ => {
            let i: Vec<u8> = bits.iter().step_by(2).copied().collect();
            let q: Vec<u8> = bits.iter().skip(1).step_by(2).copied().collect();
            Cplx::new(s * pam_amplitude(&i), s * pam_amplitude(&q))
        }
    }
}

pub fn modulate(bits: &[u8], order: ModOrder) -> Result<Vec<Cplx>> {
    let q = order.bits_per_symbol();
    if !bits.len().is_multiple_of(q) {
        return Err(domain!("{} bits do not divide into {q}-bit symbols", bits.len()));
    }
    Ok(bits.chunks_exact(q).map(|c| map_symbol(c, order)).collect())
}

/// Max-log LLRs (positive favours 0) with a common noise variance.
pub fn soft_demod(symbols: &[Cplx], order: ModOrder, noise_var: f64) -> Vec<f64> {
    let vars = vec![noise_var; symbols.len()];
    soft_demod_with(symbols, order, &vars)
}

/// Max-log LLRs with a per-symbol noise variance.
pub fn soft_demod_with(symbols: &[Cplx], order: ModOrder, noise_vars: &[f64]) -> Vec<f64> {
    let q = order.bits_per_symbol();
    let mut out = Vec::with_capacity(symbols.len() * q);
    match order {
        ModOrder::Bpsk => {
            for (y, &nv) in symbols.iter().zip(noise_vars) {
                // |y + p|^2 - |y - p|^2 with p = (1 + j)/sqrt(2)
                out.push(4.0 * FRAC_1_SQRT_2 * (y.re + y.im) / nv);
            }
        }
        _ => {
            let m = order.bits_per_dim();
            let s = order.scale();
            let levels: Vec<(f64, Vec<u8>)> = (0..1usize << m)
                .map(|label| {
                    let c: Vec<u8> = (0..m).map(|i| ((label >> (m - 1 - i)) & 1) as u8).collect();
                    (s * pam_amplitude(&c), c)
                })
                .collect();
            let mut llr_i = vec![0.0; m];
            let mut llr_q = vec![0.0; m];
            for (y, &nv) in symbols.iter().zip(noise_vars) {
                pam_llr(y.re, &levels, nv, &mut llr_i);
                pam_llr(y.im, &levels, nv, &mut llr_q);
                for j in 0..m {
                    out.push(llr_i[j]);
                    out.push(llr_q[j]);
                }
            }
        }
    }
    out
}

fn pam_llr(x: f64, levels: &[(f64, Vec<u8>)], nv: f64, out: &mut [f64]) {
    for (j, o) in out.iter_mut().enumerate() {
        let mut d0 = f64::INFINITY;
        let mut d1 = f64::INFINITY;
        for (a, c) in levels {
            let d = (x - a) * (x - a);
            if c[j] == 0 {
                d0 = d0.min(d);
            } else {
                d1 = d1.min(d);
            }
        }
        *o = (d1 - d0) / nv;
    }
}

pub fn hard_decision(llr: &[f64]) -> Vec<u8> {
    llr.iter().map(|&v| u8::from(v < 0.0)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerMapSpec {
    pub num_codewords: usize,
    pub num_layers: usize,
    pub direction: LinkDirection,
}

impl LayerMapSpec {
    pub fn new(num_codewords: usize, num_layers: usize, direction: LinkDirection) -> Result<Self> {
        let s = Self {
            num_codewords,
            num_layers,
            direction,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self.direction {
            LinkDirection::Downlink => match self.num_codewords {
                1 => (1..=4).contains(&self.num_layers),
                2 => (5..=8).contains(&self.num_layers),
                _ => false,
            },
            LinkDirection::Uplink => self.num_codewords == 1 && (1..=4).contains(&self.num_layers),
        };
        if ok {
            Ok(())
        } else {
            Err(domain!(
                "{} codeword(s) on {} layer(s) not supported in {:?}",
                self.num_codewords,
                self.num_layers,
                self.direction
            ))
        }
    }

    /// Layers of each codeword; with two codewords the first takes the floor.
    pub fn layers_per_codeword(&self) -> Vec<usize> {
        match self.num_codewords {
            1 => vec![self.num_layers],
            _ => vec![self.num_layers / 2, self.num_layers - self.num_layers / 2],
        }
    }
}

/// Round-robin distribution of each codeword over its layers.
pub fn layer_map<T: Copy>(codewords: &[Vec<T>], spec: &LayerMapSpec) -> Result<Vec<Vec<T>>> {
    spec.validate()?;
    if codewords.len() != spec.num_codewords {
        return Err(domain!(
            "expected {} codewords, got {}",
            spec.num_codewords,
            codewords.len()
        ));
    }
    let per_cw = spec.layers_per_codeword();
    let mut per_layer_len = None;
    let mut layers = Vec::with_capacity(spec.num_layers);
    for (cw, &nl) in codewords.iter().zip(&per_cw) {
        if cw.len() % nl != 0 {
            return Err(domain!("{} symbols do not split over {nl} layers", cw.len()));
        }
        let len = cw.len() / nl;
        if *per_layer_len.get_or_insert(len) != len {
            return Err(domain!("codewords give unequal layer lengths"));
        }
        for l in 0..nl {
            layers.push(cw.iter().skip(l).step_by(nl).copied().collect());
        }
    }
    Ok(layers)
}

pub fn layer_demap<T: Copy>(layers: &[Vec<T>], spec: &LayerMapSpec) -> Result<Vec<Vec<T>>> {
    spec.validate()?;
    if layers.len() != spec.num_layers {
        return Err(domain!("expected {} layers, got {}", spec.num_layers, layers.len()));
    }
    let mut out = Vec::with_capacity(spec.num_codewords);
    let mut start = 0;
    for nl in spec.layers_per_codeword() {
        let group = &layers[start..start + nl];
        start += nl;
        let len = group[0].len();
        if group.iter().any(|l| l.len() != len) {
            return Err(domain!("layers of one codeword differ in length"));
        }
        out.push((0..len * nl).map(|i| group[i % nl][i / nl]).collect());
    }
    Ok(out)
}

/// DFT spreading of a single layer in blocks of `m` symbols, unitary.
pub fn transform_precode(layers: &[Vec<Cplx>], m: usize) -> Result<Vec<Cplx>> {
    if layers.len() != 1 {
        return Err(domain!(
            "transform precoding needs exactly one layer, got {}",
            layers.len()
        ));
    }
    blockwise_dft(&layers[0], m, false)
}

pub fn transform_deprecode(symbols: &[Cplx], m: usize) -> Result<Vec<Cplx>> {
    blockwise_dft(symbols, m, true)
}

fn blockwise_dft(x: &[Cplx], m: usize, inverse: bool) -> Result<Vec<Cplx>> {
    if m == 0 || !x.len().is_multiple_of(m) {
        return Err(domain!("{} symbols are not whole blocks of {m}", x.len()));
    }
    let mut out = x.to_vec();
    for blk in out.chunks_exact_mut(m) {
        dft_unitary(blk, inverse);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qpsk_zero_label() {
        let s = modulate(&[0, 0], ModOrder::Qpsk).unwrap()[0];
        assert!((s - Cplx::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2)).norm() < 1e-15);
    }

    #[test]
    fn matches_closed_form_16qam() {
        // (1-2b0)(2-(1-2b2)) + j(1-2b1)(2-(1-2b3)), over sqrt(10)
        for label in 0..16u8 {
            let b: Vec<u8> = (0..4).map(|i| (label >> (3 - i)) & 1).collect();
            let f = |x: u8| 1.0 - 2.0 * f64::from(x);
            let want = Cplx::new(f(b[0]) * (2.0 - f(b[2])), f(b[1]) * (2.0 - f(b[3]))) / 10f64.sqrt();
            assert!((modulate(&b, ModOrder::Qam16).unwrap()[0] - want).norm() < 1e-15);
        }
    }

    #[test]
    fn unit_energy_over_alphabet() {
        for m in ModOrder::ALL {
            let c = m.constellation();
            let e: f64 = c.iter().map(|v| v.norm_sqr()).sum::<f64>() / c.len() as f64;
            assert!((e - 1.0).abs() < 1e-12, "{m:?}");
        }
    }

    #[test]
    fn nearest_neighbours_differ_in_one_bit() {
        for m in ModOrder::ALL {
            let c = m.constellation();
            let dmin = (0..c.len())
                .flat_map(|a| (0..c.len()).filter(move |&b| b != a).map(move |b| (a, b)))
                .map(|(a, b)| (c[a] - c[b]).norm())
                .fold(f64::INFINITY, f64::min);
            for a in 0..c.len() {
                for b in 0..c.len() {
                    if a != b && ((c[a] - c[b]).norm() - dmin).abs() < 1e-9 {
                        assert_eq!((a ^ b).count_ones(), 1, "{m:?} {a} {b}");
                    }
                }
            }
        }
    }

    #[test]
    fn noiseless_hard_decisions() {
        for m in ModOrder::ALL {
            let q = m.bits_per_symbol();
            let bits: Vec<u8> = (0..q * 64).map(|i| ((i * 7 + i / 3) % 2) as u8).collect();
            let s = modulate(&bits, m).unwrap();
            assert_eq!(hard_decision(&soft_demod(&s, m, 0.1)), bits);
        }
        assert!(modulate(&[0, 1, 0], ModOrder::Qpsk).is_err());
        assert_eq!(ModOrder::from_name("16QAM").unwrap(), ModOrder::Qam16);
        assert_eq!(ModOrder::from_name("qam256").unwrap(), ModOrder::Qam256);
        assert!(ModOrder::from_name("qam").is_err());
    }

    #[test]
    fn layer_mapping_rules() {
        let dl = LinkDirection::Downlink;
        let x: Vec<u32> = (0..100).collect();
        let spec = LayerMapSpec::new(1, 4, dl).unwrap();
        let l = layer_map(std::slice::from_ref(&x), &spec).unwrap();
        assert!(l.iter().all(|v| v.len() == 25));
        assert_eq!(layer_demap(&l, &spec).unwrap(), vec![x]);
        assert!(LayerMapSpec::new(2, 2, LinkDirection::Uplink).is_err());
        assert!(LayerMapSpec::new(2, 4, dl).is_err());
        let spec8 = LayerMapSpec::new(2, 8, dl).unwrap();
        assert_eq!(spec8.layers_per_codeword(), vec![4, 4]);
        let cws = vec![(0..40).collect::<Vec<u32>>(), (100..140).collect()];
        let l = layer_map(&cws, &spec8).unwrap();
        assert_eq!(layer_demap(&l, &spec8).unwrap(), cws);
        let spec5 = LayerMapSpec::new(2, 5, dl).unwrap();
        assert_eq!(spec5.layers_per_codeword(), vec![2, 3]);
    }

    #[test]
    fn transform_precoding() {
        let ones = vec![Cplx::new(1.0, 0.0); 12];
        let y = transform_precode(std::slice::from_ref(&ones), 12).unwrap();
        assert!((y[0].norm() - 12f64.sqrt()).abs() < 1e-12);
        assert!(y[1..].iter().all(|v| v.norm() < 1e-12));
        assert!(transform_precode(&[ones.clone(), ones.clone()], 12).is_err());
        let back = transform_deprecode(&y, 12).unwrap();
        assert!(back.iter().zip(&ones).all(|(a, b)| (a - b).norm() < 1e-12));
    }
}
