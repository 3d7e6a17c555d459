//! Random-access preambles: Zadoff-Chu sequences in long (839) and short
//! (139) formats, and a frequency-domain correlation detector.

use std::sync::OnceLock;

use crate::dsp::{dft, dft_unitary};
use crate::error::{domain, Result};
use crate::sequences::zadoff_chu;
use crate::Cplx;

pub const LONG_SEQ_LEN: usize = 839;
pub const SHORT_SEQ_LEN: usize = 139;
/// FFT sizes used to synthesize the two families.
pub const LONG_FFT: usize = 1536;
pub const SHORT_FFT: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrachKind {
    Long,
    Short,
}

/// One row of the format table as stored on disk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrachFormatSpec {
    pub name: String,
    pub kind: PrachKind,
    pub seq_len: usize,
    /// 0 for short formats, whose spacing follows the numerology.
    pub scs_hz: u32,
    pub repetitions: usize,
    pub symbol_len: u64,
    pub cp_len: u64,
}

pub fn parse_prach_formats(text: &str) -> Result<Vec<PrachFormatSpec>> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            let t: Vec<&str> = l.split_whitespace().collect();
            let [name, kind, seq_len, scs, reps, sym, cp] = t[..] else {
                return Err(domain!("PRACH format line needs 7 columns: `{l}`"));
            };
            let num = |s: &str| {
                s.parse::<u64>()
                    .map_err(|e| domain!("bad PRACH table value `{s}`: {e}"))
            };
            let kind = match kind {
                "long" => PrachKind::Long,
                "short" => PrachKind::Short,
                other => return Err(domain!("unknown PRACH kind `{other}`")),
            };
            Ok(PrachFormatSpec {
                name: name.to_owned(),
                kind,
                seq_len: num(seq_len)? as usize,
                scs_hz: num(scs)? as u32,
                repetitions: num(reps)? as usize,
                symbol_len: num(sym)?,
                cp_len: num(cp)?,
            })
        })
        .collect()
}

pub fn prach_format_table() -> &'static [PrachFormatSpec] {
    static TABLE: OnceLock<Vec<PrachFormatSpec>> = OnceLock::new();
    TABLE
        .get_or_init(|| parse_prach_formats(include_str!("../../data/prach_formats.txt")).expect("bundled PRACH table"))
}

/// A format resolved to sample counts at `fft_size * scs_hz`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrachFormat {
    pub name: String,
    pub kind: PrachKind,
    pub seq_len: usize,
    pub scs_hz: f64,
    pub num_repetitions: usize,
    pub fft_size: usize,
    pub cp_samples: usize,
}

impl PrachFormat {
    /// Looks up `name`; short formats use `scs_khz` (15, 30, 60 or 120),
    /// long formats ignore it.
    pub fn new(name: &str, scs_khz: u32) -> Result<Self> {
        let spec = prach_format_table()
            .iter()
            .find(|f| f.name.eq_ignore_ascii_case(name))
            .ok_or_else(|| domain!("unknown PRACH format `{name}`"))?;
        let (scs_hz, fft_size) = match spec.kind {
            PrachKind::Long => (f64::from(spec.scs_hz), LONG_FFT),
            PrachKind::Short => {
                if ![15, 30, 60, 120].contains(&scs_khz) {
                    return Err(domain!("short PRACH formats use 15/30/60/120 kHz, got {scs_khz}"));
                }
                (f64::from(scs_khz) * 1e3, SHORT_FFT)
            }
        };
        let scaled = spec.cp_len * fft_size as u64;
        if !scaled.is_multiple_of(spec.symbol_len) {
            return Err(domain!("format {name} has a fractional CP at FFT size {fft_size}"));
        }
        Ok(Self {
            name: spec.name.clone(),
            kind: spec.kind,
            seq_len: spec.seq_len,
            scs_hz,
            num_repetitions: spec.repetitions,
            fft_size,
            cp_samples: (scaled / spec.symbol_len) as usize,
        })
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.fft_size as f64 * self.scs_hz
    }

    pub fn symbol_duration_s(&self) -> f64 {
        1.0 / self.scs_hz
    }

    /// CP plus all repetitions.
    pub fn num_samples(&self) -> usize {
        self.cp_samples + self.num_repetitions * self.fft_size
    }

    fn bin(&self, k: usize) -> usize {
        (k + self.fft_size - self.seq_len / 2) % self.fft_size
    }
}

/// Frequency-domain preamble: unit-modulus DFT of the cyclically shifted root.
pub fn prach_frequency_sequence(seq_len: usize, root_u: u64, cyclic_shift: usize) -> Result<Vec<Cplx>> {
    let mut x = zadoff_chu(root_u, seq_len, cyclic_shift)?;
    dft_unitary(&mut x, false);
    Ok(x)
}

pub fn generate_prach(fmt: &PrachFormat, root_u: u64, cyclic_shift: usize) -> Result<Vec<Cplx>> {
    let freq = prach_frequency_sequence(fmt.seq_len, root_u, cyclic_shift)?;
    let mut sym = vec![Cplx::new(0.0, 0.0); fmt.fft_size];
    for (k, v) in freq.into_iter().enumerate() {
        sym[fmt.bin(k)] = v;
    }
    dft_unitary(&mut sym, true);
    let mut out = Vec::with_capacity(fmt.num_samples());
    out.extend_from_slice(&sym[fmt.fft_size - fmt.cp_samples % fmt.fft_size..]);
    for _ in 0..fmt.cp_samples / fmt.fft_size {
        out.extend_from_slice(&sym);
    }
    for _ in 0..fmt.num_repetitions {
        out.extend_from_slice(&sym);
    }
    Ok(out)
}

/// Cyclic-shift zoning of one root.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrachZoneConfig {
    pub n_cs: usize,
    /// Detection threshold in units of the pure-noise metric mean.
    pub threshold_scale: f64,
    /// Trailing part of each zone (in sequence samples) left unsearched so a
    /// strong preamble cannot leak into the zone before it.
    pub guard: usize,
}

impl Default for PrachZoneConfig {
    fn default() -> Self {
        Self {
            n_cs: 13,
            threshold_scale: PRACH_THRESHOLD_SCALE,
            guard: 3,
        }
    }
}

/// Calibrated on pure noise: the metric is exponential with mean
/// `1/(reps * seq_len)`, and e^-16 per cell keeps the false alarm rate under
/// 0.1% over every zone of a 1536-point search.
pub const PRACH_THRESHOLD_SCALE: f64 = 16.0;

impl PrachZoneConfig {
    pub fn num_preambles(&self, seq_len: usize) -> usize {
        if self.n_cs == 0 {
            1
        } else {
            seq_len / self.n_cs
        }
    }

    pub fn cyclic_shift(&self, preamble: usize) -> usize {
        preamble * self.n_cs
    }

    /// Largest timing advance (in samples) detectable without ambiguity.
    pub fn max_delay_samples(&self, fmt: &PrachFormat) -> usize {
        let span = if self.n_cs == 0 { fmt.seq_len } else { self.n_cs };
        ((span.saturating_sub(self.guard)) * fmt.fft_size / fmt.seq_len).saturating_sub(1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrachDetection {
    pub preamble_index: usize,
    pub timing_advance_samples: usize,
    pub metric: f64,
}

/// Correlation profile over the delay axis: `|z[n]|^2` normalized so that a
/// lone noiseless preamble scores 1.
pub fn prach_profile(iq: &[Cplx], fmt: &PrachFormat, root_u: u64) -> Result<Vec<f64>> {
    if iq.len() < fmt.num_samples() {
        return Err(domain!(
            "{} samples do not span the {}-sample occasion",
            iq.len(),
            fmt.num_samples()
        ));
    }
    let x = prach_frequency_sequence(fmt.seq_len, root_u, 0)?;
    let mut z_freq = vec![Cplx::new(0.0, 0.0); fmt.seq_len];
    let mut energy = 0.0;
    for r in 0..fmt.num_repetitions {
        let start = fmt.cp_samples + r * fmt.fft_size;
        let mut buf = iq[start..start + fmt.fft_size].to_vec();
        dft_unitary(&mut buf, false);
        for (k, z) in z_freq.iter_mut().enumerate() {
            let y = buf[fmt.bin(k)];
            energy += y.norm_sqr();
            *z += y * x[k].conj();
        }
    }
    let mut z = vec![Cplx::new(0.0, 0.0); fmt.fft_size];
    z[..fmt.seq_len].copy_from_slice(&z_freq);
    dft(&mut z, true);
    let norm = (fmt.num_repetitions * fmt.seq_len) as f64 * energy;
    Ok(z.iter()
        .map(|v| if norm > 0.0 { v.norm_sqr() / norm } else { 0.0 })
        .collect())
}

/// Detects preambles of root `root_u`; results are ordered by preamble index.
pub fn detect_prach(
    iq: &[Cplx],
    fmt: &PrachFormat,
    root_u: u64,
    zone: &PrachZoneConfig,
) -> Result<Vec<PrachDetection>> {
    let p = prach_profile(iq, fmt, root_u)?;
    let n = fmt.fft_size as f64;
    let ratio = n / fmt.seq_len as f64;
    let threshold = zone.threshold_scale / (fmt.num_repetitions * fmt.seq_len) as f64;
    let span = zone.max_delay_samples(fmt) as f64 + 1.0;
    let mut out = Vec::new();
    for v in 0..zone.num_preambles(fmt.seq_len) {
        let origin = (-(zone.cyclic_shift(v) as f64) * ratio).rem_euclid(n);
        let first = (origin - 0.5).ceil() as i64;
        let last = (origin + span - 0.5).ceil() as i64;
        let Some((idx, metric)) = (first..last)
            .map(|i| {
                let j = i.rem_euclid(fmt.fft_size as i64) as usize;
                (i, p[j])
            })
            .fold(None, |best: Option<(i64, f64)>, cur| match best {
                Some(b) if b.1 >= cur.1 => Some(b),
                _ => Some(cur),
            })
        else {
            continue;
        };
        if metric < threshold {
            continue;
        }
        let at = |i: i64| p[i.rem_euclid(fmt.fft_size as i64) as usize].sqrt();
        let (a, b, c) = (at(idx - 1), at(idx), at(idx + 1));
        let denom = a - 2.0 * b + c;
        let frac = if denom.abs() > 1e-15 {
            (0.5 * (a - c) / denom).clamp(-0.5, 0.5)
        } else {
            0.0
        };
        let ta = (idx as f64 + frac - origin).round().max(0.0) as usize;
        out.push(PrachDetection {
            preamble_index: v,
            timing_advance_samples: ta,
            metric,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn delayed(x: &[Cplx], d: usize) -> Vec<Cplx> {
        let mut out = vec![Cplx::new(0.0, 0.0); d];
        out.extend_from_slice(x);
        out.truncate(x.len());
        out
    }

    #[test]
    fn table_counts() {
        let t = prach_format_table();
        assert_eq!(t.iter().filter(|f| f.kind == PrachKind::Long).count(), 4);
        assert_eq!(t.iter().filter(|f| f.kind == PrachKind::Short).count(), 9);
        for f in t {
            PrachFormat::new(&f.name, 30).unwrap();
        }
    }

    #[test]
    fn short_symbol_matches_data_symbol() {
        let f = PrachFormat::new("B4", 30).unwrap();
        assert_eq!(f.symbol_duration_s(), 1.0 / 30e3);
        let x = generate_prach(&f, 1, 0).unwrap();
        assert_eq!(x.len(), f.cp_samples + 12 * 256);
    }

    #[test]
    fn frequency_samples_are_unit_modulus() {
        let y = prach_frequency_sequence(LONG_SEQ_LEN, 129, 26).unwrap();
        assert!(y.iter().all(|v| (v.norm() - 1.0).abs() < 1e-9));
        assert!(prach_frequency_sequence(LONG_SEQ_LEN, 839, 0).is_err());
    }

    #[test]
    fn loopback_index_and_delay() {
        let zone = PrachZoneConfig::default();
        for name in ["0", "A1"] {
            let f = PrachFormat::new(name, 15).unwrap();
            for (pre, d) in [(0, 0), (3, 0), (5, 7), (9, zone.max_delay_samples(&f))] {
                let x = generate_prach(&f, 25, zone.cyclic_shift(pre)).unwrap();
                let det = detect_prach(&delayed(&x, d), &f, 25, &zone).unwrap();
                assert_eq!(det.len(), 1, "{name} {pre} {d}: {det:?}");
                assert_eq!(det[0].preamble_index, pre);
                assert_eq!(det[0].timing_advance_samples, d, "{name} {pre}");
            }
        }
    }

    #[test]
    fn two_preambles_are_both_found() {
        let zone = PrachZoneConfig::default();
        let f = PrachFormat::new("A2", 30).unwrap();
        let a = generate_prach(&f, 7, zone.cyclic_shift(2)).unwrap();
        let b = delayed(&generate_prach(&f, 7, zone.cyclic_shift(6)).unwrap(), 4);
        let sum: Vec<Cplx> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        let det = detect_prach(&sum, &f, 7, &zone).unwrap();
        let found: Vec<(usize, usize)> = det
            .iter()
            .map(|d| (d.preamble_index, d.timing_advance_samples))
            .collect();
        assert_eq!(found, vec![(2, 0), (6, 4)]);
    }
}
