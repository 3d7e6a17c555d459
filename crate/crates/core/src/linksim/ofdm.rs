//! CP-OFDM modulation and demodulation of resource grids.
//!
//! Grid subcarrier `k` of `N` maps to FFT bin `(k - N/2) mod fft_size`, so the
//! carrier is centred on DC. Transforms are unitary.

use crate::dsp::dft_unitary;
use crate::error::{domain, Result};
use crate::numerology::{Numerology, ResourceGrid};
use crate::Cplx;

#[derive(Debug, Clone, PartialEq)]
pub struct OfdmConfig {
    pub fft_size: usize,
    pub num_subcarriers: usize,
    pub scs_hz: f64,
    /// CP length in samples for every symbol of one subframe.
    pub cp_samples: Vec<usize>,
    /// Position of grid symbol 0 inside the subframe.
    pub first_symbol: usize,
}

/// Smallest power of two holding 1.2x the active subcarriers, at least 128.
pub fn default_fft_size(num_subcarriers: usize) -> usize {
    ((num_subcarriers as f64 * 1.2).ceil() as usize)
        .next_power_of_two()
        .max(128)
}

impl OfdmConfig {
    pub fn new(num: &Numerology, num_subcarriers: usize) -> Result<Self> {
        Self::with_fft_size(num, num_subcarriers, default_fft_size(num_subcarriers))
    }

    pub fn with_fft_size(num: &Numerology, num_subcarriers: usize, fft_size: usize) -> Result<Self> {
        if num_subcarriers == 0 || fft_size < num_subcarriers {
            return Err(domain!("FFT size {fft_size} cannot hold {num_subcarriers} subcarriers"));
        }
        let useful = num.symbol_len_tc();
        let cp_samples = (0..num.symbols_per_subframe())
            .map(|l| {
                let scaled = num.cp_len_tc(l) * fft_size as u64;
                if !scaled.is_multiple_of(useful) {
                    return Err(domain!("FFT size {fft_size} gives a fractional cyclic prefix"));
                }
                Ok((scaled / useful) as usize)
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            fft_size,
            num_subcarriers,
            scs_hz: num.scs_hz(),
            cp_samples,
            first_symbol: 0,
        })
    }

    pub fn starting_at(mut self, first_symbol: usize) -> Self {
        self.first_symbol = first_symbol;
        self
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.fft_size as f64 * self.scs_hz
    }

    /// CP of grid symbol `l`.
    pub fn cp_len(&self, l: usize) -> usize {
        self.cp_samples[(self.first_symbol + l) % self.cp_samples.len()]
    }

    /// First sample (start of CP) of grid symbol `l`.
    pub fn symbol_start(&self, l: usize) -> usize {
        (0..l).map(|i| self.cp_len(i) + self.fft_size).sum()
    }

    pub fn num_samples(&self, num_symbols: usize) -> usize {
        self.symbol_start(num_symbols)
    }

    pub fn bin(&self, k: usize) -> usize {
        (k + self.fft_size - self.num_subcarriers / 2) % self.fft_size
    }

    /// One symbol with its CP prepended.
    pub fn modulate_symbol(&self, freq: &[Cplx], l: usize) -> Vec<Cplx> {
        let mut buf = vec![Cplx::new(0.0, 0.0); self.fft_size];
        for (k, &v) in freq.iter().enumerate() {
            buf[self.bin(k)] = v;
        }
        dft_unitary(&mut buf, true);
        let cp = self.cp_len(l);
        let mut out = Vec::with_capacity(cp + self.fft_size);
        out.extend_from_slice(&buf[self.fft_size - cp..]);
        out.extend_from_slice(&buf);
        out
    }

    /// Active subcarriers of one CP-free symbol of `fft_size` samples.
    pub fn demodulate_symbol(&self, time: &[Cplx]) -> Vec<Cplx> {
        let mut buf = time[..self.fft_size].to_vec();
        dft_unitary(&mut buf, false);
        (0..self.num_subcarriers).map(|k| buf[self.bin(k)]).collect()
    }
}

pub fn ofdm_modulate_port(grid: &ResourceGrid, port: usize, cfg: &OfdmConfig) -> Result<Vec<Cplx>> {
    if grid.num_subcarriers() != cfg.num_subcarriers || port >= grid.num_ports() {
        return Err(domain!(
            "grid with {} subcarriers / {} ports does not match OFDM config ({} subcarriers, port {port})",
            grid.num_subcarriers(),
            grid.num_ports(),
            cfg.num_subcarriers
        ));
    }
    let mut out = Vec::with_capacity(cfg.num_samples(grid.num_symbols()));
    for l in 0..grid.num_symbols() {
        out.extend(cfg.modulate_symbol(grid.symbol(port, l), l));
    }
    Ok(out)
}

/// Time samples for every port of `grid`.
pub fn ofdm_modulate(grid: &ResourceGrid, cfg: &OfdmConfig) -> Result<Vec<Vec<Cplx>>> {
    (0..grid.num_ports())
        .map(|p| ofdm_modulate_port(grid, p, cfg))
        .collect()
}

/// Recovers `num_symbols` symbols as `[symbol][subcarrier]`.
pub fn ofdm_demodulate(samples: &[Cplx], cfg: &OfdmConfig, num_symbols: usize) -> Result<Vec<Vec<Cplx>>> {
    let need = cfg.num_samples(num_symbols);
    if samples.len() < need {
        return Err(domain!(
            "{} samples cannot hold {num_symbols} symbols ({need} needed)",
            samples.len()
        ));
    }
    Ok((0..num_symbols)
        .map(|l| {
            let start = cfg.symbol_start(l) + cfg.cp_len(l);
            cfg.demodulate_symbol(&samples[start..start + cfg.fft_size])
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cp_lengths_follow_numerology() {
        let cfg = OfdmConfig::new(&Numerology::new(0).unwrap(), 600).unwrap();
        assert_eq!(cfg.fft_size, 1024);
        assert_eq!(cfg.cp_samples[0], 80);
        assert_eq!(cfg.cp_samples[1], 72);
        assert_eq!(cfg.cp_samples[7], 80);
        assert_eq!(cfg.num_samples(14), 15360);
        assert!(OfdmConfig::with_fft_size(&Numerology::new(0).unwrap(), 12, 100).is_err());
    }

    #[test]
    fn single_tone_is_an_exponential() {
        let num = Numerology::new(1).unwrap();
        let mut grid = ResourceGrid::new(1, 1, 1).unwrap();
        grid.map_res(0, &[(9, 0, Cplx::new(1.0, 0.0))], "tone").unwrap();
        let cfg = OfdmConfig::new(&num, 12).unwrap();
        let x = ofdm_modulate_port(&grid, 0, &cfg).unwrap();
        let f = 9.0 - 6.0;
        let cp = cfg.cp_len(0);
        for (n, v) in x[cp..].iter().enumerate() {
            let expect = Cplx::from_polar(
                1.0 / (cfg.fft_size as f64).sqrt(),
                2.0 * std::f64::consts::PI * f * n as f64 / cfg.fft_size as f64,
            );
            assert!((v - expect).norm() < 1e-12);
        }
    }
}
