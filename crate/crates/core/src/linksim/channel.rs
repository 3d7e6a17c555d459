//! AWGN channel with carrier frequency offset, integer delay, optional Wiener
//! phase noise and a flat MIMO mixing matrix.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::dsp::{db_to_linear, mean_power};
use crate::error::{domain, Result};
use crate::Cplx;

/// Independent random stream for trial `trial` of a run seeded with `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

pub fn complex_gaussian<R: Rng>(rng: &mut R, variance: f64) -> Cplx {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Cplx::new(re * s, im * s)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelConfig {
    /// `f64::INFINITY` disables noise.
    pub snr_db: f64,
    pub cfo_hz: f64,
    pub delay_samples: usize,
    pub seed: u64,
    /// Signal power the SNR refers to; measured from the input when `None`.
    pub reference_power: Option<f64>,
    /// Variance of the per-sample phase increment, in rad^2.
    pub phase_noise_var: f64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            snr_db: f64::INFINITY,
            cfo_hz: 0.0,
            delay_samples: 0,
            seed: 0,
            reference_power: None,
            phase_noise_var: 0.0,
        }
    }
}

impl ChannelConfig {
    pub fn noise_var(&self, signal_power: f64) -> f64 {
        if self.snr_db.is_infinite() && self.snr_db > 0.0 {
            0.0
        } else {
            self.reference_power.unwrap_or(signal_power) / db_to_linear(self.snr_db)
        }
    }
}

/// Applies delay, CFO, phase noise and AWGN drawn from `rng`. The output is
/// `delay_samples` longer than the input.
pub fn channel_apply_with<R: Rng>(samples: &[Cplx], ch: &ChannelConfig, sample_rate_hz: f64, rng: &mut R) -> Vec<Cplx> {
    let noise_var = ch.noise_var(mean_power(samples));
    let mut out = vec![Cplx::new(0.0, 0.0); ch.delay_samples];
    out.extend_from_slice(samples);
    let mut phase = 0.0f64;
    let pn_std = ch.phase_noise_var.sqrt();
    for (n, v) in out.iter_mut().enumerate() {
        if ch.cfo_hz != 0.0 {
            *v *= Cplx::from_polar(1.0, 2.0 * PI * ch.cfo_hz * n as f64 / sample_rate_hz);
        }
        if pn_std > 0.0 {
            let step: f64 = rng.sample(StandardNormal);
            phase += pn_std * step;
            *v *= Cplx::from_polar(1.0, phase);
        }
        if noise_var > 0.0 {
            *v += complex_gaussian(rng, noise_var);
        }
    }
    out
}

/// [`channel_apply_with`] on a stream seeded from `ch.seed`.
pub fn channel_apply(samples: &[Cplx], ch: &ChannelConfig, sample_rate_hz: f64) -> Vec<Cplx> {
    channel_apply_with(samples, ch, sample_rate_hz, &mut trial_rng(ch.seed, 0))
}

/// Flat `rx x tx` propagation matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MimoChannel {
    pub h: DMatrix<Cplx>,
}

impl MimoChannel {
    pub fn identity(n: usize) -> Self {
        Self {
            h: DMatrix::identity(n, n),
        }
    }

    /// Haar-distributed unitary matrix: the Q factor of a complex Gaussian
    /// matrix with the phases of R's diagonal removed.
    pub fn random_unitary<R: Rng>(n: usize, rng: &mut R) -> Self {
        let g = DMatrix::from_fn(n, n, |_, _| complex_gaussian(rng, 1.0));
        let qr = g.qr();
        let (q, r) = (qr.q(), qr.r());
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(n, |i, _| {
            let v = r[(i, i)];
            if v.norm() > 0.0 {
                v / v.norm()
            } else {
                Cplx::new(1.0, 0.0)
            }
        }));
        Self { h: q * d }
    }

    pub fn num_rx(&self) -> usize {
        self.h.nrows()
    }

    pub fn num_tx(&self) -> usize {
        self.h.ncols()
    }

    /// Mixes per-port sample streams into per-antenna streams.
    pub fn apply(&self, tx: &[Vec<Cplx>]) -> Result<Vec<Vec<Cplx>>> {
        if tx.len() != self.num_tx() {
            return Err(domain!(
                "{} transmit streams for a {}-input channel",
                tx.len(),
                self.num_tx()
            ));
        }
        let len = tx.iter().map(Vec::len).max().unwrap_or(0);
        Ok((0..self.num_rx())
            .map(|r| {
                (0..len)
                    .map(|n| {
                        tx.iter()
                            .enumerate()
                            .map(|(t, s)| self.h[(r, t)] * s.get(n).copied().unwrap_or_default())
                            .sum()
                    })
                    .collect()
            })
            .collect())
    }
}
