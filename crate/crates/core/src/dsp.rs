//! FFT helpers and waveform statistics.

use std::cell::RefCell;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::Cplx;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

pub fn fft_plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(len)
        } else {
            p.plan_fft_forward(len)
        }
    })
}

/// In-place DFT scaled by `1/sqrt(len)`.
pub fn dft_unitary(buf: &mut [Cplx], inverse: bool) {
    if buf.is_empty() {
        return;
    }
    fft_plan(buf.len(), inverse).process(buf);
    let s = 1.0 / (buf.len() as f64).sqrt();
    buf.iter_mut().for_each(|v| *v *= s);
}

/// Unscaled in-place DFT.
pub fn dft(buf: &mut [Cplx], inverse: bool) {
    if !buf.is_empty() {
        fft_plan(buf.len(), inverse).process(buf);
    }
}

pub fn energy(x: &[Cplx]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum()
}

pub fn mean_power(x: &[Cplx]) -> f64 {
    if x.is_empty() {
        0.0
    } else {
        energy(x) / x.len() as f64
    }
}

/// Peak-to-average power ratio in dB.
pub fn papr_db(x: &[Cplx]) -> f64 {
    let peak = x.iter().map(|v| v.norm_sqr()).fold(0.0, f64::max);
    10.0 * (peak / mean_power(x)).log10()
}

/// Value below which a fraction `q` of the samples lie (nearest rank).
pub fn percentile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let idx = ((q * v.len() as f64).ceil() as usize).clamp(1, v.len()) - 1;
    v[idx]
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// `c[t] = sum_n x[t + n] conj(h[n])` for every lag where `h` fits inside `x`,
/// computed with one FFT pair.
pub fn cross_correlate(x: &[Cplx], h: &[Cplx]) -> Vec<Cplx> {
    if h.is_empty() || x.len() < h.len() {
        return Vec::new();
    }
    let m = (x.len() + h.len()).next_power_of_two();
    let mut a = x.to_vec();
    a.resize(m, Cplx::new(0.0, 0.0));
    let mut b = h.to_vec();
    b.resize(m, Cplx::new(0.0, 0.0));
    dft(&mut a, false);
    dft(&mut b, false);
    for (u, v) in a.iter_mut().zip(&b) {
        *u *= v.conj() / m as f64;
    }
    dft(&mut a, true);
    a.truncate(x.len() - h.len() + 1);
    a
}

/// Energy of every length-`w` window of `x`, one entry per start position.
pub fn sliding_energy(x: &[Cplx], w: usize) -> Vec<f64> {
    if w == 0 || x.len() < w {
        return Vec::new();
    }
    let mut prefix = Vec::with_capacity(x.len() + 1);
    prefix.push(0.0);
    for v in x {
        prefix.push(prefix.last().unwrap() + v.norm_sqr());
    }
    (0..=x.len() - w)
        .map(|t| (prefix[t + w] - prefix[t]).max(0.0))
        .collect()
}
