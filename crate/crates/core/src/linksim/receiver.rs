//! DMRS-based channel estimation, linear MIMO equalization and PTRS
//! common-phase-error correction.

use nalgebra::{DMatrix, DVector};

use crate::error::{domain, Result};
use crate::refsignals::dmrs::{dmrs_port_params, DmrsMapping, DmrsSequenceMode};
use crate::Cplx;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Equalizer {
    #[default]
    Zf,
    Mmse,
}

impl Equalizer {
    pub fn from_name(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "zf" => Ok(Self::Zf),
            "mmse" => Ok(Self::Mmse),
            _ => Err(domain!("unknown equalizer `{name}`")),
        }
    }
}

/// Channel estimate `h[rx][port][occasion][subcarrier - first]` over the
/// allocation bandwidth, one entry per DMRS occasion.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEstimate {
    pub first_subcarrier: usize,
    /// First symbol of each DMRS occasion.
    pub occasions: Vec<usize>,
    pub h: Vec<Vec<Vec<Vec<Cplx>>>>,
}

impl ChannelEstimate {
    pub fn num_rx(&self) -> usize {
        self.h.len()
    }

    pub fn num_ports(&self) -> usize {
        self.h.first().map_or(0, Vec::len)
    }

    /// Occasion closest in time to `symbol`; ties go to the earlier one.
    pub fn nearest_occasion(&self, symbol: usize) -> usize {
        let mut best = 0;
        for (i, &l) in self.occasions.iter().enumerate() {
            if l.abs_diff(symbol) < self.occasions[best].abs_diff(symbol) {
                best = i;
            }
        }
        best
    }

    /// Channel matrix (rx x port) at subcarrier `k` for data symbol `l`.
    pub fn matrix(&self, k: usize, l: usize) -> DMatrix<Cplx> {
        let o = self.nearest_occasion(l);
        let i = k - self.first_subcarrier;
        DMatrix::from_fn(self.num_rx(), self.num_ports(), |r, p| self.h[r][p][o][i])
    }
}

/// Linear interpolation of samples at sorted positions `xs` onto `0..len`,
/// holding the end values outside the sampled range.
pub fn interpolate_linear(xs: &[f64], ys: &[Cplx], len: usize) -> Vec<Cplx> {
    if xs.is_empty() {
        return vec![Cplx::new(0.0, 0.0); len];
    }
    let mut j = 0;
    (0..len)
        .map(|k| {
            let x = k as f64;
            if x <= xs[0] {
                return ys[0];
            }
            if x >= xs[xs.len() - 1] {
                return ys[ys.len() - 1];
            }
            while xs[j + 1] < x {
                j += 1;
            }
            let t = (x - xs[j]) / (xs[j + 1] - xs[j]);
            ys[j] * (1.0 - t) + ys[j + 1] * t
        })
        .collect()
}

/// Least-squares estimate at the DMRS REs, despread over the frequency (and
/// time) cover of each CDM pair, then interpolated across the allocation.
/// `rx[r][l][k]` is the received grid of antenna `r`.
pub fn estimate_channel(rx: &[Vec<Vec<Cplx>>], dmrs: &DmrsMapping) -> Result<ChannelEstimate> {
    let nf = dmrs.cfg.num_front_symbols;
    let first = dmrs.alloc.subcarriers().start;
    let width = dmrs.alloc.subcarriers().len();
    let occasions: Vec<usize> = dmrs.symbols.chunks(nf).map(|c| c[0]).collect();
    let low_papr = dmrs.cfg.sequence_mode == DmrsSequenceMode::ZcLowPapr;
    let mut h = Vec::with_capacity(rx.len());
    for grid in rx {
        let mut per_port = Vec::with_capacity(dmrs.ports.len());
        for (p, res) in dmrs.ports.iter().enumerate() {
            let mut per_occ = Vec::with_capacity(occasions.len());
            for &l0 in &occasions {
                // group the port's pilots of this occasion by CDM pair
                let mut xs = Vec::new();
                let mut ys = Vec::new();
                let pilots: Vec<&(usize, usize, Cplx)> =
                    res.iter().filter(|&&(_, l, _)| l >= l0 && l < l0 + nf).collect();
                if low_papr {
                    for &&(k, l, x) in &pilots {
                        let y = *grid
                            .get(l)
                            .and_then(|row| row.get(k))
                            .ok_or_else(|| domain!("short grid"))?;
                        xs.push((k - first) as f64);
                        ys.push(y * x.conj() / x.norm_sqr());
                    }
                } else {
                    let group = dmrs_port_params(p).cdm_group;
                    let mut pairs: std::collections::BTreeMap<usize, (Cplx, usize)> = Default::default();
                    for &&(k, l, x) in &pilots {
                        let y = *grid
                            .get(l)
                            .and_then(|row| row.get(k))
                            .ok_or_else(|| domain!("short grid"))?;
                        let e = pairs.entry(k / 6).or_insert((Cplx::new(0.0, 0.0), 0));
                        e.0 += y * x.conj() / x.norm_sqr();
                        e.1 += 1;
                    }
                    for (n, (acc, cnt)) in pairs {
                        xs.push((6 * n + 2 * group) as f64 + 0.5 - first as f64);
                        ys.push(acc / cnt as f64);
                    }
                }
                per_occ.push(interpolate_linear(&xs, &ys, width));
            }
            per_port.push(per_occ);
        }
        h.push(per_port);
    }
    Ok(ChannelEstimate {
        first_subcarrier: first,
        occasions,
        h,
    })
}

/// Equalizes one received vector. Returns per-layer estimates and the
/// post-equalization noise variances.
pub fn equalize(h: &DMatrix<Cplx>, y: &DVector<Cplx>, noise_var: f64, eq: Equalizer) -> (Vec<Cplx>, Vec<f64>) {
    let nl = h.ncols();
    let hh = h.adjoint();
    let gram = &hh * h;
    let reg = match eq {
        Equalizer::Mmse => noise_var,
        Equalizer::Zf => 0.0,
    };
    let a = &gram + DMatrix::<Cplx>::identity(nl, nl) * Cplx::new(reg, 0.0);
    let Some(inv) = a.try_inverse() else {
        return (vec![Cplx::new(0.0, 0.0); nl], vec![f64::INFINITY; nl]);
    };
    let w = &inv * &hh;
    let x = &w * y;
    let mut out = Vec::with_capacity(nl);
    let mut var = Vec::with_capacity(nl);
    for i in 0..nl {
        // scale MMSE outputs back to unit gain so LLR scaling stays unbiased
        let gain = (w.row(i) * h.column(i))[(0, 0)];
        let g = if gain.norm() > 0.0 { gain } else { Cplx::new(1.0, 0.0) };
        out.push(x[i] / g);
        let wn: f64 = w.row(i).iter().map(|v| v.norm_sqr()).sum();
        let interference: f64 = (0..nl)
            .filter(|&j| j != i)
            .map(|j| (w.row(i) * h.column(j))[(0, 0)].norm_sqr())
            .sum();
        var.push(((wn * noise_var + interference) / g.norm_sqr()).max(1e-12));
    }
    (out, var)
}

/// Common phase error of one symbol from PTRS REs `(k, reference)` where the
/// reference already includes the channel: `arg sum y * conj(ref)`.
pub fn common_phase_error(row: &[Cplx], ptrs: &[(usize, Cplx)]) -> f64 {
    let c: Cplx = ptrs.iter().map(|&(k, r)| row[k] * r.conj()).sum();
    c.arg()
}
