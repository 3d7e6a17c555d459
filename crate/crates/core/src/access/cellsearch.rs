//! Cell search: PSS timing and frequency acquisition, SSS identity detection,
//! then SSB index and PBCH recovery.

use std::f64::consts::PI;

use super::burst::{burst_positions, SsbConfig};
use super::ssb::{build_ssb, pbch_decode, pbch_dmrs, pbch_res, ssb_ofdm_config, SSB_SUBCARRIERS, SYNC_START};
use crate::dsp::{cross_correlate, dft_unitary, sliding_energy};
use crate::error::{domain, Result};
use crate::numerology::{Numerology, SYMBOLS_PER_SLOT};
use crate::par::map_range;
use crate::sequences::{pss_sequence, sss_sequence, CellId, NUM_NID1, PSS_LEN};
use crate::Cplx;

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    /// Capture sample rate divided by the subcarrier spacing.
    pub fft_size: usize,
    /// Integer carrier offsets (in subcarriers) searched on top of the
    /// fractional estimate.
    pub cfo_hypotheses: Vec<i32>,
    /// Candidate SSB centres relative to DC, in subcarriers.
    pub raster_offsets: Vec<i32>,
    pub pss_threshold: f64,
    pub sss_threshold: f64,
    pub decode_pbch: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            fft_size: 256,
            cfo_hypotheses: vec![0],
            raster_offsets: vec![0],
            pss_threshold: PSS_THRESHOLD,
            sss_threshold: SSS_THRESHOLD,
            decode_pbch: true,
        }
    }
}

/// Normalized PSS correlation threshold from a pure-noise calibration at a
/// 0.1% false-alarm target (256-point FFT, captures up to one 20 ms period).
pub const PSS_THRESHOLD: f64 = 0.1;
pub const SSS_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct CellSearchResult {
    pub pci: CellId,
    /// First sample of the PSS symbol's cyclic prefix.
    pub timing_offset_samples: usize,
    pub cfo_hz: f64,
    /// Normalized PSS correlation, in [0, 1].
    pub metric: f64,
    pub sss_metric: f64,
    /// `ssb_index mod 8` from the PBCH DMRS, when decoded.
    pub ssb_index: Option<usize>,
    pub pbch_payload: Option<Vec<u8>>,
}

struct PssPeak {
    nid2: u8,
    cfo_int: i32,
    raster: i32,
    lag: usize,
    metric: f64,
    replica: Vec<Cplx>,
}

fn bin(k: i64, fft: usize) -> usize {
    k.rem_euclid(fft as i64) as usize
}

fn pss_replica(nid2: u8, shift_sc: i64, fft: usize) -> Vec<Cplx> {
    let seq = pss_sequence(nid2).expect("nid2 in range");
    let mut buf = vec![Cplx::new(0.0, 0.0); fft];
    let centre = (SSB_SUBCARRIERS / 2) as i64;
    for (i, v) in seq.into_iter().enumerate() {
        buf[bin((SYNC_START + i) as i64 - centre + shift_sc, fft)] = v;
    }
    dft_unitary(&mut buf, true);
    buf
}

/// Best PSS correlation peak of one (nid2, cfo, raster) hypothesis.
fn pss_peak(
    iq: &[Cplx],
    energy: &[f64],
    nid2: u8,
    cfo_int: i32,
    raster: i32,
    lags: std::ops::Range<usize>,
    fft: usize,
) -> PssPeak {
    let replica = pss_replica(nid2, i64::from(cfo_int) + i64::from(raster), fft);
    let e_p: f64 = replica.iter().map(|v| v.norm_sqr()).sum();
    let corr = cross_correlate(iq, &replica);
    let (lag, metric) = lags
        .map(|t| {
            let e = energy[t];
            let m = if e > 0.0 { corr[t].norm_sqr() / (e_p * e) } else { 0.0 };
            (t, m)
        })
        .fold((0, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
    PssPeak {
        nid2,
        cfo_int,
        raster,
        lag,
        metric,
        replica,
    }
}

/// Runs the full search over `iq` sampled at `fft_size * scs`.
pub fn cell_search(iq: &[Cplx], scs_khz: u32, cfg: &SearchConfig) -> Result<Option<CellSearchResult>> {
    let ofdm = ssb_ofdm_config(scs_khz, cfg.fft_size)?;
    if cfg.cfo_hypotheses.is_empty() || cfg.raster_offsets.is_empty() {
        return Err(domain!("cell search needs at least one CFO and one raster hypothesis"));
    }
    let fft = cfg.fft_size;
    let cp = ofdm.cp_len(0);
    let block_len = ofdm.num_samples(4);
    if iq.len() < block_len {
        return Ok(None);
    }
    // the PSS useful part starts `cp` into the block; the whole block must fit
    let lags = cp..iq.len() - block_len + cp + 1;
    let energy = sliding_energy(iq, fft);

    let hyps: Vec<(u8, i32, i32)> = (0..3u8)
        .flat_map(|n| {
            cfg.cfo_hypotheses
                .iter()
                .flat_map(move |&c| cfg.raster_offsets.iter().map(move |&r| (n, c, r)))
        })
        .collect();
    let peaks = map_range(hyps.len(), |i| {
        let (n, c, r) = hyps[i];
        pss_peak(iq, &energy, n, c, r, lags.clone(), fft)
    });
    // first strictly greater metric wins, so ties resolve to the earliest hypothesis
    let best = peaks
        .into_iter()
        .reduce(|a, b| if b.metric > a.metric { b } else { a })
        .expect("at least one hypothesis");
    if best.metric < cfg.pss_threshold {
        return Ok(None);
    }

    let fs = ofdm.sample_rate_hz();
    let scs = ofdm.scs_hz;
    let win = &iq[best.lag..best.lag + fft];
    let half = fft / 2;
    let part = |range: std::ops::Range<usize>| -> Cplx { range.map(|n| win[n] * best.replica[n].conj()).sum() };
    let (c1, c2) = (part(0..half), part(half..fft));
    let frac = (c2 * c1.conj()).arg() * fs / (2.0 * PI * half as f64);
    let cfo_hz = f64::from(best.cfo_int) * scs + frac;

    let t0 = best.lag - cp;
    let block: Vec<Cplx> = iq[t0..t0 + block_len]
        .iter()
        .enumerate()
        .map(|(n, &v)| v * Cplx::from_polar(1.0, -2.0 * PI * cfo_hz * n as f64 / fs))
        .collect();
    let centre = (SSB_SUBCARRIERS / 2) as i64;
    let grid: Vec<Vec<Cplx>> = (0..4)
        .map(|l| {
            let start = ofdm.symbol_start(l) + ofdm.cp_len(l);
            let mut buf = block[start..start + fft].to_vec();
            dft_unitary(&mut buf, false);
            (0..SSB_SUBCARRIERS)
                .map(|k| buf[bin(k as i64 - centre + i64::from(best.raster), fft)])
                .collect()
        })
        .collect();

    let pss = pss_sequence(best.nid2)?;
    let h: Vec<Cplx> = (0..PSS_LEN).map(|i| grid[0][SYNC_START + i] * pss[i]).collect();
    let y2 = &grid[2][SYNC_START..SYNC_START + PSS_LEN];
    let e_h: f64 = h.iter().map(|v| v.norm_sqr()).sum();
    let e_y: f64 = y2.iter().map(|v| v.norm_sqr()).sum();
    let sss_metrics = map_range(NUM_NID1 as usize, |nid1| {
        let cell = CellId::from_parts(nid1 as u16, best.nid2).expect("valid parts");
        let s = sss_sequence(cell);
        let acc: Cplx = (0..PSS_LEN).map(|i| y2[i] * h[i].conj() * s[i]).sum();
        acc.norm_sqr() / (e_h * e_y).max(f64::MIN_POSITIVE)
    });
    let (nid1, sss_metric) =
        sss_metrics
            .iter()
            .copied()
            .enumerate()
            .fold((0, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
    if sss_metric < cfg.sss_threshold {
        return Ok(None);
    }
    let pci = CellId::from_parts(nid1 as u16, best.nid2)?;

    let (ssb_index, pbch_payload) = if cfg.decode_pbch {
        let (idx, payload) = recover_pbch(&grid, pci)?;
        (Some(idx), payload)
    } else {
        (None, None)
    };
    Ok(Some(CellSearchResult {
        pci,
        timing_offset_samples: t0,
        cfo_hz,
        metric: best.metric,
        sss_metric,
        ssb_index,
        pbch_payload,
    }))
}

/// Blind `ssb_index mod 8` detection on the PBCH DMRS, then PBCH decoding with
/// a channel estimate interpolated from the DMRS.
fn recover_pbch(grid: &[Vec<Cplx>], pci: CellId) -> Result<(usize, Option<Vec<u8>>)> {
    let (dmrs_res, data_res) = pbch_res(pci);
    let rx: Vec<Cplx> = dmrs_res.iter().map(|&(k, l)| grid[l][k]).collect();
    let (idx, _) = (0..8)
        .map(|i| {
            let d = pbch_dmrs(pci, i);
            let m: Cplx = rx.iter().zip(&d).map(|(y, s)| y * s.conj()).sum();
            (i, m.norm())
        })
        .fold((0, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
    let d = pbch_dmrs(pci, idx);
    let ls: Vec<(usize, usize, Cplx)> = dmrs_res
        .iter()
        .zip(rx.iter().zip(&d))
        .map(|(&(k, l), (y, s))| (k, l, y * s.conj()))
        .collect();
    let eq: Vec<Cplx> = data_res
        .iter()
        .map(|&(k, l)| {
            // average of the DMRS estimates within two pilots on either side
            let (sum, n) = ls
                .iter()
                .filter(|&&(kk, ll, _)| ll == l && kk.abs_diff(k) <= 8)
                .fold((Cplx::new(0.0, 0.0), 0usize), |(s, n), &(_, _, h)| (s + h, n + 1));
            let h = if n > 0 { sum / n as f64 } else { Cplx::new(1.0, 0.0) };
            grid[l][k] * h.conj()
        })
        .collect();
    Ok((idx, pbch_decode(pci, &eq, 1.0)?))
}

/// One burst period of SSBs for `cell`, sampled at `fft_size * scs`.
pub fn generate_burst(cfg: &SsbConfig, cell: CellId, payload: &[u8], fft_size: usize) -> Result<Vec<Cplx>> {
    let num = Numerology::from_scs_khz(cfg.scs_khz)?;
    let frame = ssb_ofdm_config(cfg.scs_khz, fft_size)?.starting_at(0);
    let period_samples = frame.num_samples(num.symbols_per_subframe()) * cfg.burst_periodicity_ms as usize;
    let mut out = vec![Cplx::new(0.0, 0.0); period_samples];
    for pos in burst_positions(cfg)? {
        let l = pos.slot * SYMBOLS_PER_SLOT + pos.start_symbol;
        let ofdm = frame.clone().starting_at(l);
        let block = build_ssb(cell, payload, pos.ssb_index)?;
        let start = frame.symbol_start(l);
        let w = super::ssb::ssb_waveform(&block, &ofdm)?;
        for (o, v) in out[start..start + w.len()].iter_mut().zip(w) {
            *o += v;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::super::ssb::ssb_waveform;
    use super::*;

    fn payload() -> Vec<u8> {
        (0..32).map(|i| (i % 5 == 1) as u8).collect()
    }

    fn delayed(x: &[Cplx], d: usize, tail: usize) -> Vec<Cplx> {
        let mut out = vec![Cplx::new(0.0, 0.0); d];
        out.extend_from_slice(x);
        out.resize(out.len() + tail, Cplx::new(0.0, 0.0));
        out
    }

    #[test]
    fn noiseless_loopback_with_delay() {
        let cell = CellId::new(722).unwrap();
        let ofdm = ssb_ofdm_config(15, 256).unwrap();
        let w = ssb_waveform(&build_ssb(cell, &payload(), 5).unwrap(), &ofdm).unwrap();
        for d in [0, 1234] {
            let r = cell_search(&delayed(&w, d, 300), 15, &SearchConfig::default())
                .unwrap()
                .unwrap();
            assert_eq!(r.pci, cell);
            assert_eq!(r.timing_offset_samples, d);
            assert!(r.cfo_hz.abs() < 1.0);
            assert_eq!(r.ssb_index, Some(5));
            assert_eq!(r.pbch_payload, Some(payload()));
        }
    }

    #[test]
    fn recovers_under_carrier_offset() {
        let cell = CellId::new(5).unwrap();
        let ofdm = ssb_ofdm_config(30, 256).unwrap();
        let w = ssb_waveform(&build_ssb(cell, &payload(), 0).unwrap(), &ofdm).unwrap();
        let fs = ofdm.sample_rate_hz();
        for frac in [-0.4, 0.4] {
            let cfo = frac * ofdm.scs_hz;
            let x: Vec<Cplx> = delayed(&w, 77, 50)
                .iter()
                .enumerate()
                .map(|(n, v)| v * Cplx::from_polar(1.0, 2.0 * PI * cfo * n as f64 / fs))
                .collect();
            let r = cell_search(&x, 30, &SearchConfig::default()).unwrap().unwrap();
            assert_eq!(r.pci, cell);
            assert!((r.cfo_hz - cfo).abs() < 0.01 * ofdm.scs_hz, "{} vs {cfo}", r.cfo_hz);
        }
    }

    #[test]
    fn burst_capture_is_found() {
        let cfg = SsbConfig::default();
        let cell = CellId::new(300).unwrap();
        let x = generate_burst(&cfg, cell, &payload(), 256).unwrap();
        assert_eq!(x.len(), 76800);
        let r = cell_search(&x, 15, &SearchConfig::default()).unwrap().unwrap();
        assert_eq!(r.pci, cell);
    }
}
