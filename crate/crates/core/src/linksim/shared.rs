//! Shared-channel link: transport block chain, scrambling, modulation, layer
//! mapping, RE mapping around DMRS/PTRS/reserved resources, OFDM, channel and
//! the matching receiver.

use nalgebra::DVector;
use rand::Rng;

use super::channel::{channel_apply_with, ChannelConfig, MimoChannel};
use super::ofdm::{ofdm_demodulate, ofdm_modulate, OfdmConfig};
use super::receiver::{common_phase_error, equalize, estimate_channel, ChannelEstimate, Equalizer};
use crate::coding::chain::{descramble_llr, scramble, TbChain, TbDecoded};
use crate::dsp::{db_to_linear, papr_db};
use crate::error::{config_err, Result};
use crate::modulation::{
    layer_demap, layer_map, modulate, soft_demod_with, transform_deprecode, transform_precode, LayerMapSpec, ModOrder,
};
use crate::numerology::{
    apply_reserved, Allocation, LinkDirection, Numerology, Re, ReSet, ReservedPattern, ResourceGrid, SYMBOLS_PER_SLOT,
};
use crate::refsignals::dmrs::{dmrs_map, DmrsConfig, DmrsMapping, DmrsSequenceMode};
use crate::refsignals::ptrs::{ptrs_map, PtrsConfig};
use crate::Cplx;

/// Smallest noise variance handed to the demapper, keeping LLRs finite.
const MIN_NOISE_VAR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct SharedChannelConfig {
    pub direction: LinkDirection,
    pub mu: u8,
    pub carrier_rb: usize,
    pub alloc: Allocation,
    pub modulation: ModOrder,
    /// Target code rate; sets the transport block size.
    pub code_rate: f64,
    pub num_layers: usize,
    pub num_codewords: usize,
    pub dmrs: DmrsConfig,
    pub ptrs: Option<PtrsConfig>,
    pub reserved: ReservedPattern,
    pub transform_precoding: bool,
    pub equalizer: Equalizer,
    /// Receive antennas; at least the number of layers.
    pub num_rx: usize,
    /// Draw a random unitary mixing matrix per trial instead of identity.
    pub random_mimo: bool,
    pub phase_noise_var: f64,
    pub rnti: u16,
    pub n_id: u16,
    pub slot: usize,
}

impl Default for SharedChannelConfig {
    fn default() -> Self {
        Self {
            direction: LinkDirection::Downlink,
            mu: 1,
            carrier_rb: 24,
            alloc: Allocation::new(0, 24, 0, SYMBOLS_PER_SLOT),
            modulation: ModOrder::Qpsk,
            code_rate: 1.0 / 3.0,
            num_layers: 1,
            num_codewords: 1,
            dmrs: DmrsConfig::default(),
            ptrs: None,
            reserved: ReservedPattern::default(),
            transform_precoding: false,
            equalizer: Equalizer::Zf,
            num_rx: 1,
            random_mimo: false,
            phase_noise_var: 0.0,
            rnti: 0x4601,
            n_id: 0,
            slot: 0,
        }
    }
}

impl SharedChannelConfig {
    pub fn validate(&self) -> Result<()> {
        Numerology::new(self.mu).map_err(|e| config_err!("{e}"))?;
        self.alloc
            .validate(self.carrier_rb, SYMBOLS_PER_SLOT)
            .map_err(|e| config_err!("{e}"))?;
        LayerMapSpec::new(self.num_codewords, self.num_layers, self.direction).map_err(|e| config_err!("{e}"))?;
        if !(self.code_rate > 0.0 && self.code_rate < 1.0) {
            return Err(config_err!("code rate {} outside (0, 1)", self.code_rate));
        }
        if self.num_rx < self.num_layers {
            return Err(config_err!(
                "{} receive antennas cannot separate {} layers",
                self.num_rx,
                self.num_layers
            ));
        }
        if self.transform_precoding {
            if self.direction != LinkDirection::Uplink {
                return Err(config_err!("transform precoding is an uplink option"));
            }
            if self.num_layers != 1 {
                return Err(config_err!(
                    "transform precoding supports single layer transmission only"
                ));
            }
            if self.ptrs.is_some() || !self.reserved.is_empty() {
                return Err(config_err!(
                    "transform precoding needs whole data symbols: drop PTRS and reserved resources"
                ));
            }
        }
        self.reserved
            .validate(self.carrier_rb, SYMBOLS_PER_SLOT)
            .map_err(|e| config_err!("{e}"))?;
        if let Some(p) = &self.ptrs {
            p.validate().map_err(|e| config_err!("{e}"))?;
        }
        Ok(())
    }

    fn dmrs_config(&self) -> DmrsConfig {
        DmrsConfig {
            num_ports: self.num_layers,
            sequence_mode: if self.transform_precoding {
                DmrsSequenceMode::ZcLowPapr
            } else {
                DmrsSequenceMode::GoldQpsk
            },
            ..self.dmrs
        }
    }

    fn scrambling_init(&self, q: usize) -> u32 {
        (u32::from(self.rnti) << 15) + ((q as u32) << 14) + u32::from(self.n_id)
    }
}

/// Everything fixed for a configuration: reference signals, data REs and
/// coding chains.
#[derive(Debug, Clone)]
pub struct SharedPlan {
    pub cfg: SharedChannelConfig,
    pub layer_spec: LayerMapSpec,
    pub dmrs: DmrsMapping,
    pub ptrs: Vec<(usize, usize, Cplx)>,
    /// Data REs in mapping order: frequency first, then time.
    pub data_res: Vec<Re>,
    pub chains: Vec<TbChain>,
    pub ofdm: OfdmConfig,
}

impl SharedPlan {
    pub fn new(cfg: &SharedChannelConfig) -> Result<Self> {
        cfg.validate()?;
        let layer_spec = LayerMapSpec::new(cfg.num_codewords, cfg.num_layers, cfg.direction)?;
        let dmrs = dmrs_map(&cfg.dmrs_config(), &cfg.alloc, cfg.n_id, cfg.slot).map_err(|e| config_err!("{e}"))?;
        let ptrs = match &cfg.ptrs {
            Some(p) => ptrs_map(p, &cfg.alloc, &dmrs).map_err(|e| config_err!("{e}"))?,
            None => Vec::new(),
        };
        let mut blocked = cfg.reserved.clone();
        blocked.merge(&ReservedPattern::re_level(dmrs.occupied()));
        blocked.merge(&ReservedPattern::re_level(ptrs.iter().map(|&(k, l, _)| Re::new(k, l))));
        let data: ReSet = apply_reserved(&cfg.alloc.res(), &blocked);
        let data_res: Vec<Re> = data.into_iter().collect();
        if data_res.is_empty() {
            return Err(config_err!("allocation leaves no data resource elements"));
        }
        let qm = cfg.modulation.bits_per_symbol();
        let chains = layer_spec
            .layers_per_codeword()
            .into_iter()
            .map(|nl| {
                let g = data_res.len() * nl * qm;
                let a = ((cfg.code_rate * g as f64) as usize / 8 * 8).max(8);
                TbChain::new(a, cfg.code_rate, g, qm, nl, 0).map_err(|e| config_err!("{e}"))
            })
            .collect::<Result<Vec<_>>>()?;
        let num = Numerology::new(cfg.mu)?;
        let ofdm = OfdmConfig::new(&num, cfg.carrier_rb * 12)?;
        Ok(Self {
            cfg: cfg.clone(),
            layer_spec,
            dmrs,
            ptrs,
            data_res,
            chains,
            ofdm,
        })
    }

    pub fn tb_sizes(&self) -> Vec<usize> {
        self.chains.iter().map(|c| c.size_a).collect()
    }

    fn block_len(&self) -> usize {
        self.cfg.alloc.num_rb * 12
    }

    /// Maps the coded, scrambled and modulated transport blocks onto a grid
    /// with one port per layer.
    pub fn transmit(&self, tbs: &[Vec<u8>]) -> Result<ResourceGrid> {
        let cfg = &self.cfg;
        let codewords = tbs
            .iter()
            .zip(&self.chains)
            .enumerate()
            .map(|(q, (tb, chain))| {
                let coded = chain.encode(tb)?;
                modulate(&scramble(&coded, cfg.scrambling_init(q)), cfg.modulation)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut layers = layer_map(&codewords, &self.layer_spec)?;
        if cfg.transform_precoding {
            layers = vec![transform_precode(&layers, self.block_len())?];
        }
        let mut grid = ResourceGrid::new(cfg.num_layers, cfg.carrier_rb, SYMBOLS_PER_SLOT)?;
        for (p, res) in self.dmrs.ports.iter().enumerate() {
            grid.map_res(p, res, "dmrs")?;
        }
        if !self.ptrs.is_empty() {
            grid.map_res(self.cfg.ptrs.map_or(0, |p| p.assoc_dmrs_port), &self.ptrs, "ptrs")?;
        }
        for (p, layer) in layers.iter().enumerate() {
            let res: Vec<(usize, usize, Cplx)> = self
                .data_res
                .iter()
                .zip(layer)
                .map(|(re, &v)| (re.subcarrier, re.symbol, v))
                .collect();
            grid.map_res(p, &res, "data")?;
        }
        Ok(grid)
    }

    /// Recovers the transport blocks from per-antenna received grids
    /// `rx[r][l][k]` given the per-RE noise variance.
    pub fn receive(&self, rx: &[Vec<Vec<Cplx>>], noise_var: f64) -> Result<Vec<TbDecoded>> {
        let cfg = &self.cfg;
        let est = estimate_channel(rx, &self.dmrs)?;
        let rx = self.correct_phase(rx, &est);
        let nv = noise_var.max(MIN_NOISE_VAR);
        let nl = cfg.num_layers;
        let mut symbols = vec![Vec::with_capacity(self.data_res.len()); nl];
        let mut vars = vec![Vec::with_capacity(self.data_res.len()); nl];
        for re in &self.data_res {
            let h = est.matrix(re.subcarrier, re.symbol);
            let y = DVector::from_iterator(rx.len(), rx.iter().map(|g| g[re.symbol][re.subcarrier]));
            let (x, v) = equalize(&h, &y, nv, cfg.equalizer);
            for i in 0..nl {
                symbols[i].push(x[i]);
                vars[i].push(v[i].max(MIN_NOISE_VAR));
            }
        }
        if cfg.transform_precoding {
            let m = self.block_len();
            symbols[0] = transform_deprecode(&symbols[0], m)?;
            for blk in vars[0].chunks_exact_mut(m) {
                let mean = blk.iter().sum::<f64>() / m as f64;
                blk.fill(mean);
            }
        }
        let cw_symbols = layer_demap(&symbols, &self.layer_spec)?;
        let cw_vars = layer_demap(&vars, &self.layer_spec)?;
        self.chains
            .iter()
            .enumerate()
            .map(|(q, chain)| {
                let llr = soft_demod_with(&cw_symbols[q], cfg.modulation, &cw_vars[q]);
                chain.decode(&descramble_llr(&llr, cfg.scrambling_init(q)))
            })
            .collect()
    }

    /// Removes the per-symbol common phase measured on PTRS, relative to the
    /// DMRS occasion the estimate comes from.
    fn correct_phase(&self, rx: &[Vec<Vec<Cplx>>], est: &ChannelEstimate) -> Vec<Vec<Vec<Cplx>>> {
        let mut out = rx.to_vec();
        if self.ptrs.is_empty() {
            return out;
        }
        let port = self.cfg.ptrs.map_or(0, |p| p.assoc_dmrs_port);
        let mut by_symbol: std::collections::BTreeMap<usize, Vec<(usize, Cplx)>> = Default::default();
        for &(k, l, v) in &self.ptrs {
            by_symbol.entry(l).or_default().push((k, v));
        }
        for (r, grid) in out.iter_mut().enumerate() {
            for (&l, res) in &by_symbol {
                let o = est.nearest_occasion(l);
                let refs: Vec<(usize, Cplx)> = res
                    .iter()
                    .map(|&(k, v)| (k, est.h[r][port][o][k - est.first_subcarrier] * v))
                    .collect();
                let rot = Cplx::from_polar(1.0, -common_phase_error(&grid[l], &refs));
                for k in self.cfg.alloc.subcarriers() {
                    grid[l][k] *= rot;
                }
            }
        }
        out
    }
}

/// Result of one transmitted slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialOutcome {
    pub block_error: bool,
    pub bit_errors: usize,
}

pub fn random_bits<R: Rng>(rng: &mut R, n: usize) -> Vec<u8> {
    (0..n).map(|_| rng.random_range(0..2u8)).collect()
}

/// One slot through the whole chain. `snr_db` is the per-layer energy per RE
/// over the noise density; `f64::INFINITY` disables noise.
pub fn run_trial<R: Rng>(plan: &SharedPlan, snr_db: f64, rng: &mut R) -> Result<TrialOutcome> {
    let cfg = &plan.cfg;
    let tbs: Vec<Vec<u8>> = plan.chains.iter().map(|c| random_bits(rng, c.size_a)).collect();
    let grid = plan.transmit(&tbs)?;
    let tx = ofdm_modulate(&grid, &plan.ofdm)?;
    let mimo = if cfg.random_mimo {
        MimoChannel::random_unitary(cfg.num_rx.max(cfg.num_layers), rng)
    } else {
        MimoChannel::identity(cfg.num_rx.max(cfg.num_layers))
    };
    let mixed = if mimo.num_tx() == tx.len() {
        mimo.apply(&tx)?
    } else {
        // more receive antennas than layers: keep the first columns
        let h = mimo.h.columns(0, tx.len()).into_owned();
        MimoChannel { h }.apply(&tx)?
    };
    let ch = ChannelConfig {
        snr_db,
        reference_power: Some(1.0),
        phase_noise_var: cfg.phase_noise_var,
        ..ChannelConfig::default()
    };
    let fs = plan.ofdm.sample_rate_hz();
    let rx = mixed
        .iter()
        .map(|s| {
            let y = channel_apply_with(s, &ch, fs, rng);
            ofdm_demodulate(&y, &plan.ofdm, SYMBOLS_PER_SLOT)
        })
        .collect::<Result<Vec<_>>>()?;
    let noise_var = if snr_db.is_finite() {
        1.0 / db_to_linear(snr_db)
    } else {
        0.0
    };
    let decoded = plan.receive(&rx, noise_var)?;
    let mut out = TrialOutcome {
        block_error: false,
        bit_errors: 0,
    };
    for (d, tb) in decoded.iter().zip(&tbs) {
        let errs = d.bits.iter().zip(tb).filter(|(a, b)| a != b).count();
        out.bit_errors += errs;
        out.block_error |= !d.tb_crc_ok || errs > 0;
    }
    Ok(out)
}

/// Per-symbol PAPR (dB) of the data symbols of one random slot, measured on
/// the oversampled time-domain waveform without the cyclic prefix.
pub fn slot_papr_db<R: Rng>(plan: &SharedPlan, rng: &mut R) -> Result<Vec<f64>> {
    let tbs: Vec<Vec<u8>> = plan.chains.iter().map(|c| random_bits(rng, c.size_a)).collect();
    let grid = plan.transmit(&tbs)?;
    let tx = ofdm_modulate(&grid, &plan.ofdm)?;
    let symbols: std::collections::BTreeSet<usize> = plan.data_res.iter().map(|re| re.symbol).collect();
    let mut out = Vec::new();
    for l in symbols {
        let start = plan.ofdm.symbol_start(l) + plan.ofdm.cp_len(l);
        for port in &tx {
            out.push(papr_db(&port[start..start + plan.ofdm.fft_size]));
        }
    }
    Ok(out)
}
