//! Seeded Monte-Carlo runs over SNR sweeps for every scenario.

use std::path::PathBuf;
use std::time::Instant;

use rand::Rng;

use super::channel::{channel_apply_with, complex_gaussian, trial_rng, ChannelConfig};
use super::config::RawConfig;
use super::io::CsvRow;
use super::receiver::Equalizer;
use super::shared::{random_bits, run_trial, SharedChannelConfig, SharedPlan};
use crate::access::cellsearch::{cell_search, SearchConfig};
use crate::access::prach::{detect_prach, generate_prach, PrachFormat, PrachZoneConfig, PRACH_THRESHOLD_SCALE};
use crate::access::ssb::{build_ssb, ssb_ofdm_config, ssb_waveform, PBCH_PAYLOAD_BITS};
use crate::dsp::mean_power;
use crate::error::{config_err, Result};
use crate::modulation::ModOrder;
use crate::numerology::{Allocation, LinkDirection, SYMBOLS_PER_SLOT};
use crate::par::{map_range_with, with_threads, Executor};
use crate::refsignals::{DmrsConfig, PtrsConfig};
use crate::sequences::{CellId, NUM_PCI};
use crate::Cplx;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scenario {
    Pdsch,
    Pusch,
    CellSearch,
    Prach,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Pdsch => "pdsch",
            Scenario::Pusch => "pusch",
            Scenario::CellSearch => "cell_search",
            Scenario::Prach => "prach",
        }
    }

    pub fn from_name(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "pdsch" => Ok(Scenario::Pdsch),
            "pusch" => Ok(Scenario::Pusch),
            "cell_search" | "cellsearch" => Ok(Scenario::CellSearch),
            "prach" => Ok(Scenario::Prach),
            other => Err(config_err!("unknown scenario `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellSearchScenario {
    pub scs_khz: u32,
    pub fft_size: usize,
    /// Delays are drawn uniformly from `0..=max_delay_samples`.
    pub max_delay_samples: usize,
    pub cfo_hz: f64,
    /// Pure-noise captures per SNR point, counted as false alarms when a
    /// cell is reported.
    pub noise_trials: usize,
}

impl Default for CellSearchScenario {
    fn default() -> Self {
        Self {
            scs_khz: 15,
            fft_size: 256,
            max_delay_samples: 4000,
            cfo_hz: 0.0,
            noise_trials: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrachScenario {
    pub format: String,
    pub scs_khz: u32,
    pub root: u64,
    pub zone: PrachZoneConfig,
    /// Largest timing error still counted as a correct estimate.
    pub ta_tolerance: usize,
    /// Delays are drawn from `0..=max_delay_samples`; `None` uses the zone size.
    pub max_delay_samples: Option<usize>,
    pub noise_trials: usize,
}

impl Default for PrachScenario {
    fn default() -> Self {
        Self {
            format: "0".into(),
            scs_khz: 15,
            root: 129,
            zone: PrachZoneConfig::default(),
            ta_tolerance: 1,
            max_delay_samples: None,
            noise_trials: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub scenarios: Vec<Scenario>,
    pub snr_db: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    /// Worker threads; `None` uses every core.
    pub threads: Option<usize>,
    pub executor: Executor,
    /// When false, elapsed times are reported as 0 so outputs are reproducible.
    pub report_timing: bool,
    pub output: Option<PathBuf>,
    pub pdsch: SharedChannelConfig,
    pub pusch: SharedChannelConfig,
    pub cell_search: CellSearchScenario,
    pub prach: PrachScenario,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            scenarios: vec![Scenario::Pdsch],
            snr_db: vec![0.0],
            trials: 100,
            seed: 1,
            threads: None,
            executor: Executor::Parallel,
            report_timing: true,
            output: None,
            pdsch: SharedChannelConfig::default(),
            pusch: SharedChannelConfig {
                direction: LinkDirection::Uplink,
                ..SharedChannelConfig::default()
            },
            cell_search: CellSearchScenario::default(),
            prach: PrachScenario::default(),
        }
    }
}

fn parse_snr(s: &str) -> Option<f64> {
    match s.to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "infinity" => Some(f64::INFINITY),
        _ => s.parse().ok().filter(|v: &f64| v.is_finite()),
    }
}

impl SimConfig {
    /// Reads every recognised key; unknown keys are an error.
    pub fn from_raw(raw: &RawConfig) -> Result<Self> {
        let d = SimConfig::default();
        let scenarios = match raw.get_list::<String>("sim.scenarios")? {
            Some(v) => v.iter().map(|s| Scenario::from_name(s)).collect::<Result<_>>()?,
            None => match raw.raw("sim.scenario") {
                Some(s) => vec![Scenario::from_name(s)?],
                None => d.scenarios,
            },
        };
        let snr_db = match raw.raw("sim.snr_db") {
            Some(v) => v
                .split(',')
                .map(|s| parse_snr(s.trim()).ok_or_else(|| config_err!("`sim.snr_db`: bad value `{}`", s.trim())))
                .collect::<Result<Vec<_>>>()?,
            None => d.snr_db,
        };
        let threads = match raw.get::<usize>("sim.threads")? {
            Some(0) | None => None,
            Some(n) => Some(n),
        };
        let executor = match raw.raw("sim.executor") {
            None | Some("parallel") => Executor::Parallel,
            Some("sequential") => Executor::Sequential,
            Some(other) => return Err(config_err!("`sim.executor`: unknown executor `{other}`")),
        };

        let carrier_rb = raw.get_or("carrier.num_rb", 24usize)?;
        let start_rb = raw.get_or("alloc.start_rb", 0usize)?;
        let layers = raw.get_or("mimo.layers", 1usize)?;
        let ptrs = if raw.get_bool("ptrs.enabled", false)? {
            Some(PtrsConfig {
                freq_density_krb: raw.get_or("ptrs.freq_density", 2)?,
                time_density: raw.get_or("ptrs.time_density", 1)?,
                assoc_dmrs_port: 0,
            })
        } else {
            None
        };
        let shared = SharedChannelConfig {
            direction: LinkDirection::Downlink,
            mu: raw.get_or("carrier.mu", 1u8)?,
            carrier_rb,
            alloc: Allocation::new(
                start_rb,
                raw.get_or("alloc.num_rb", carrier_rb.saturating_sub(start_rb))?,
                raw.get_or("alloc.start_symbol", 0)?,
                raw.get_or("alloc.num_symbols", SYMBOLS_PER_SLOT)?,
            ),
            modulation: ModOrder::from_name(raw.raw("mcs.modulation").unwrap_or("qpsk"))
                .map_err(|e| config_err!("`mcs.modulation`: {e}"))?,
            code_rate: raw.get_or("mcs.code_rate", 1.0 / 3.0)?,
            num_layers: layers,
            num_codewords: raw.get_or("mimo.codewords", if layers > 4 { 2 } else { 1 })?,
            dmrs: DmrsConfig {
                num_front_symbols: raw.get_or("dmrs.front_symbols", 1)?,
                additional_positions: raw.get_or("dmrs.additional_positions", 0)?,
                ..DmrsConfig::default()
            },
            ptrs,
            reserved: Default::default(),
            transform_precoding: false,
            equalizer: Equalizer::from_name(raw.raw("mimo.equalizer").unwrap_or("zf"))
                .map_err(|e| config_err!("`mimo.equalizer`: {e}"))?,
            num_rx: raw.get_or("mimo.rx_antennas", layers)?,
            random_mimo: raw.get_bool("mimo.random", false)?,
            phase_noise_var: raw.get_or("channel.phase_noise_var", 0.0)?,
            rnti: raw.get_or("ue.rnti", 0x4601)?,
            n_id: raw.get_or("dmrs.scrambling_id", 0)?,
            slot: raw.get_or("ue.slot", 0)?,
        };
        let pusch = SharedChannelConfig {
            direction: LinkDirection::Uplink,
            num_codewords: raw.get_or("pusch.codewords", 1)?,
            transform_precoding: raw.get_bool("pusch.transform_precoding", false)?,
            ..shared.clone()
        };

        let cs = &d.cell_search;
        let cell_search = CellSearchScenario {
            scs_khz: raw.get_or("cell_search.scs_khz", cs.scs_khz)?,
            fft_size: raw.get_or("cell_search.fft_size", cs.fft_size)?,
            max_delay_samples: raw.get_or("cell_search.max_delay_samples", cs.max_delay_samples)?,
            cfo_hz: raw.get_or("cell_search.cfo_hz", cs.cfo_hz)?,
            noise_trials: raw.get_or("cell_search.noise_trials", cs.noise_trials)?,
        };
        let pr = &d.prach;
        let prach = PrachScenario {
            format: raw.raw("prach.format").unwrap_or(&pr.format).to_owned(),
            scs_khz: raw.get_or("prach.scs_khz", pr.scs_khz)?,
            root: raw.get_or("prach.root", pr.root)?,
            zone: PrachZoneConfig {
                n_cs: raw.get_or("prach.n_cs", pr.zone.n_cs)?,
                threshold_scale: raw.get_or("prach.threshold_scale", PRACH_THRESHOLD_SCALE)?,
                guard: raw.get_or("prach.guard", pr.zone.guard)?,
            },
            ta_tolerance: raw.get_or("prach.ta_tolerance", pr.ta_tolerance)?,
            max_delay_samples: raw.get("prach.max_delay_samples")?,
            noise_trials: raw.get_or("prach.noise_trials", pr.noise_trials)?,
        };

        let cfg = SimConfig {
            scenarios,
            snr_db,
            trials: raw.get_or("sim.trials", d.trials)?,
            seed: raw.get_or("sim.seed", d.seed)?,
            threads,
            executor,
            report_timing: raw.get_bool("sim.report_timing", d.report_timing)?,
            output: raw.raw("sim.output").map(PathBuf::from),
            pdsch: shared,
            pusch,
            cell_search,
            prach,
        };
        raw.reject_unused()?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        Self::from_raw(&RawConfig::parse(text)?)
    }

    /// Checks every scenario that will run, before any trial starts.
    pub fn validate(&self) -> Result<()> {
        if self.scenarios.is_empty() || self.snr_db.is_empty() {
            return Err(config_err!("need at least one scenario and one SNR point"));
        }
        if self.trials == 0 {
            return Err(config_err!("`sim.trials` must be positive"));
        }
        for s in &self.scenarios {
            match s {
                Scenario::Pdsch => {
                    SharedPlan::new(&self.pdsch)?;
                }
                Scenario::Pusch => {
                    SharedPlan::new(&self.pusch)?;
                }
                Scenario::CellSearch => {
                    ssb_ofdm_config(self.cell_search.scs_khz, self.cell_search.fft_size)
                        .map_err(|e| config_err!("cell search: {e}"))?;
                }
                Scenario::Prach => {
                    let f = self.prach_format()?;
                    if self.prach.zone.n_cs == 0 || self.prach.zone.n_cs > f.seq_len {
                        return Err(config_err!(
                            "`prach.n_cs` {} invalid for length {}",
                            self.prach.zone.n_cs,
                            f.seq_len
                        ));
                    }
                    if self.prach.root == 0 || self.prach.root as usize >= f.seq_len {
                        return Err(config_err!("`prach.root` {} outside 1..{}", self.prach.root, f.seq_len));
                    }
                }
            }
        }
        Ok(())
    }

    fn prach_format(&self) -> Result<PrachFormat> {
        PrachFormat::new(&self.prach.format, self.prach.scs_khz).map_err(|e| config_err!("prach: {e}"))
    }
}

/// Tallies of one scenario at one SNR point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointResult {
    pub scenario: Scenario,
    pub snr_db: f64,
    pub trials: usize,
    /// Block errors, missed or wrong cells, or missed preambles.
    pub errors: usize,
    /// Trials where the wanted cell or preamble was found.
    pub detections: usize,
    /// Correct detections whose timing estimate missed the tolerance.
    pub timing_errors: usize,
    /// Signal trials that reported a different cell or preamble.
    pub wrong_detections: usize,
    pub noise_trials: usize,
    /// Noise-only trials that reported anything.
    pub false_alarms: usize,
    pub elapsed_s: f64,
}

impl PointResult {
    pub fn rate(&self) -> f64 {
        self.errors as f64 / self.trials as f64
    }

    pub fn csv_row(&self) -> CsvRow {
        CsvRow {
            scenario: self.scenario.name().into(),
            snr_db: self.snr_db,
            trials: self.trials,
            errors: self.errors,
            elapsed_s: self.elapsed_s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimResult {
    pub points: Vec<PointResult>,
}

impl SimResult {
    pub fn csv_rows(&self) -> Vec<CsvRow> {
        self.points.iter().map(PointResult::csv_row).collect()
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    error: bool,
    detected: bool,
    timing_error: bool,
    wrong: bool,
}

/// Random stream of trial `trial` at point `point` of scenario `scenario`;
/// noise-only trials use a disjoint range.
fn stream(scenario: Scenario, point: usize, trial: usize, noise: bool) -> u64 {
    ((scenario as u64) << 56) | (u64::from(noise) << 55) | ((point as u64) << 32) | trial as u64
}

pub fn run_sim(cfg: &SimConfig) -> Result<SimResult> {
    cfg.validate()?;
    with_threads(cfg.threads, || {
        let mut points = Vec::new();
        for &s in &cfg.scenarios {
            let runner = Runner::new(cfg, s)?;
            for (p, &snr) in cfg.snr_db.iter().enumerate() {
                let t0 = Instant::now();
                let tallies = map_range_with(cfg.executor, cfg.trials, |t| {
                    runner.trial(snr, &mut trial_rng(cfg.seed, stream(s, p, t, false)))
                })
                .into_iter()
                .collect::<Result<Vec<Tally>>>()?;
                let noise_trials = runner.noise_trials();
                let noise = map_range_with(cfg.executor, noise_trials, |t| {
                    runner.noise_trial(snr, &mut trial_rng(cfg.seed, stream(s, p, t, true)))
                })
                .into_iter()
                .collect::<Result<Vec<bool>>>()?;
                let elapsed = t0.elapsed().as_secs_f64();
                points.push(PointResult {
                    scenario: s,
                    snr_db: snr,
                    trials: cfg.trials,
                    errors: tallies.iter().filter(|t| t.error).count(),
                    detections: tallies.iter().filter(|t| t.detected).count(),
                    timing_errors: tallies.iter().filter(|t| t.timing_error).count(),
                    wrong_detections: tallies.iter().filter(|t| t.wrong).count(),
                    noise_trials,
                    false_alarms: noise.iter().filter(|&&f| f).count(),
                    elapsed_s: if cfg.report_timing { elapsed } else { 0.0 },
                });
            }
        }
        Ok(SimResult { points })
    })
}

/// Runs `cfg` and writes the CSV to `cfg.output` when set.
pub fn run_scenario(cfg: &SimConfig) -> Result<SimResult> {
    let result = run_sim(cfg)?;
    if let Some(path) = &cfg.output {
        super::io::write_csv(path, &result.csv_rows())?;
    }
    Ok(result)
}

enum Runner<'a> {
    Shared(SharedPlan),
    CellSearch(&'a CellSearchScenario),
    Prach(&'a PrachScenario, PrachFormat),
}

fn awgn<R: Rng>(x: &[Cplx], snr_db: f64, reference_power: f64, rng: &mut R) -> Vec<Cplx> {
    let ch = ChannelConfig {
        snr_db,
        reference_power: Some(reference_power),
        ..ChannelConfig::default()
    };
    channel_apply_with(x, &ch, 1.0, rng)
}

impl<'a> Runner<'a> {
    fn new(cfg: &'a SimConfig, s: Scenario) -> Result<Self> {
        Ok(match s {
            Scenario::Pdsch => Runner::Shared(SharedPlan::new(&cfg.pdsch)?),
            Scenario::Pusch => Runner::Shared(SharedPlan::new(&cfg.pusch)?),
            Scenario::CellSearch => Runner::CellSearch(&cfg.cell_search),
            Scenario::Prach => Runner::Prach(&cfg.prach, cfg.prach_format()?),
        })
    }

    fn noise_trials(&self) -> usize {
        match self {
            Runner::Shared(_) => 0,
            Runner::CellSearch(c) => c.noise_trials,
            Runner::Prach(p, _) => p.noise_trials,
        }
    }

    fn trial<R: Rng>(&self, snr_db: f64, rng: &mut R) -> Result<Tally> {
        match self {
            Runner::Shared(plan) => {
                let out = run_trial(plan, snr_db, rng)?;
                Ok(Tally {
                    error: out.block_error,
                    detected: !out.block_error,
                    ..Tally::default()
                })
            }
            Runner::CellSearch(c) => cell_search_trial(c, snr_db, rng),
            Runner::Prach(p, f) => prach_trial(p, f, snr_db, rng),
        }
    }

    fn noise_trial<R: Rng>(&self, snr_db: f64, rng: &mut R) -> Result<bool> {
        match self {
            Runner::Shared(_) => Ok(false),
            Runner::CellSearch(c) => {
                let (len, power) = ssb_capture_shape(c)?;
                let x = noise_only(len, power, snr_db, rng);
                Ok(cell_search(&x, c.scs_khz, &search_config(c))?.is_some())
            }
            Runner::Prach(p, f) => {
                let x = generate_prach(f, p.root, 0)?;
                let noise = noise_only(x.len(), prach_reference_power(f, &x), snr_db, rng);
                Ok(!detect_prach(&noise, f, p.root, &p.zone)?.is_empty())
            }
        }
    }
}

fn noise_only<R: Rng>(len: usize, reference_power: f64, snr_db: f64, rng: &mut R) -> Vec<Cplx> {
    // at infinite SNR a noise-only capture still needs some noise to be meaningful
    let snr = if snr_db.is_finite() { snr_db } else { 0.0 };
    let var = reference_power / crate::dsp::db_to_linear(snr);
    (0..len).map(|_| complex_gaussian(rng, var)).collect()
}

fn search_config(c: &CellSearchScenario) -> SearchConfig {
    SearchConfig {
        fft_size: c.fft_size,
        decode_pbch: false,
        ..SearchConfig::default()
    }
}

/// Capture length and SSB reference power for the cell search scenario.
fn ssb_capture_shape(c: &CellSearchScenario) -> Result<(usize, f64)> {
    let ofdm = ssb_ofdm_config(c.scs_khz, c.fft_size)?;
    let block = build_ssb(CellId::new(0)?, &[0; PBCH_PAYLOAD_BITS], 0)?;
    let w = ssb_waveform(&block, &ofdm)?;
    Ok((c.max_delay_samples + w.len() + ofdm.cp_len(0), mean_power(&w)))
}

fn cell_search_trial<R: Rng>(c: &CellSearchScenario, snr_db: f64, rng: &mut R) -> Result<Tally> {
    let ofdm = ssb_ofdm_config(c.scs_khz, c.fft_size)?;
    let cell = CellId::new(rng.random_range(0..NUM_PCI))?;
    let ssb_index = rng.random_range(0..8);
    let payload = random_bits(rng, PBCH_PAYLOAD_BITS);
    let delay = rng.random_range(0..=c.max_delay_samples);
    let w = ssb_waveform(&build_ssb(cell, &payload, ssb_index)?, &ofdm)?;
    let power = mean_power(&w);
    let mut x = vec![Cplx::new(0.0, 0.0); delay];
    x.extend_from_slice(&w);
    x.resize(c.max_delay_samples + w.len() + ofdm.cp_len(0), Cplx::new(0.0, 0.0));
    let ch = ChannelConfig {
        snr_db,
        cfo_hz: c.cfo_hz,
        reference_power: Some(power),
        ..ChannelConfig::default()
    };
    let y = channel_apply_with(&x, &ch, ofdm.sample_rate_hz(), rng);
    let found = cell_search(&y, c.scs_khz, &search_config(c))?;
    let tolerance = ofdm.cp_len(0) / 2;
    Ok(match found {
        Some(r) if r.pci == cell => {
            let timing_ok = r.timing_offset_samples.abs_diff(delay) <= tolerance;
            Tally {
                error: !timing_ok,
                detected: true,
                timing_error: !timing_ok,
                wrong: false,
            }
        }
        Some(_) => Tally {
            error: true,
            wrong: true,
            ..Tally::default()
        },
        None => Tally {
            error: true,
            ..Tally::default()
        },
    })
}

/// Reference power such that the SNR is measured inside the preamble band.
fn prach_reference_power(f: &PrachFormat, x: &[Cplx]) -> f64 {
    mean_power(x) * f.fft_size as f64 / f.seq_len as f64
}

fn prach_trial<R: Rng>(p: &PrachScenario, f: &PrachFormat, snr_db: f64, rng: &mut R) -> Result<Tally> {
    let preamble = rng.random_range(0..p.zone.num_preambles(f.seq_len));
    let max_delay = p.max_delay_samples.unwrap_or(p.zone.max_delay_samples(f));
    let delay = rng.random_range(0..=max_delay);
    let x = generate_prach(f, p.root, p.zone.cyclic_shift(preamble))?;
    let power = prach_reference_power(f, &x);
    let mut d = vec![Cplx::new(0.0, 0.0); delay];
    d.extend_from_slice(&x);
    d.truncate(x.len());
    let y = awgn(&d, snr_db, power, rng);
    let det = detect_prach(&y, f, p.root, &p.zone)?;
    let hit = det.iter().find(|d| d.preamble_index == preamble);
    let timing_error = hit.is_some_and(|h| h.timing_advance_samples.abs_diff(delay) > p.ta_tolerance);
    Ok(Tally {
        error: hit.is_none(),
        detected: hit.is_some(),
        timing_error,
        wrong: det.iter().any(|d| d.preamble_index != preamble),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(text: &str) -> SimConfig {
        SimConfig::from_text(text).unwrap()
    }

    #[test]
    fn defaults_parse() {
        let c = quick("");
        assert_eq!(c, SimConfig::default());
    }

    #[test]
    fn unknown_and_bad_keys_are_config_errors() {
        for bad in [
            "sim.trails = 3",
            "sim.scenarios = pdsch, lte",
            "sim.snr_db = 1, x",
            "mimo.layers = 2\npusch.transform_precoding = true\nsim.scenarios = pusch",
            "pusch.codewords = 2\nmimo.layers = 6\nsim.scenarios = pusch",
            "prach.format = Z9\nsim.scenarios = prach",
        ] {
            assert!(
                matches!(SimConfig::from_text(bad), Err(crate::Error::Config(_))),
                "{bad}"
            );
        }
    }

    #[test]
    fn results_have_one_row_per_point() {
        let c = quick(
            "[sim]\nscenarios = pdsch, prach\nsnr_db = inf, 10\ntrials = 3\nreport_timing = false\n\
             [carrier]\nnum_rb = 6\n[prach]\nformat = A1",
        );
        let r = run_sim(&c).unwrap();
        assert_eq!(r.points.len(), 4);
        assert!(r.points.iter().all(|p| p.errors == 0 && p.elapsed_s == 0.0));
    }
}
