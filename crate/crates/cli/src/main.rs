use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::Rng;

use nrsim::access::cellsearch::{cell_search, SearchConfig};
use nrsim::access::prach::{detect_prach, generate_prach, PrachFormat, PrachZoneConfig};
use nrsim::access::ssb::{build_ssb, ssb_ofdm_config, ssb_waveform, PBCH_PAYLOAD_BITS};
use nrsim::dsp::mean_power;
use nrsim::linksim::channel::{channel_apply_with, trial_rng, ChannelConfig};
use nrsim::linksim::io::{csv_string, read_iq, read_iq_meta, write_iq, IqMeta};
use nrsim::linksim::{run_scenario, RawConfig, SimConfig};
use nrsim::sequences::{gold_sequence, low_papr_sequence, pss_sequence, sss_sequence, zadoff_chu, CellId};
use nrsim::{Cplx, Error, Result};

#[derive(Parser)]
#[command(name = "linksim", version, about = "5G NR physical layer link-level simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the Monte-Carlo scenarios of a config file and emit CSV.
    Run(RunArgs),
    /// Search an IQ capture for a cell.
    Cellsearch(CellSearchArgs),
    /// Write an SSB capture for testing the searcher.
    Capture(CaptureArgs),
    /// Generate and/or detect PRACH preambles.
    Prach(PrachArgs),
    /// Sequence utilities.
    Seq {
        #[command(subcommand)]
        command: SeqCommand,
    },
}

#[derive(Args)]
struct RunArgs {
    config: PathBuf,
    /// Override any config key, e.g. `--set sim.trials=50`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated SNR points in dB.
    #[arg(long, allow_hyphen_values = true)]
    snr: Option<String>,
    #[arg(long)]
    threads: Option<usize>,
    /// CSV output path; stdout when absent.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Report elapsed_s as 0 for reproducible output.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Args)]
struct CellSearchArgs {
    #[arg(long)]
    iq: PathBuf,
    /// Subcarrier spacing in kHz.
    #[arg(long)]
    scs: Option<u32>,
    /// Samples per useful symbol; taken from the sidecar when absent.
    #[arg(long)]
    fft: Option<usize>,
    #[arg(long)]
    no_pbch: bool,
}

#[derive(Args)]
struct CaptureArgs {
    #[arg(long)]
    pci: u16,
    #[arg(long, default_value_t = 15)]
    scs: u32,
    #[arg(long, default_value_t = 256)]
    fft: usize,
    #[arg(long, default_value_t = 0)]
    ssb_index: usize,
    #[arg(long, default_value_t = 0)]
    delay: usize,
    /// SNR in dB relative to the SSB power; noiseless when absent.
    #[arg(long, allow_hyphen_values = true)]
    snr: Option<f64>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PrachArgs {
    #[arg(long)]
    format: String,
    /// Subcarrier spacing of short formats, in kHz.
    #[arg(long, default_value_t = 30)]
    scs: u32,
    #[arg(long, default_value_t = 129)]
    root: u64,
    #[arg(long, default_value_t = 13)]
    n_cs: usize,
    /// Detect in this capture instead of generating one.
    #[arg(long)]
    iq: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    preamble: usize,
    #[arg(long, default_value_t = 0)]
    delay: usize,
    #[arg(long, allow_hyphen_values = true)]
    snr: Option<f64>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Write the generated capture here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum SeqCommand {
    /// Print a sequence, one element per line.
    Dump(DumpArgs),
}

#[derive(Args)]
struct DumpArgs {
    /// pss, sss, gold, zc or low-papr.
    kind: String,
    #[arg(long)]
    nid2: Option<u8>,
    #[arg(long)]
    pci: Option<u16>,
    #[arg(long)]
    c_init: Option<u32>,
    #[arg(long)]
    root: Option<u64>,
    #[arg(long)]
    group: Option<usize>,
    #[arg(long)]
    len: Option<usize>,
    #[arg(long, default_value_t = 0)]
    cs: usize,
}

fn required<T>(v: Option<T>, flag: &str) -> Result<T> {
    v.ok_or_else(|| Error::Config(format!("missing --{flag}")))
}

fn run(args: RunArgs) -> Result<()> {
    let mut raw = RawConfig::from_file(&args.config)?;
    for kv in &args.set {
        raw.apply_override(kv)?;
    }
    let flags = [
        ("sim.trials", args.trials.map(|v| v.to_string())),
        ("sim.seed", args.seed.map(|v| v.to_string())),
        ("sim.snr_db", args.snr.clone()),
        ("sim.threads", args.threads.map(|v| v.to_string())),
        ("sim.output", args.output.as_ref().map(|p| p.display().to_string())),
        ("sim.report_timing", args.no_timing.then(|| "false".to_owned())),
    ];
    for (k, v) in flags {
        if let Some(v) = v {
            raw.set(k, &v);
        }
    }
    let cfg = SimConfig::from_raw(&raw)?;
    let result = run_scenario(&cfg)?;
    match &cfg.output {
        Some(p) => eprintln!("wrote {} rows to {}", result.points.len(), p.display()),
        None => print!("{}", csv_string(&result.csv_rows())),
    }
    Ok(())
}

fn cellsearch(args: CellSearchArgs) -> Result<()> {
    let meta = read_iq_meta(&args.iq)?;
    let samples = read_iq(&args.iq)?;
    let scs = match (args.scs, meta) {
        (Some(s), _) => s,
        (None, Some(m)) => m.scs_khz,
        (None, None) => return Err(Error::Config("missing --scs and no sidecar".into())),
    };
    let fft = match (args.fft, meta) {
        (Some(f), _) => f,
        (None, Some(m)) => (m.sample_rate_hz / (f64::from(scs) * 1e3)).round() as usize,
        (None, None) => SearchConfig::default().fft_size,
    };
    let cfg = SearchConfig {
        fft_size: fft,
        decode_pbch: !args.no_pbch,
        ..SearchConfig::default()
    };
    match cell_search(&samples, scs, &cfg)? {
        Some(r) => {
            println!("pci={}", r.pci.pci);
            println!("timing_offset_samples={}", r.timing_offset_samples);
            println!("cfo_hz={:.3}", r.cfo_hz);
            println!("pss_metric={:.4}", r.metric);
            println!("sss_metric={:.4}", r.sss_metric);
            if let Some(i) = r.ssb_index {
                println!("ssb_index={i}");
            }
            if let Some(p) = r.pbch_payload {
                let bits: String = p.iter().map(|b| char::from(b'0' + b)).collect();
                println!("pbch_payload={bits}");
            }
        }
        None => println!("no cell detected"),
    }
    Ok(())
}

fn add_noise(x: &[Cplx], snr: Option<f64>, reference_power: f64, fs: f64, seed: u64) -> Vec<Cplx> {
    let ch = ChannelConfig {
        snr_db: snr.unwrap_or(f64::INFINITY),
        reference_power: Some(reference_power),
        ..ChannelConfig::default()
    };
    channel_apply_with(x, &ch, fs, &mut trial_rng(seed, 0))
}

fn capture(args: CaptureArgs) -> Result<()> {
    let cell = CellId::new(args.pci)?;
    let ofdm = ssb_ofdm_config(args.scs, args.fft)?;
    let mut rng = trial_rng(args.seed, 1);
    let payload: Vec<u8> = (0..PBCH_PAYLOAD_BITS).map(|_| rng.random_range(0..2u8)).collect();
    let w = ssb_waveform(&build_ssb(cell, &payload, args.ssb_index)?, &ofdm)?;
    let mut x = vec![Cplx::new(0.0, 0.0); args.delay];
    x.extend_from_slice(&w);
    x.resize(x.len() + ofdm.cp_len(0), Cplx::new(0.0, 0.0));
    let y = add_noise(&x, args.snr, mean_power(&w), ofdm.sample_rate_hz(), args.seed);
    let meta = IqMeta {
        sample_rate_hz: ofdm.sample_rate_hz(),
        scs_khz: args.scs,
    };
    write_iq(&args.out, &y, &meta)?;
    println!(
        "wrote {} samples for pci {} to {}",
        y.len(),
        args.pci,
        args.out.display()
    );
    Ok(())
}

fn prach(args: PrachArgs) -> Result<()> {
    let fmt = PrachFormat::new(&args.format, args.scs)?;
    let zone = PrachZoneConfig {
        n_cs: args.n_cs,
        ..PrachZoneConfig::default()
    };
    let samples = match &args.iq {
        Some(p) => read_iq(p)?,
        None => {
            if args.preamble >= zone.num_preambles(fmt.seq_len) {
                return Err(Error::Config(format!(
                    "preamble {} outside 0..{}",
                    args.preamble,
                    zone.num_preambles(fmt.seq_len)
                )));
            }
            let x = generate_prach(&fmt, args.root, zone.cyclic_shift(args.preamble))?;
            let mut d = vec![Cplx::new(0.0, 0.0); args.delay];
            d.extend_from_slice(&x);
            d.truncate(x.len());
            let power = mean_power(&x) * fmt.fft_size as f64 / fmt.seq_len as f64;
            let y = add_noise(&d, args.snr, power, fmt.sample_rate_hz(), args.seed);
            let y = y[..x.len()].to_vec();
            if let Some(out) = &args.out {
                let meta = IqMeta {
                    sample_rate_hz: fmt.sample_rate_hz(),
                    scs_khz: (fmt.scs_hz / 1e3).round() as u32,
                };
                write_iq(out, &y, &meta)?;
            }
            y
        }
    };
    let det = detect_prach(&samples, &fmt, args.root, &zone)?;
    println!("preamble,timing_advance_samples,metric");
    for d in det {
        println!("{},{},{:.4}", d.preamble_index, d.timing_advance_samples, d.metric);
    }
    Ok(())
}

fn print_complex(v: &[Cplx]) {
    for x in v {
        println!("{} {}", x.re, x.im);
    }
}

fn dump(a: DumpArgs) -> Result<()> {
    match a.kind.as_str() {
        "pss" => print_complex(&pss_sequence(required(a.nid2, "nid2")?)?),
        "sss" => print_complex(&sss_sequence(CellId::new(required(a.pci, "pci")?)?)),
        "gold" => {
            for b in gold_sequence(required(a.c_init, "c-init")?, required(a.len, "len")?) {
                println!("{b}");
            }
        }
        "zc" => print_complex(&zadoff_chu(required(a.root, "root")?, required(a.len, "len")?, a.cs)?),
        "low-papr" => print_complex(&low_papr_sequence(
            required(a.group, "group")?,
            required(a.len, "len")?,
        )?),
        other => return Err(Error::Config(format!("unknown sequence `{other}`"))),
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Domain(_) => 2,
        Error::Io { .. } => 3,
        Error::Collision { .. } => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Run(a) => run(a),
        Command::Cellsearch(a) => cellsearch(a),
        Command::Capture(a) => capture(a),
        Command::Prach(a) => prach(a),
        Command::Seq {
            command: SeqCommand::Dump(a),
        } => dump(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
