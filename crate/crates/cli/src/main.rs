//! `sagnac`: run sweeps and delay scans of the Sagnac switch simulator,
//! analyze result files and work with `.sagnet` netlists.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

mod config;
mod report;
mod units;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use sagnac_core::engine::{EngineError, LoopModel};
use sagnac_core::experiment::{run_delay_scan, run_voltage_sweep};
use sagnac_core::netlist::{parse, render_diagnostics, sagnac_preset, serialize};

use config::RunConfigFile;

const MAX_SCAN_POINTS: usize = 1_000_000;

#[derive(Parser)]
#[command(
    name = "sagnac",
    version,
    about = "Fiber Sagnac single-photon switch simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo sweep of the modulator voltage.
    Sweep(RunArgs),
    /// Monte Carlo scan of the drive-pulse delay at a fixed voltage.
    DelayScan(DelayArgs),
    /// Emit, validate or canonicalize netlists.
    #[command(subcommand)]
    Netlist(NetlistCommand),
    /// Recompute the summary of a sweep result file.
    Analyze(AnalyzeArgs),
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration; defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// H, V, D, A, or a custom `alpha,beta` pair (complex, normalized on input).
    #[arg(long, default_value = "H", allow_hyphen_values = true)]
    input_state: String,
    /// MZ arm phase Kl in degrees (overrides the config).
    #[arg(long, allow_hyphen_values = true)]
    kl_deg: Option<f64>,
    /// 3 repetitions of 1 s instead of the configured plan.
    #[arg(long)]
    quick: bool,
    /// Master seed (overrides config and SAGNAC_SEED).
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args)]
struct DelayArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Drive voltage in volts.
    #[arg(long, default_value_t = 4.0, allow_hyphen_values = true)]
    voltage: f64,
    /// First pulse delay (s, or with ps/ns/us/ms suffix).
    #[arg(long, default_value = "-40ns", allow_hyphen_values = true)]
    from: String,
    /// Last pulse delay.
    #[arg(long, default_value = "560ns", allow_hyphen_values = true)]
    to: String,
    #[arg(long, default_value = "1ns", allow_hyphen_values = true)]
    step: String,
}

#[derive(Subcommand)]
enum NetlistCommand {
    /// Write the built-in switch netlist.
    EmitPreset {
        /// Takes the delay fiber from the `[switch]` section.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check syntax, references and the switch topology.
    Validate { path: PathBuf },
    /// Rewrite a netlist in canonical form (in place unless --out is given).
    Canonicalize {
        path: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct AnalyzeArgs {
    /// CSV or JSON file written by `sweep`.
    results: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
    /// Diagnostics were already printed.
    Reported(u8),
}

type Outcome = Result<(), Failure>;

trait OrFailure<T> {
    fn usage(self) -> Result<T, Failure>;
    fn runtime(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> OrFailure<T> for Result<T, E> {
    fn usage(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Usage(e.into()))
    }

    fn runtime(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Runtime(e.into()))
    }
}

fn emit(out: Option<&Path>, text: &str) -> Outcome {
    match out {
        Some(p) => fs::write(p, text)
            .with_context(|| format!("cannot write `{}`", p.display()))
            .runtime(),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .context("cannot write to stdout")
            .runtime(),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .with_context(|| format!("cannot read `{}`", path.display()))
        .usage()
}

fn load_run(args: &RunArgs) -> Result<RunConfigFile, Failure> {
    let mut cfg = RunConfigFile::load(args.config.as_deref()).usage()?;
    if let Some(seed) = args.seed {
        cfg.plan.seed = seed;
    }
    if args.quick {
        cfg.plan.repetitions = 3;
        cfg.plan.integration_time = 1.0;
    }
    if let Some(deg) = args.kl_deg {
        if !deg.is_finite() {
            return Err(Failure::Usage(anyhow!("--kl-deg must be finite")));
        }
        cfg.switch.mzs_phase_kl = deg.to_radians();
    }
    cfg.plan.input_state =
        units::parse_input_state(&args.input_state).map_err(|e| Failure::Usage(anyhow!(e)))?;
    cfg.validate().usage()?;
    Ok(cfg)
}

fn sweep(args: &RunArgs) -> Outcome {
    let cfg = load_run(args)?;
    let result = run_voltage_sweep(&cfg.plan, &cfg.source, &cfg.detector, &cfg.switch).runtime()?;
    let text = match args.format {
        Format::Csv => report::sweep_csv(&result),
        Format::Json => report::sweep_json(&result),
    }
    .runtime()?;
    emit(args.out.as_deref(), &text)
}

/// Drops accumulated rounding noise from scan grid points.
fn nine_digits(x: f64) -> f64 {
    format!("{x:.8e}").parse().expect("formatted float parses")
}

fn delays(args: &DelayArgs) -> anyhow::Result<Vec<f64>> {
    let parse = |s: &str| units::parse_seconds(s).map_err(|e| anyhow!(e));
    let (from, to, step) = (parse(&args.from)?, parse(&args.to)?, parse(&args.step)?);
    if step <= 0.0 {
        bail!("--step must be > 0, got {step} s");
    }
    if from >= to {
        bail!("--from ({from} s) must be less than --to ({to} s)");
    }
    let n = ((to - from) / step * (1.0 + 1e-12)).floor();
    if n >= MAX_SCAN_POINTS as f64 {
        bail!("scan has more than {MAX_SCAN_POINTS} points");
    }
    Ok((0..=n as usize)
        .map(|i| nine_digits(from + i as f64 * step))
        .collect())
}

fn delay_scan(args: &DelayArgs) -> Outcome {
    let cfg = load_run(&args.run)?;
    if !args.voltage.is_finite() {
        return Err(Failure::Usage(anyhow!("--voltage must be finite")));
    }
    let delays = delays(args).usage()?;
    let result = run_delay_scan(
        &delays,
        args.voltage,
        &cfg.plan,
        &cfg.source,
        &cfg.detector,
        &cfg.switch,
    )
    .runtime()?;
    let text = match args.run.format {
        Format::Csv => report::delay_csv(&result),
        Format::Json => report::delay_json(&result).runtime()?,
    };
    emit(args.run.out.as_deref(), &text)
}

fn netlist(cmd: &NetlistCommand) -> Outcome {
    match cmd {
        NetlistCommand::EmitPreset { config, out } => {
            let cfg = RunConfigFile::load(config.as_deref()).usage()?;
            emit(out.as_deref(), &serialize(&sagnac_preset(&cfg.switch)))
        }
        NetlistCommand::Validate { path } => {
            let text = read(path)?;
            let name = path.display().to_string();
            let netlist = parse(&text).map_err(|diags| {
                eprint!("{}", render_diagnostics(&name, &diags));
                Failure::Reported(2)
            })?;
            match LoopModel::from_netlist(&netlist) {
                Ok(_) => {
                    println!(
                        "{name}: ok ({} components, {} connections)",
                        netlist.decls().len(),
                        netlist.connections().len()
                    );
                    Ok(())
                }
                Err(EngineError::UnsupportedTopology(d)) => {
                    eprintln!("{}", d.render(&name));
                    Err(Failure::Reported(2))
                }
                Err(e) => Err(Failure::Usage(e.into())),
            }
        }
        NetlistCommand::Canonicalize { path, out } => {
            let text = read(path)?;
            let netlist = parse(&text).map_err(|diags| {
                eprint!(
                    "{}",
                    render_diagnostics(&path.display().to_string(), &diags)
                );
                Failure::Reported(2)
            })?;
            emit(Some(out.as_deref().unwrap_or(path)), &serialize(&netlist))
        }
    }
}

fn analyze(args: &AnalyzeArgs) -> Outcome {
    let text = read(&args.results)?;
    let file = report::parse_sweep(&text)
        .with_context(|| format!("`{}` is not a sweep result", args.results.display()))
        .usage()?;
    let block = report::SummaryBlock::from_rows(&file.rows, file.repetitions).runtime()?;
    let out = if file.json {
        let doc = serde_json::json!({
            "schema_version": report::SCHEMA_VERSION,
            "summary": block.to_json(),
        });
        format!("{}\n", serde_json::to_string_pretty(&doc).runtime()?)
    } else {
        block.to_text()
    };
    emit(args.out.as_deref(), &out)?;
    match &block.fit_error {
        Some(e) => Err(Failure::Reported({
            eprintln!("error: {e}");
            1
        })),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Sweep(a) => sweep(a),
        Command::DelayScan(a) => delay_scan(a),
        Command::Netlist(c) => netlist(c),
        Command::Analyze(a) => analyze(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Reported(code)) => ExitCode::from(code),
    }
}
