use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tpu_fault::experiment::{self, ExperimentConfig, Overrides, SweepKind};
use tpu_fault::{Error, Result};

#[derive(Parser)]
#[command(name = "tpu-fault", version, about = "Exact error probabilities of stuck-at faults in a systolic-array accelerator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Error probability, divergence histogram and model size for one fault
    Analyze {
        #[command(flatten)]
        common: Common,
        /// Append the first-layer trace of the first diverging input
        #[arg(long)]
        trace: bool,
    },
    /// Weight-register faults over bit positions (CSV)
    SweepBits(Common),
    /// Faults over layer counts (CSV)
    SweepLayers(Common),
    /// Multiplier or accumulator faults over MAC rows (CSV)
    SweepRow(Common),
    /// Model and property files for an external model checker
    ExportModel {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = ".")]
        dir: PathBuf,
        #[arg(long, default_value = "model")]
        stem: String,
    },
    /// Cycle-by-cycle trace of one layer
    SimulateTrace {
        #[command(flatten)]
        common: Common,
        /// First-layer activations; defaults to the first diverging input
        #[arg(long, value_delimiter = ',')]
        input: Option<Vec<u32>>,
    },
    /// Cross-check both engines on randomized configurations
    Selfcheck {
        #[arg(long, default_value_t = 100)]
        cases: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
}

#[derive(Args)]
struct Common {
    /// TOML configuration file
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[arg(long)]
    rows: Option<i64>,
    #[arg(long)]
    cols: Option<i64>,
    #[arg(long)]
    neurons: Option<i64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    layers: Option<Vec<i64>>,
    #[arg(long)]
    weight_bits: Option<i64>,
    #[arg(long)]
    activation_bits: Option<i64>,
    #[arg(long)]
    multiplier_bits: Option<i64>,
    #[arg(long)]
    accumulator_bits: Option<i64>,
    /// keep-high, keep-low or saturate
    #[arg(long)]
    quantization: Option<String>,
    #[arg(long)]
    signed: Option<bool>,
    /// weight, multiplier, accumulator or none
    #[arg(long)]
    site: Option<String>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    stuck: Option<Vec<i64>>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    bit: Option<Vec<i64>>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    row: Option<Vec<i64>>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    col: Option<Vec<i64>>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    seed: Option<Vec<i64>>,
    #[arg(long)]
    weights: Option<PathBuf>,
    #[arg(long)]
    inputs: Option<PathBuf>,
    /// Output file; standard output when absent
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long)]
    workers: Option<i64>,
    /// Include wall-clock times
    #[arg(long)]
    runtime: bool,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let overrides = Overrides {
            rows: self.rows,
            cols: self.cols,
            neurons: self.neurons,
            layers: self.layers.clone(),
            weight_bits: self.weight_bits,
            activation_bits: self.activation_bits,
            multiplier_bits: self.multiplier_bits,
            accumulator_bits: self.accumulator_bits,
            quantization: self.quantization.clone(),
            signed: self.signed,
            site: self.site.clone(),
            stuck: self.stuck.clone(),
            bit: self.bit.clone(),
            row: self.row.clone(),
            col: self.col.clone(),
            seed: self.seed.clone(),
            weights_file: self.weights.clone(),
            inputs_file: self.inputs.clone(),
            output: self.output.clone(),
            workers: self.workers,
            runtime: self.runtime.then_some(true),
        };
        match &self.config {
            Some(path) => ExperimentConfig::load(path, &overrides),
            None => ExperimentConfig::parse("", "<defaults>", &overrides, None),
        }
    }
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Io {
            path: p.to_path_buf(),
            source: e,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn sweep(common: &Common, kind: SweepKind) -> Result<()> {
    let cfg = common.load()?;
    let rows = experiment::run_sweep(&cfg, kind)?;
    emit(cfg.output.path.as_deref(), &experiment::to_csv(&cfg, kind, &rows))
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Analyze { common, trace } => {
            let cfg = common.load()?;
            let report = experiment::analyze_single(&cfg, trace)?;
            emit(cfg.output.path.as_deref(), &report.render(cfg.output.runtime))?;
        }
        Command::SweepBits(common) => sweep(&common, SweepKind::Bits)?,
        Command::SweepLayers(common) => sweep(&common, SweepKind::Layers)?,
        Command::SweepRow(common) => sweep(&common, SweepKind::Row)?,
        Command::ExportModel { common, dir, stem } => {
            let cfg = common.load()?;
            let (pm, pctl) = experiment::export(&cfg, &dir, &stem)?;
            println!("{}\n{}", pm.display(), pctl.display());
        }
        Command::SimulateTrace { common, input } => {
            let cfg = common.load()?;
            let text = experiment::simulate_trace(&cfg, input.as_deref())?;
            emit(cfg.output.path.as_deref(), &text)?;
        }
        Command::Selfcheck { cases, seed, workers } => {
            let s = experiment::selfcheck(cases, seed, workers)?;
            for m in &s.mismatches {
                println!("MISMATCH case {}: {}: closed form {} simulator {}", m.case, m.fault, m.closed_form, m.simulator);
            }
            println!(
                "selfcheck: {} cases, {} with non-zero error probability, {} mismatches",
                s.cases,
                s.nonzero,
                s.mismatches.len()
            );
            if !s.mismatches.is_empty() {
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
