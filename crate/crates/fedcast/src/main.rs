use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fedcast::climate_report::{climate_report_files, ClimateOptions};
use fedcast::config::{ExperimentConfig, Mode};
use fedcast::csv_io::{read_long_csv, write_long_csv};
use fedcast::experiment::{evaluate_checkpoint, run_and_write, run_compare, summarize};
use fedcast::synth::{synthesize, SyntheticSpec};
use fedcast::{AppError, AppResult};
use fedcast_core::clean::{clean, CleaningPolicy};
use fedcast_core::params::ParamVector;

#[derive(Parser)]
#[command(name = "fedcast", version, about = "Federated multi-horizon forecasting for building data")]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Read long-format CSVs, clean them and write the result.
    Ingest {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, short)]
        out: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        min_valid: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        max_valid: Option<f64>,
        /// Gaps shorter than this are interpolated.
        #[arg(long, default_value_t = 2.0)]
        max_gap_hours: f64,
    },
    /// Generate synthetic data from a TOML spec.
    Synth {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train one model per client.
    TrainLocal(RunArgs),
    /// Train one model on the pooled data of all clients.
    TrainCentral(RunArgs),
    /// Train with federated rounds.
    TrainFed(RunArgs),
    /// Run all three cases and write comparison.csv.
    Compare(RunArgs),
    /// EN 15757 decomposition, mixing ratios and mould-risk summary.
    Climate {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, short)]
        out: PathBuf,
        /// TOML file with channel ids and analysis options.
        #[arg(long)]
        options: Option<PathBuf>,
    },
    /// Evaluate a saved checkpoint on the test splits.
    Eval {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Case the checkpoint was trained in; picks the scaler.
        #[arg(long, value_parser = parse_mode)]
        mode: Mode,
        #[arg(long)]
        target: String,
        #[arg(long)]
        client: Option<String>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, short)]
    config: PathBuf,
    /// Overrides output_dir.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Overrides the master seed and FEDCAST_SEED.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides server.rounds.
    #[arg(long)]
    rounds: Option<usize>,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    match s {
        "local" => Ok(Mode::Local),
        "centralized" => Ok(Mode::Centralized),
        "federated" => Ok(Mode::Federated),
        other => Err(format!("unknown mode `{other}`")),
    }
}

impl RunArgs {
    fn load(&self, mode: Option<Mode>) -> AppResult<ExperimentConfig> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(rounds) = self.rounds {
            cfg.server.rounds = rounds;
        }
        if let Some(mode) = mode {
            cfg.mode = mode;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn read_toml<T: serde::de::DeserializeOwned>(path: &Path) -> AppResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    toml::from_str(&text).map_err(|e| AppError::Config(format!("{}: {e}", path.display())))
}

fn run(cli: Cli) -> AppResult<()> {
    let stdout = &mut std::io::stdout();
    match cli.command {
        Command::Ingest { inputs, out, min_valid, max_valid, max_gap_hours } => {
            let policy = match (min_valid, max_valid) {
                (Some(lo), Some(hi)) => {
                    let p = CleaningPolicy { max_interp_gap: (max_gap_hours * 3600.0).round() as i64, ..CleaningPolicy::new(lo, hi) };
                    p.validate().map_err(|e| AppError::Config(format!("cleaning: {e}")))?;
                    Some(p)
                }
                (None, None) => None,
                _ => return Err(AppError::Config("--min-valid and --max-valid go together".into())),
            };
            std::fs::create_dir_all(&out).map_err(|e| AppError::io(&out, e))?;
            for input in &inputs {
                let mut series = read_long_csv(input)?;
                let stem = input.file_stem().and_then(|s| s.to_str()).unwrap_or("input");
                if let Some(policy) = &policy {
                    let mut reports = serde_json::Map::new();
                    for s in &mut series {
                        let (cleaned, report) =
                            clean(s, policy).map_err(|e| AppError::core(format!("channel `{}`", s.channel_id()), e))?;
                        reports.insert(s.channel_id().to_string(), serde_json::to_value(report).expect("report serializes"));
                        *s = cleaned;
                    }
                    let path = out.join(format!("{stem}_cleaning.json"));
                    let mut json = serde_json::to_vec_pretty(&reports).expect("report serializes");
                    json.push(b'\n');
                    std::fs::write(&path, json).map_err(|e| AppError::io(&path, e))?;
                }
                write_long_csv(&out.join(format!("{stem}.csv")), &series)?;
                for s in &series {
                    let _ = writeln!(stdout, "{}: {} samples, step {}s, {} missing", s.channel_id(), s.len(), s.step(), s.missing_count());
                }
            }
        }
        Command::Synth { spec, out, seed } => {
            let mut spec: SyntheticSpec = read_toml(&spec)?;
            if let Some(seed) = seed {
                spec.seed = seed;
            }
            let series = synthesize(&spec)?;
            write_long_csv(&out, &series)?;
        }
        Command::TrainLocal(args) => train(args, Mode::Local, stdout)?,
        Command::TrainCentral(args) => train(args, Mode::Centralized, stdout)?,
        Command::TrainFed(args) => train(args, Mode::Federated, stdout)?,
        Command::Compare(args) => {
            let cfg = args.load(None)?;
            let reports = run_compare(&cfg, &cfg.output_dir)?;
            let _ = summarize(stdout, &reports);
        }
        Command::Climate { inputs, out, options } => {
            let opts: ClimateOptions = match options {
                Some(path) => read_toml(&path)?,
                None => ClimateOptions::default(),
            };
            for path in climate_report_files(&inputs, &opts, &out)? {
                let _ = writeln!(stdout, "wrote {}", path.display());
            }
        }
        Command::Eval { run, checkpoint, mode, target, client } => {
            let cfg = run.load(Some(mode))?;
            let bytes = std::fs::read(&checkpoint).map_err(|e| AppError::io(&checkpoint, e))?;
            let params = ParamVector::from_bytes(&bytes).map_err(|e| AppError::core(checkpoint.display().to_string(), e))?;
            let evals = evaluate_checkpoint(&cfg, mode, &target, &params, client.as_deref())?;
            let json = serde_json::to_string_pretty(&evals).expect("reports serialize");
            let _ = writeln!(stdout, "{json}");
        }
    }
    Ok(())
}

fn train(args: RunArgs, mode: Mode, stdout: &mut impl Write) -> AppResult<()> {
    let cfg = args.load(Some(mode))?;
    let report = run_and_write(&cfg, &cfg.output_dir)?;
    let _ = summarize(stdout, std::slice::from_ref(&report));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
