use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sssl::harness::output::TRIAL_LOG_CSV;
use sssl::harness::{run_experiment, summarize_dir, write_report, ModeChoice, Overrides, SimConfig, TrialLog};
use sssl::{Algorithm, Error, Trajectory};

#[derive(Parser)]
#[command(name = "sssl", version, about = "UAV signal-source search and localization simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte-Carlo experiment and write its artifacts.
    Run {
        /// TOML config path, or `default` / `grid` for the built-in setups.
        #[arg(long)]
        config: String,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Shadowing standard deviation in dB.
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Comma-separated algorithm names, e.g. `cum,chlm`.
        #[arg(long, value_delimiter = ',')]
        algorithms: Option<Vec<Algorithm>>,
        /// SRL, DRL or both.
        #[arg(long)]
        mode: Option<ModeChoice>,
        #[arg(long)]
        trials: Option<usize>,
        /// Force the per-trial error log on or off.
        #[arg(long)]
        trial_log: Option<bool>,
    },
    /// Print or save the survey waypoints as CSV.
    Trajectory {
        #[arg(long, default_value_t = 300.0)]
        area: f64,
        #[arg(long, default_value_t = 30.0)]
        spacing: f64,
        #[arg(long, default_value_t = 50.0)]
        altitude: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Regenerate summary.csv from a run directory's trial log.
    Summarize {
        #[arg(long)]
        dir: PathBuf,
    },
}

fn load_config(spec: &str) -> sssl::Result<(SimConfig, String)> {
    match spec {
        "default" => {
            let cfg = SimConfig::default();
            let text = cfg.to_toml_string();
            Ok((cfg, text))
        }
        "grid" => {
            let cfg = SimConfig::default_grid();
            let text = cfg.to_toml_string();
            Ok((cfg, text))
        }
        path => SimConfig::load(Path::new(path)),
    }
}

fn run(cmd: Command) -> sssl::Result<()> {
    match cmd {
        Command::Run { config, out, sigma, seed, algorithms, mode, trials, trial_log } => {
            let (mut cfg, echo) = load_config(&config)?;
            cfg.apply(&Overrides { sigma_db: sigma, seed, algorithms, reference_mode: mode, trials, trial_log })?;
            std::fs::create_dir_all(&out)?;
            let report = if cfg.writes_trial_log() {
                let mut log = TrialLog::new(BufWriter::new(File::create(out.join(TRIAL_LOG_CSV))?))?;
                let report = run_experiment(&cfg, &echo, Some(&mut log))?;
                log.finish()?.flush()?;
                report
            } else {
                run_experiment(&cfg, &echo, None)?
            };
            write_report(&report, &out)
        }
        Command::Trajectory { area, spacing, altitude, out } => {
            let t = Trajectory::generate_parallel_track(area, spacing, altitude)
                .map_err(|e| Error::Config(e.to_string()))?;
            match out {
                Some(path) => t.write_csv(BufWriter::new(File::create(path)?)),
                None => t.write_csv(std::io::stdout().lock()),
            }
        }
        Command::Summarize { dir } => summarize_dir(&dir),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 1 } else { 2 })
        }
    }
}
