//! The `irsim` command line.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::manifest::{manifest_path, unix_now, Manifest};
use crate::output::write_csv;
use crate::presets::preset;
use crate::sweep::{run_sweep_with_threads, SweepSpec};
use crate::validate::run_checks;
use crate::{parse_config, render_config, ConfigError, RunError};

#[derive(Debug, Parser)]
#[command(name = "irsim", version, about = "Uplink spectral-efficiency simulator for IRS-aided massive MIMO")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the sweep described by a TOML file.
    Run {
        config: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run a shipped experiment: validate-bound, se-vs-time, receiver-compare.
    Preset {
        name: String,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Check the simulator against its built-in oracles.
    Validate {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Print the full configuration, defaults included, as TOML.
    PrintConfig {
        /// Config file to resolve; defaults only when omitted.
        config: Option<PathBuf>,
        /// Resolve a shipped preset instead of a file.
        #[arg(long, conflicts_with = "config")]
        preset: Option<String>,
    },
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Output CSV; a manifest is written next to it.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Worker threads. Never changes the results.
    #[arg(long, env = "IRSIM_THREADS")]
    pub threads: Option<usize>,
}

fn read_config(path: &Path) -> Result<SweepSpec, RunError> {
    let text = fs::read_to_string(path)
        .map_err(|e| ConfigError::Invalid(format!("cannot read {}: {e}", path.display())))?;
    Ok(parse_config(&text)?)
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io { path: path.display().to_string(), source }
}

fn execute(mut spec: SweepSpec, args: &RunArgs, output: PathBuf) -> Result<(), RunError> {
    if let Some(s) = args.seed {
        spec.seed = s;
    }
    if let Some(t) = args.trials {
        spec.trials = t;
    }
    if args.threads == Some(0) {
        return Err(ConfigError::Invalid("--threads must be positive".into()).into());
    }
    let n_points = spec.points()?.len();
    let started = unix_now();
    let pool_threads = args.threads.unwrap_or_else(rayon::current_num_threads);
    let out = run_sweep_with_threads(&spec, args.threads)?;
    let finished = unix_now();

    let file = File::create(&output).map_err(io_err(&output))?;
    write_csv(BufWriter::new(file), &out.axes, &out.rows)?;
    let mut m = Manifest::new(&spec, n_points, out.rows.len(), pool_threads, started, finished);
    m.outputs.push(output.display().to_string());
    let mpath = manifest_path(&output);
    fs::write(&mpath, m.to_json()).map_err(io_err(&mpath))?;
    eprintln!("wrote {} rows to {} ({:.1} s)", out.rows.len(), output.display(), m.wall_seconds);
    Ok(())
}

fn default_output(stem: &str) -> PathBuf {
    PathBuf::from(format!("{stem}.csv"))
}

/// Runs a parsed command line and returns the process exit status.
pub fn run(cli: Cli) -> ExitCode {
    let result = match cli.command {
        Command::Run { config, run } => read_config(&config).and_then(|spec| {
            let stem = config.file_stem().map_or("results".into(), |s| s.to_string_lossy().into_owned());
            let out = run.output.clone().unwrap_or_else(|| default_output(&stem));
            execute(spec, &run, out)
        }),
        Command::Preset { name, run } => preset(&name).map_err(RunError::from).and_then(|spec| {
            let out = run.output.clone().unwrap_or_else(|| default_output(&name));
            execute(spec, &run, out)
        }),
        Command::Validate { seed } => {
            let checks = run_checks(seed);
            for c in &checks {
                println!("{} {} ({})", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            return if checks.iter().all(|c| c.pass) { ExitCode::SUCCESS } else { ExitCode::from(3) };
        }
        Command::PrintConfig { config, preset: name } => {
            let spec = match (config, name) {
                (Some(p), _) => read_config(&p),
                (None, Some(n)) => preset(&n).map_err(RunError::from),
                (None, None) => Ok(SweepSpec::default()),
            };
            spec.map(|s| print!("{}", render_config(&s)))
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("irsim: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
