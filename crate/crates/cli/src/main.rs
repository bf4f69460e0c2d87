//! `maserbat`: run micromaser battery simulations, optimizations, sweeps,
//! Wigner exports and chamber checks from a JSON config or a named preset.

mod config;
mod error;
mod run;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;

use config::{preset, RunConfig, PRESETS};
use error::CliError;

const DEFAULT_OUT: &str = "maserbat-out";

#[derive(Debug, Parser)]
#[command(name = "maserbat", version, about = "Micromaser quantum battery experiments")]
struct Args {
    /// JSON run config, or a `summary.json` from an earlier run.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Named built-in config (see --list-presets).
    #[arg(long)]
    preset: Option<String>,
    /// Worker threads for restarts, sweeps and Wigner grids.
    #[arg(long, env = "MASERBAT_THREADS")]
    jobs: Option<usize>,
    /// Overrides `optimizer.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print preset names and exit.
    #[arg(long)]
    list_presets: bool,
    /// Print the resolved config and exit without running.
    #[arg(long)]
    print_config: bool,
}

fn resolve(args: &Args) -> Result<RunConfig, CliError> {
    let mut cfg = match (&args.config, &args.preset) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            RunConfig::from_json(&text)?
        }
        (None, Some(name)) => preset(name).ok_or_else(|| CliError::Config(format!("unknown preset `{name}`; see --list-presets")))?,
        _ => return Err(CliError::Config("pass exactly one of --config or --preset".into())),
    };
    if let Some(seed) = args.seed {
        cfg.optimizer.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.output_dir = Some(out.clone());
    }
    if cfg.output_dir.is_none() {
        cfg.output_dir = Some(PathBuf::from(DEFAULT_OUT));
    }
    let total: Option<usize> = cfg.layout().ok().map(|l| l.iter().map(|s| s.b).sum());
    if let Some(loss) = cfg.loss.as_mut() {
        loss.n_qubits = loss.n_qubits.or(total);
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Write each file to a temporary sibling and rename it into place.
fn write_all(dir: &Path, files: &[(String, Vec<u8>)]) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)?;
    for (name, bytes) in files {
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        tmp.write_all(bytes)?;
        tmp.as_file().sync_all()?;
        tmp.persist(dir.join(name)).map_err(|e| e.error)?;
    }
    Ok(())
}

fn execute(args: &Args) -> Result<(), CliError> {
    if let Some(jobs) = args.jobs {
        if jobs == 0 {
            return Err(CliError::Config("--jobs must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let cfg = resolve(args)?;
    if args.print_config {
        println!("{}", serde_json::to_string_pretty(&cfg).expect("configs serialize"));
        return Ok(());
    }
    let artifacts = run::run(&cfg)?;
    let dir = cfg.output_dir.as_deref().expect("resolved");
    write_all(dir, &artifacts.files)?;
    println!("{}", artifacts.report);
    println!("wrote {} files to {}", artifacts.files.len(), dir.display());
    Ok(())
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if args.list_presets {
        for name in PRESETS {
            println!("{name}");
        }
        return ExitCode::SUCCESS;
    }
    match execute(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("maserbat: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
