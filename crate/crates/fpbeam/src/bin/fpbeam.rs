//! Command-line front end: offline learning, Monte Carlo sweeps, the
//! setup-time comparison and config validation.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fpbeam::config::{parse_config, ScenarioConfig};
use fpbeam::harness::{
    emit_results, report_timing, run_offline_to_file, run_sweep, OutputFormat, SweepAxis,
};

#[derive(Parser)]
#[command(name = "fpbeam", version, about = "WiFi-fingerprint mm-wave beam selection simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Scenario config file (TOML); omit for the built-in defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the master seed from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for parallel trials (default: all cores).
    #[arg(long)]
    parallelism: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Build the radio maps and exemplars, and persist them.
    Offline {
        #[command(flatten)]
        common: CommonArgs,
        /// Radio-map output file.
        #[arg(long, default_value = "radiomap.fprm")]
        out: PathBuf,
    },
    /// Run a Monte Carlo sweep and emit the result table.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_enum)]
        axis: SweepAxis,
        /// Result file.
        #[arg(long, default_value = "results.csv")]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: OutputFormat,
        /// Override the trial count per axis point.
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Print the MIDC-vs-proposed setup-time comparison.
    Timing {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Parse and validate a config file.
    Validate {
        #[command(flatten)]
        common: CommonArgs,
    },
}

fn load_config(common: &CommonArgs) -> Result<ScenarioConfig, String> {
    let mut config = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            parse_config(&text).map_err(|e| e.to_string())?
        }
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = common.seed {
        config.sweep.master_seed = seed;
    }
    if let Some(n) = common.parallelism {
        // ignore failure when a pool already exists (e.g. repeated calls in tests)
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(config)
}

fn run() -> Result<(), String> {
    let cli = Cli::parse();
    match cli.command {
        Command::Offline { common, out } => {
            let config = load_config(&common)?;
            let artifacts = run_offline_to_file(&config, &out).map_err(|e| e.to_string())?;
            for w in &artifacts.warnings {
                eprintln!("warning: {w}");
            }
            println!(
                "offline phase complete: {} LPs, {} WiFi APs, {} mm-w APs -> {}",
                artifacts.grid.len(),
                artifacts.maps.psi.ap_count(),
                artifacts.maps.phi.ap_count(),
                out.display()
            );
            println!("ap\tgroups\tclusters");
            for (ap, groups, clusters) in &artifacts.summary {
                println!("{ap}\t{groups}\t{clusters}");
            }
            Ok(())
        }
        Command::Sweep {
            common,
            axis,
            out,
            format,
            trials,
        } => {
            let mut config = load_config(&common)?;
            if let Some(t) = trials {
                config.sweep.trials = t;
            }
            let results = run_sweep(&config, axis).map_err(|e| e.to_string())?;
            emit_results(&results, format, &out).map_err(|e| e.to_string())?;
            println!("axis\tvalue\tavg_rpr_db\tnn_rpr_db\toutage_rate");
            for r in &results {
                println!(
                    "{}\t{}\t{:.3}\t{:.3}\t{:.4}",
                    r.axis, r.value, r.avg_rpr_db, r.nn_rpr_db, r.outage_rate
                );
            }
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::Timing { common } => {
            let config = load_config(&common)?;
            let report = report_timing(&config);
            println!("scheme\tsectors\tbc_beams\taps\ttotal_ms");
            for row in &report.rows {
                println!(
                    "{}\t{}\t{}\t{}\t{:.4}",
                    row.scheme, row.sectors, row.bc_beams, row.ap_count, row.total_ms
                );
            }
            println!("setup-time reduction: {:.1} %", report.reduction_percent);
            Ok(())
        }
        Command::Validate { common } => {
            let config = load_config(&common)?;
            config.build_scene().map_err(|e| e.to_string())?;
            println!("config ok");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
