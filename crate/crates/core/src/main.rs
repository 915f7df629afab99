use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use magenta_core::harness::{preset, preset_names, run_experiment, ExperimentConfig, HarnessError, PresetName};

#[derive(Parser)]
#[command(
    name = "magenta",
    version,
    about = "Decentralized non-convex optimization experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run {
        config: PathBuf,
        /// Output directory (overrides `output` in the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// `key=value` override, dotted keys, repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Run a built-in preset.
    Preset {
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Print a preset as TOML.
    ShowPreset {
        name: String,
    },
    ListPresets,
}

fn execute(config: ExperimentConfig, overrides: &[String], out: Option<PathBuf>) -> Result<(), HarnessError> {
    let mut config = config.with_overrides(overrides)?;
    if out.is_some() {
        config.output = out;
    }
    let report = run_experiment(&config)?;
    println!(
        "{:<24} {:>6} {:>9} {:>8} {:>9} {:>8}",
        "algorithm", "runs", "converged", "diverged", "undecided", "conv %"
    );
    for v in &report.summary.variants {
        println!(
            "{:<24} {:>6} {:>9} {:>8} {:>9} {:>8.1}",
            v.algorithm, v.runs, v.converged, v.diverged, v.undecided, v.convergence_pct
        );
    }
    if let Some(dir) = &config.output {
        println!(
            "wrote {} and {}",
            dir.join("trace.csv").display(),
            dir.join("summary.toml").display()
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, out, overrides } => {
            ExperimentConfig::from_path(&config).and_then(|c| execute(c, &overrides, out))
        }
        Command::Preset { name, out, overrides } => name
            .parse::<PresetName>()
            .and_then(|p| execute(preset(p), &overrides, out)),
        Command::ShowPreset { name } => name
            .parse::<PresetName>()
            .and_then(|p| preset(p).to_toml_string())
            .map(|text| print!("{text}")),
        Command::ListPresets => {
            for p in preset_names() {
                println!("{:<20} {}", p.as_str(), p.description());
            }
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
