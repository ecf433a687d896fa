use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use phenolv::config::{Command, ConfigError};
use phenolv::presets::{self, PRESETS};
use phenolv::runner::record_failure;
use phenolv::{run_to_dir, RunConfig, RunError};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CliCommand {
    PhasePlane,
    Separatrix,
    OdeSim,
    PdeSim,
    SteadyState,
    Sweep,
    /// List the bundled presets.
    Presets,
}

/// Simulates phenotype-structured two-species competition and writes CSV
/// tables with a JSON manifest.
#[derive(Debug, Parser)]
#[command(version)]
struct Cli {
    command: CliCommand,

    /// TOML configuration file.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,

    /// Bundled preset name (see `phenolv presets`).
    #[arg(long)]
    preset: Option<String>,

    /// Output directory; overrides `[output] dir`.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Worker threads for sweeps.
    #[arg(long)]
    threads: Option<usize>,
}

fn command_of(c: CliCommand) -> Option<Command> {
    Some(match c {
        CliCommand::PhasePlane => Command::PhasePlane,
        CliCommand::Separatrix => Command::Separatrix,
        CliCommand::OdeSim => Command::OdeSim,
        CliCommand::PdeSim => Command::PdeSim,
        CliCommand::SteadyState => Command::SteadyState,
        CliCommand::Sweep => Command::Sweep,
        CliCommand::Presets => return None,
    })
}

fn report(err: &RunError) -> ExitCode {
    eprintln!("error: {}", err.chain().join(": "));
    ExitCode::from(err.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let Some(command) = command_of(cli.command) else {
        for (name, desc, text) in PRESETS {
            let cmd = RunConfig::parse(text).map(|c| c.command.name()).unwrap_or("?");
            println!("{name:<24}{cmd:<14}{desc}");
        }
        return ExitCode::SUCCESS;
    };

    if let Some(n) = cli.threads {
        if n == 0 {
            return report(&RunError::Config(ConfigError {
                path: "--threads".into(),
                message: "must be >= 1".into(),
            }));
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("warning: could not size the worker pool: {e}");
        }
    }

    let text = match (&cli.config, &cli.preset) {
        (Some(path), _) => match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(source) => {
                return report(&RunError::Io {
                    path: path.display().to_string(),
                    source,
                })
            }
        },
        (None, Some(name)) => match presets::preset(name) {
            Some(t) => t.to_owned(),
            None => {
                return report(&RunError::Config(ConfigError {
                    path: "--preset".into(),
                    message: format!("unknown preset {name:?}; run `phenolv presets` for the list"),
                }))
            }
        },
        (None, None) => {
            return report(&RunError::Config(ConfigError {
                path: "--config".into(),
                message: "one of --config or --preset is required".into(),
            }))
        }
    };

    let cfg = RunConfig::parse_for(&text, command);
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.as_ref().ok().and_then(|c| c.output_dir.clone()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out").join(command.name()));
    let cfg = match cfg {
        Ok(c) => c,
        Err(e) => {
            let err = RunError::from(e);
            record_failure(&out, command, &err, None, 0.0);
            return report(&err);
        }
    };
    match run_to_dir(&cfg, &out) {
        Ok(m) => {
            println!("{} finished in {:.2} s; outputs in {}", m.command, m.duration_seconds, out.display());
            ExitCode::SUCCESS
        }
        Err(e) => report(&e),
    }
}
