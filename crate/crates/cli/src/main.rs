use std::path::PathBuf;

use clap::Parser;

/// Numerical laboratory for critical points of elliptic problems on domains
/// with a small hole.
#[derive(Parser, Debug)]
#[command(name = "holepoint", version, about)]
struct Cli {
    /// Command to run; must match the config's "command" field.
    command: String,
    /// Path to the JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Directory for report files (defaults to the working directory).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Suppress the stdout summary.
    #[arg(long)]
    quiet: bool,
}

fn main() {
    let cli = Cli::parse();
    // the positional command must agree with the config file
    let text = match std::fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("config error: cannot read {}: {e}", cli.config.display());
            std::process::exit(1);
        }
    };
    let cfg = match holepoint_cli::ExperimentConfig::from_json(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e:#}");
            std::process::exit(1);
        }
    };
    if cfg.command.to_string() != cli.command {
        eprintln!(
            "config error: command line says '{}' but the config says '{}'",
            cli.command, cfg.command
        );
        std::process::exit(1);
    }
    let (code, summary) = match holepoint_cli::run(&cfg, cli.out.as_deref()) {
        Ok(out) => (out.status.code(), out.summary),
        Err(e) => (2, format!("run failed: {e:#}\n")),
    };
    if !cli.quiet {
        print!("{summary}");
    }
    std::process::exit(code);
}
