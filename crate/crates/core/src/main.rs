use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use cipfem::study::{all_passed, run_study, sidecar_path, write_outputs, StudyConfig, StudyKind};

/// Runs a CIP-FEM study and writes its rows as CSV with a JSON sidecar.
#[derive(Debug, Parser)]
#[command(name = "cipfem", version)]
struct Cli {
    /// Study kind; overrides the config file, or selects a built-in grid without one.
    #[arg(long, value_enum)]
    study: Option<StudyKind>,

    /// Flat JSON study configuration.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Output CSV path (default `<study>.csv`).
    #[arg(long)]
    out: Option<PathBuf>,

    /// Quadrature exactness degree (at least 2p).
    #[arg(long)]
    quad_degree: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut config = match (&cli.config, cli.study) {
        (Some(path), study) => match StudyConfig::load(path) {
            Ok(mut c) => {
                if let Some(s) = study {
                    c.study = s;
                }
                c
            }
            Err(e) => {
                eprintln!("error: {}: {e}", path.display());
                return ExitCode::from(2);
            }
        },
        (None, Some(study)) => StudyConfig::preset(study),
        (None, None) => {
            eprintln!("error: either --study or --config is required");
            return ExitCode::from(2);
        }
    };
    if let Some(out) = cli.out {
        config.out = Some(out);
    }
    if let Some(q) = cli.quad_degree {
        config.quad_degree = Some(q);
    }
    if let Err(e) = config.validate() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let out = config.out.clone().unwrap_or_else(|| PathBuf::from(format!("{}.csv", config.study.name())));

    let rows = match run_study(&config) {
        Ok(rows) => rows,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Err(e) = write_outputs(&config, &rows, &out) {
        eprintln!("error: writing {}: {e}", out.display());
        return ExitCode::from(2);
    }

    let asserted = rows.iter().filter(|r| r.asserted).count();
    let failed = rows.iter().filter(|r| r.asserted && !r.passed()).count();
    eprintln!(
        "{}: {} rows ({asserted} asserted, {failed} failed) -> {} (+ {})",
        config.study.name(),
        rows.len(),
        out.display(),
        sidecar_path(&out).display()
    );
    if all_passed(&rows) {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
