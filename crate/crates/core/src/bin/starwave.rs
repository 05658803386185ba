use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use starwave::config::parse_config;
use starwave::run::run;

/// Scalar field on a star-shaped lattice: dispersion, junction scattering,
/// normal modes and their inversion.
#[derive(Debug, Parser)]
#[command(name = "starwave", version)]
struct Cli {
    /// JSON run configuration.
    config: PathBuf,
    /// Output directory; overrides the config's `output.dir`.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Seed for random states; overrides the config's `seed`.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
}

const VALIDATION: u8 = 1;
const VERIFICATION: u8 = 2;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(VALIDATION),
            };
        }
    };
    let text = match std::fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", cli.config.display());
            return ExitCode::from(VALIDATION);
        }
    };
    let mut config = match parse_config(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(VALIDATION);
        }
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = cli.out {
        config.output_dir = out;
    }
    match run(&config, &config.output_dir) {
        Ok(outcome) => {
            // a closed stdout must not turn a finished run into a failure
            let mut out = std::io::stdout().lock();
            let _ = out.write_all(outcome.report.as_bytes());
            for f in &outcome.files {
                let _ = writeln!(out, "wrote {}", f.display());
            }
            if outcome.verified {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(VERIFICATION)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(VALIDATION)
        }
    }
}
