use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use popp_cli::commands::{analyze, distort, qrcheck, CliError, MetricPair, Outcome};
use popp_cli::json::render;
use popp_cli::manifest::{parse_matrix, Manifest};
use popp_cli::selftest::{selftest, SelftestConfig};
use popp_core::ExactMatrix;

/// Flags, Popp volumes and quasiregular distortion on polynomial subRiemannian manifolds.
#[derive(Parser)]
#[command(name = "popp", version)]
struct Cli {
    /// Numerical tolerance; defaults to the manifest's `options.tol`.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    json: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Flag, adapted frame, structure constants and Popp density at each sample point.
    Analyze { manifest: PathBuf, manifold: String },
    /// Distortion of a second metric against the manifold's own, or of random pairs.
    Distort {
        manifest: PathBuf,
        manifold: String,
        /// Constant SPD matrix, rows separated by ';', e.g. "1,0;0,4".
        #[arg(long, value_name = "MATRIX", conflicts_with = "random")]
        metric_b: Option<String>,
        /// Number of random metric pairs.
        #[arg(long, value_name = "N")]
        random: Option<usize>,
        #[arg(long, requires = "random")]
        seed: Option<u64>,
    },
    /// Contact check and quasiregularity constants of a map at its sample points.
    Qrcheck { manifest: PathBuf, map: String },
    /// Runs the built-in property suites.
    Selftest {
        #[arg(long)]
        seed: Option<u64>,
        /// Manifest supplying manifolds and maps; defaults to the bundled one.
        #[arg(long, value_name = "PATH")]
        manifest: Option<PathBuf>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
}

fn load(path: &Path) -> Result<Manifest, CliError> {
    Ok(Manifest::load(path)?)
}

fn run(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Analyze { manifest, manifold } => analyze(&load(manifest)?, manifold),
        Command::Distort { manifest, manifold, metric_b, random, seed } => {
            let m = load(manifest)?;
            let tol = cli.tol.unwrap_or(m.options.tol);
            let pair = match (metric_b, random) {
                (Some(s), _) => {
                    MetricPair::Inline(ExactMatrix::from_rows(parse_matrix(s).map_err(|e| CliError::Input(format!("--metric-b: {e}")))?))
                }
                (None, Some(count)) => {
                    let seed = seed
                        .or(m.options.seed)
                        .ok_or_else(|| CliError::Input("--random needs --seed or options.seed in the manifest".into()))?;
                    MetricPair::Random { count: *count, seed }
                }
                (None, None) => return Err(CliError::Input("distort needs --metric-b or --random".into())),
            };
            distort(&m, manifold, &pair, tol)
        }
        Command::Qrcheck { manifest, map } => {
            let m = load(manifest)?;
            let tol = cli.tol.unwrap_or(m.options.tol);
            qrcheck(&m, map, tol)
        }
        Command::Selftest { seed, manifest, samples, inject_fault } => {
            let m = match manifest {
                Some(p) => load(p)?,
                None => Manifest::bundled(),
            };
            let cfg = SelftestConfig {
                seed: seed.or(m.options.seed).unwrap_or(1),
                tol: cli.tol.unwrap_or(m.options.tol),
                samples: samples.unwrap_or(m.options.samples),
                inject_fault: *inject_fault,
            };
            Ok(selftest(&m, &cfg))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            let text = render(&outcome.report);
            match &cli.json {
                Some(path) => {
                    if let Err(e) = std::fs::write(path, &text) {
                        eprintln!("error: cannot write {}: {e}", path.display());
                        return ExitCode::from(2);
                    }
                }
                None => print!("{text}"),
            }
            for m in &outcome.messages {
                eprintln!("{m}");
            }
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
