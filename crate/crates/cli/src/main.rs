use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use wrom_cli::{compare, evaluate, gridinfo, run, CliError, ExperimentConfig};

#[derive(Parser)]
#[command(name = "wrom", version, about = "Weighted reduced order methods: experiment driver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a reduced model and write its error curve, archive and manifest.
    Build {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the training seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Use the full training-set sizes (500 Monte-Carlo nodes).
        #[arg(long)]
        full_scale: bool,
    },
    /// Reduced solutions and outputs for the parameters listed in a CSV file.
    Evaluate {
        #[arg(long)]
        archive: PathBuf,
        /// CSV with columns y_1..y_K.
        #[arg(long)]
        params: PathBuf,
        /// Use only the first N basis functions.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Align error curves of several runs; ratios are taken against the first.
    Compare {
        #[arg(required = true, num_args = 2..)]
        runs: Vec<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Write the training nodes and weights of a configuration.
    Gridinfo {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        full_scale: bool,
    },
}

fn dispatch(cmd: Command) -> Result<i32, CliError> {
    match cmd {
        Command::Build { config, seed, out, full_scale } => {
            let cfg = ExperimentConfig::load(&config)?.with_overrides(seed, full_scale);
            let outcome = run(&cfg, &out)?;
            let m = &outcome.manifest;
            match &m.breakdown {
                Some(b) => eprintln!(
                    "breakdown: singular reduced system at N = {} ({}), y = {:?}; curve kept up to N = {}",
                    b.n, b.stage, b.y, m.n_curve
                ),
                None => println!("{}: N = {} ({}), artifacts in {}", m.method, m.n_built, m.stop, out.display()),
            }
            Ok(outcome.exit_code())
        }
        Command::Evaluate { archive, params, n, out } => {
            let count = evaluate::evaluate(&archive, &params, n, &out)?;
            println!("evaluated {count} parameters into {}", out.join(evaluate::EVALUATIONS_CSV).display());
            Ok(0)
        }
        Command::Compare { runs, out } => {
            let loaded = compare::compare(&runs, &out)?;
            println!("compared {} runs into {}", loaded.len(), out.join(compare::COMPARISON_CSV).display());
            Ok(0)
        }
        Command::Gridinfo { config, seed, out, full_scale } => {
            let cfg = ExperimentConfig::load(&config)?.with_overrides(seed, full_scale);
            let set = gridinfo::gridinfo(&cfg, &out)?;
            let wmin = set.weights.iter().copied().fold(f64::INFINITY, f64::min);
            println!(
                "{}: {} nodes, weight sum {:e}, min weight {:e}",
                set.provenance,
                set.len(),
                set.weight_sum(),
                wmin
            );
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
