use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use skewstable::golden::GoldenStore;
use skewstable_cli::{apply_overrides, oracle, report, run, CliError, ExperimentConfig};

#[derive(Parser)]
#[command(name = "skewstable", version, about = "Experiments for skew-perturbed stable processes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Master seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory (run), store path (oracle) or report directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment from a JSON config.
    Run { config: PathBuf },
    /// Regenerate golden values with 10x default budgets.
    Oracle {
        /// Keys, key prefixes, or `all`.
        #[arg(required = true)]
        keys: Vec<String>,
        #[arg(long, default_value = oracle::DEFAULT_STORE)]
        store: PathBuf,
        /// Acknowledges the high-budget run.
        #[arg(long)]
        high_budget: bool,
        /// Overwrite entries that drifted by more than 3 sigma.
        #[arg(long)]
        force: bool,
    },
    /// Merge the runs under a directory into report.md and gates.csv.
    Report { run_dir: PathBuf },
}

fn workers(n: Option<usize>) -> usize {
    n.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}

fn dispatch(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Run { config } => {
            let raw = std::fs::read_to_string(&config)
                .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", config.display())))?;
            let mut cfg = ExperimentConfig::parse(&raw)?;
            apply_overrides(&mut cfg, cli.seed, cli.out.as_deref());
            let r = run(&cfg, &raw, workers(cli.workers))?;
            for g in &r.manifest.gates {
                println!("{} {}: {}", if g.pass { "PASS" } else { "FAIL" }, g.name, g.detail);
            }
            if let Some(e) = &r.manifest.error {
                eprintln!("error: {e}");
            }
            println!("{} -> {}", r.manifest.status, r.dir.display());
            Ok(r.exit_code)
        }
        Command::Oracle {
            keys,
            store,
            high_budget,
            force,
        } => {
            if !high_budget {
                return Err(CliError::Validation(
                    "oracle runs use 10x default budgets; pass --high-budget to proceed".into(),
                ));
            }
            let mut golden = if store.is_file() {
                GoldenStore::load(&store)?
            } else {
                GoldenStore::default()
            };
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers(cli.workers))
                .build()
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            let lines = pool.install(|| oracle::regenerate(&mut golden, &keys, 10, force))?;
            for l in &lines {
                println!("{} = {} (tol {:.1e}, drift {:.2} sigma)", l.key, l.entry.value, l.entry.tolerance, l.drift_sigma);
            }
            golden.save(cli.out.as_deref().unwrap_or(&store))?;
            Ok(0)
        }
        Command::Report { run_dir } => {
            let p = report::write_report(&run_dir)?;
            if let Some(out) = cli.out {
                std::fs::create_dir_all(&out)?;
                std::fs::copy(&p, out.join("report.md"))?;
                std::fs::copy(run_dir.join("gates.csv"), out.join("gates.csv"))?;
            }
            println!("{}", p.display());
            Ok(0)
        }
    }
}
