use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use super::{
    csv_string, evaluate_point, run_sweep, write_csv, write_sweep_outputs, ExperimentConfig,
};
use crate::error::Result;
use crate::learners::BaseLearnerConfig;
use crate::stream::RandomStream;
use crate::validation::{check_oracle_equivalence, run_validation_suite};

#[derive(Debug, Parser)]
#[command(
    name = "metacmi",
    version,
    about = "CMI generalization bounds for meta-learning"
)]
struct Cli {
    /// Config file (flat TOML keys); defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Overrides `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Overrides `mc_trials`.
    #[arg(long, global = true)]
    trials: Option<usize>,

    /// Overrides `output_dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate the bound at one number of training tasks.
    Bound {
        #[arg(long, short)]
        n: usize,
    },
    /// Bound, E[L(U)] and true gap for every N in `n_sweep`.
    Sweep,
    /// Run the numerical certification suite; exits 1 on any failure.
    Validate,
    /// Compare exact CMI values with brute-force enumeration at N, M ≤ 2.
    Oracle,
}

/// Parses `argv` (including the program name), runs the subcommand and
/// returns the process exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn resolve_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = cli.trials {
        cfg.mc_trials = trials;
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<i32> {
    let cfg = resolve_config(&cli)?;
    let mut stdout = std::io::stdout().lock();
    match cli.command {
        Command::Bound { n } => {
            if n == 0 {
                eprintln!("error: --n must be ≥ 1");
                return Ok(2);
            }
            let (row, report) = evaluate_point(&cfg, n, &RandomStream::from_seed(cfg.seed))?;
            writeln!(
                stdout,
                "N={} M={} bound={:.6} ± {:.6} (env {:.6}, task {:.6}, cap {:.6})",
                report.n,
                report.m,
                report.bound_value,
                report.bound_stderr,
                report.env_term,
                report.task_term,
                report.cap_value
            )?;
            write!(stdout, "{}", csv_string(std::slice::from_ref(&row))?)?;
            if cli.out.is_some() {
                std::fs::create_dir_all(&cfg.output_dir)?;
                let path = cfg.output_dir.join("bound.csv");
                write_csv(&[row], std::fs::File::create(&path)?)?;
                eprintln!("wrote {}", path.display());
            }
            Ok(0)
        }
        Command::Sweep => {
            let rows = run_sweep(&cfg)?;
            write!(stdout, "{}", csv_string(&rows)?)?;
            let (csv_path, svg_path) = write_sweep_outputs(&rows, &cfg.output_dir)?;
            eprintln!("wrote {} and {}", csv_path.display(), svg_path.display());
            Ok(0)
        }
        Command::Validate => {
            let results = run_validation_suite(
                &cfg.environment()?,
                cfg.m,
                &cfg.learner()?,
                cfg.mc_trials,
                &RandomStream::from_seed(cfg.seed),
            )?;
            for r in &results {
                writeln!(stdout, "{r}")?;
            }
            let failed = results.iter().filter(|r| !r.passed).count();
            writeln!(stdout, "{} checks, {failed} failed", results.len())?;
            Ok(i32::from(failed > 0))
        }
        Command::Oracle => {
            let env = cfg.environment()?;
            let learner: BaseLearnerConfig<f64> = cfg.learner()?;
            let root = RandomStream::from_seed(cfg.seed);
            let mut failed = 0;
            for (k, (n, m)) in [(1, 1), (1, 2), (2, 1), (2, 2)].into_iter().enumerate() {
                let r = check_oracle_equivalence(
                    &env,
                    n,
                    m,
                    &learner,
                    cfg.mc_trials,
                    &root.substream(k as u64),
                )?;
                failed += usize::from(!r.passed);
                writeln!(stdout, "{r}")?;
            }
            Ok(i32::from(failed > 0))
        }
    }
}
