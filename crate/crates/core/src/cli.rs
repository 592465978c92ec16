//! Command-line driver.
//!
//! Exit codes: 0 on success, 2 when arguments are malformed or inconsistent,
//! 1 when a run or file operation fails.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::bandit::{BanditSpec, RegretEstimator, UcbConfig};
use crate::error::Error;
use crate::experiments::{self, Method, SweepTable};
use crate::io;
use crate::montecarlo::{
    default_parallelism, run_replications, AggregateStats, Engine, ReplicationTask,
};
use crate::sde::{ScaledSystem, SdeConfig};

#[derive(Debug, Parser)]
#[command(
    name = "ucb-limit",
    version,
    about = "UCB bandit regret: discrete simulation and SDE limit"
)]
struct Cli {
    /// Worker threads (defaults to $UCB_LIMIT_THREADS, then all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Mean normalized regret of the discrete UCB rule.
    Simulate {
        #[arg(
            long,
            value_delimiter = ',',
            allow_hyphen_values = true,
            required = true
        )]
        means: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        variances: Vec<f64>,
        #[arg(long)]
        horizon: u64,
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        #[arg(long, default_value_t = 10_000)]
        reps: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Use realized rewards instead of pseudo-regret.
        #[arg(long)]
        realized: bool,
    },
    /// Mean normalized regret of the limiting SDE system.
    Limit {
        #[arg(
            long,
            value_delimiter = ',',
            allow_hyphen_values = true,
            required = true
        )]
        c: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        d: Vec<f64>,
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        #[arg(long, default_value_t = 10_000)]
        reps: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Regret against the mean gap c2 for several methods.
    SweepC2 {
        #[arg(long, default_value_t = 0.0)]
        from: f64,
        #[arg(long, default_value_t = 10.0)]
        to: f64,
        #[arg(long, default_value_t = 0.2)]
        by: f64,
        /// Comma list of discrete:N and limit:h.
        #[arg(long, value_delimiter = ',', required = true)]
        methods: Vec<Method>,
        #[arg(long, default_value_t = 10_000)]
        reps: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Discrete regret against the horizon N.
    SweepHorizon {
        #[arg(long, default_value_t = 3)]
        n_from: u64,
        #[arg(long, default_value_t = 100)]
        n_to: u64,
        #[arg(long, default_value_t = 3.6)]
        c2: f64,
        #[arg(long, default_value_t = 10_000)]
        reps: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Location of the regret maximum in a c2 sweep.
    FindMax {
        #[arg(long = "in")]
        input: PathBuf,
        /// Method label; all methods when omitted.
        #[arg(long)]
        method: Option<String>,
    },
    /// Smallest horizon after which regret stays within (1 + tol) * limit.
    Threshold {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 0.73)]
        limit: f64,
        #[arg(long, default_value_t = 0.02)]
        tol: f64,
    },
}

enum Failure {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e)
    }
}

fn usage(e: Error) -> Failure {
    Failure::Usage(e.to_string())
}

/// Grid `from, from + by, ...` up to `to`, snapped to 1e-9 so that decimal
/// steps land on their decimal values.
pub fn linear_grid(from: f64, to: f64, by: f64) -> Result<Vec<f64>, Error> {
    if !(by > 0.0) || !from.is_finite() || !to.is_finite() || to < from {
        return Err(Error::Domain(format!("bad grid {from}..{to} by {by}")));
    }
    let n = ((to - from) / by + 1e-9).floor() as u64;
    Ok((0..=n)
        .map(|k| ((from + k as f64 * by) * 1e9).round() / 1e9)
        .collect())
}

fn stats_line(stats: &AggregateStats) -> String {
    let stderr = stats
        .stderr
        .map(|s| format!("{s:.6}"))
        .unwrap_or_else(|| "absent".into());
    format!(
        "mean={:.6} stderr={stderr} reps={}",
        stats.mean, stats.count
    )
}

fn write_outputs(table: &SweepTable, out: &Path, svg: Option<&Path>) -> Result<String, Failure> {
    io::write_csv(table, out)?;
    let mut line = format!("rows={} out={}", table.rows.len(), out.display());
    if let Some(svg) = svg {
        io::emit_svg(table, svg)?;
        line.push_str(&format!(" svg={}", svg.display()));
    }
    Ok(line)
}

fn execute(cli: Cli) -> Result<Vec<String>, Failure> {
    let threads = cli.threads.unwrap_or_else(default_parallelism);
    if threads == 0 {
        return Err(Failure::Usage("--threads must be at least 1".into()));
    }
    match cli.command {
        Command::Simulate {
            means,
            variances,
            horizon,
            a,
            reps,
            seed,
            realized,
        } => {
            let spec = BanditSpec::from_slices(&means, &variances, horizon).map_err(usage)?;
            let config = UcbConfig::new(a).map_err(usage)?;
            let estimator = if realized {
                RegretEstimator::Realized
            } else {
                RegretEstimator::Pseudo
            };
            let engine = Engine::Discrete {
                spec,
                config,
                estimator,
            };
            let task = ReplicationTask::new(engine, reps, seed).map_err(usage)?;
            Ok(vec![stats_line(&run_replications(&task, threads)?)])
        }
        Command::Limit {
            c,
            d,
            step,
            a,
            reps,
            seed,
        } => {
            let system = ScaledSystem::new(c, d, a).map_err(usage)?;
            let config = SdeConfig::new(system, step).map_err(usage)?;
            let task = ReplicationTask::new(Engine::Limit(config), reps, seed).map_err(usage)?;
            Ok(vec![stats_line(&run_replications(&task, threads)?)])
        }
        Command::SweepC2 {
            from,
            to,
            by,
            methods,
            reps,
            seed,
            out,
            svg,
        } => {
            let grid = linear_grid(from, to, by).map_err(usage)?;
            if grid.iter().any(|&c| c < 0.0) {
                return Err(Failure::Usage("c2 grid must be >= 0".into()));
            }
            if reps == 0 {
                return Err(Failure::Usage("--reps must be at least 1".into()));
            }
            let table = experiments::sweep_c2(&grid, &methods, reps, seed, threads)?;
            Ok(vec![write_outputs(&table, &out, svg.as_deref())?])
        }
        Command::SweepHorizon {
            n_from,
            n_to,
            c2,
            reps,
            seed,
            out,
            svg,
        } => {
            if n_from < 2 || n_to < n_from || !(c2 >= 0.0) || reps == 0 {
                return Err(Failure::Usage(format!(
                    "need 2 <= n-from <= n-to, c2 >= 0 and reps >= 1 (got {n_from}, {n_to}, {c2}, {reps})"
                )));
            }
            let table = experiments::sweep_horizon(n_from, n_to, c2, reps, seed, threads)?;
            Ok(vec![write_outputs(&table, &out, svg.as_deref())?])
        }
        Command::FindMax { input, method } => {
            let table = io::read_csv(&input)?;
            let methods: Vec<String> = match method {
                Some(m) => vec![m],
                None => table.methods().into_iter().map(String::from).collect(),
            };
            if methods.is_empty() {
                return Err(Error::Domain(format!("{} has no rows", input.display())).into());
            }
            let mut lines = Vec::new();
            for m in methods {
                let max = experiments::find_max_regret(&table, &m)?;
                let mut line = format!(
                    "method={m} x_star={} regret_star={:.6} boundary={}",
                    max.x_star, max.regret_star, max.boundary
                );
                if let Some((x, y)) = max.refined {
                    line.push_str(&format!(" refined_x={x:.4} refined_regret={y:.6}"));
                }
                lines.push(line);
            }
            Ok(lines)
        }
        Command::Threshold { input, limit, tol } => {
            if !(tol > 0.0) {
                return Err(Failure::Usage(format!("--tol must be > 0, got {tol}")));
            }
            let table = io::read_csv(&input)?;
            let n = experiments::find_threshold_horizon(&table, limit, tol)?;
            Ok(vec![match n {
                Some(n) => format!("n_star={n}"),
                None => "n_star=absent".into(),
            }])
        }
    }
}

/// Runs the CLI, writing to the given streams, and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{}", e.render());
                    0
                }
                _ => {
                    let _ = write!(stderr, "{}", e.render());
                    2
                }
            };
        }
    };
    match execute(cli) {
        Ok(lines) => {
            for line in lines {
                let _ = writeln!(stdout, "{line}");
            }
            0
        }
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(
                stderr,
                "error: {msg}\n\nFor more information, try '--help'."
            );
            2
        }
        Err(Failure::Runtime(e)) => {
            let _ = writeln!(stderr, "error: {e}");
            1
        }
    }
}

pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run(args, &mut std::io::stdout(), &mut std::io::stderr())
}
